#include "latentpath/fit_indices.hpp"

#include "latentpath/distributions.hpp"
#include "latentpath/error.hpp"
#include "latentpath/sem.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace latentpath {

namespace {

constexpr double kGuard = 1e-12;

}  // namespace

Baseline baseline(const Eigen::MatrixXd& s, double multiplier) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw NumericalError("sample covariance matrix is not positive definite");
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double log_diag = s.diagonal().array().log().sum();
    const auto p = static_cast<int>(s.rows());
    return {multiplier * std::max(log_diag - log_det, 0.0), p * (p - 1) / 2};
}

double rmsea(double chi_square, int df, int n) {
    if (df <= 0 || n <= 1) throw Error("RMSEA needs df > 0 and n > 1");
    return std::sqrt(std::max(chi_square - df, 0.0) / (static_cast<double>(df) * (n - 1)));
}

FitIndexReport indices(const IndexInputs& in) {
    if (in.df <= 0 || in.null_df <= 0) throw Error("fit indices need df > 0 and a baseline with df > 0");
    const auto p = static_cast<int>(in.s.rows());

    FitIndexReport r;
    r.chi_square = in.chi_square;
    r.df = in.df;
    r.p_value = chi_square_upper_tail(in.chi_square, in.df);
    r.null_chi_square = in.null_chi_square;
    r.null_df = in.null_df;

    const double df = in.df, df0 = in.null_df, chi = in.chi_square, chi0 = in.null_chi_square;
    r.chi_square_ratio = chi / df;
    r.rmsea = rmsea(chi, in.df, in.n);

    const double excess0 = chi0 - df0;
    r.cfi = excess0 > kGuard ? std::clamp(1.0 - std::max(chi - df, 0.0) / excess0, 0.0, 1.0) : 1.0;

    if (chi0 > kGuard) {
        r.nfi = std::clamp((chi0 - chi) / chi0, 0.0, 1.0);
    } else {
        r.undefined.push_back("NFI");
    }
    const double ratio0 = chi0 / df0;
    if (std::abs(ratio0 - 1.0) > kGuard) {
        r.tli = (ratio0 - chi / df) / (ratio0 - 1.0);
    } else {
        r.undefined.push_back("TLI");
    }

    Eigen::LLT<Eigen::MatrixXd> llt(in.sigma);
    if (llt.info() == Eigen::Success) {
        const Eigen::MatrixXd a = llt.solve(in.s);  // Sigma^-1 S
        const Eigen::MatrixXd resid = a - Eigen::MatrixXd::Identity(p, p);
        const double num = (resid * resid).trace();
        const double den = (a * a).trace();
        r.gfi = 1.0 - num / den;
        r.agfi = 1.0 - (1.0 - *r.gfi) * (p * (p + 1.0)) / (2.0 * df);
        r.pgfi = (df / (p * (p + 1.0) / 2.0)) * *r.gfi;
    } else {
        r.undefined.insert(r.undefined.end(), {"GFI", "AGFI", "PGFI"});
    }
    if (r.nfi) r.pnfi = (df / df0) * *r.nfi;
    r.pcfi = (df / df0) * *r.cfi;

    auto add = [&](const std::string& name, const std::optional<double>& v, const std::string& standard, auto pass) {
        r.checks.push_back({name, v, standard, v.has_value() && pass(*v)});
    };
    auto above = [](double t) { return [t](double v) { return v > t; }; };
    auto below = [](double t) { return [t](double v) { return v < t; }; };
    add("Chi/DF", r.chi_square_ratio, "< 5", below(5.0));
    // A significant chi-square is listed as meeting the standard, matching the published layout.
    add("P", r.p_value, "< 0.05", below(0.05));
    add("GFI", r.gfi, "> 0.9", above(0.9));
    add("AGFI", r.agfi, "> 0.9", above(0.9));
    add("TLI", r.tli, "> 0.9", above(0.9));
    add("NFI", r.nfi, "> 0.9", above(0.9));
    add("CFI", r.cfi, "> 0.9", above(0.9));
    add("PNFI", r.pnfi, "> 0.5", above(0.5));
    add("PCFI", r.pcfi, "> 0.5", above(0.5));
    add("PGFI", r.pgfi, "> 0.5", above(0.5));
    add("RMSEA", r.rmsea, "< 0.08", below(0.08));
    return r;
}

FitIndexReport indices(const FitResult& result, const Eigen::MatrixXd& s) {
    const double multiplier = result.multiplier == ChiSquareMultiplier::N ? result.n : result.n - 1.0;
    const Baseline b = baseline(s, multiplier);
    return indices({result.chi_square, result.df, b.chi_square, b.df, result.n, s, result.implied});
}

}  // namespace latentpath
