#include "latentpath/psychometrics.hpp"

#include "latentpath/distributions.hpp"
#include "latentpath/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

namespace latentpath {

namespace {

void check_lengths(std::span<const double> loadings, std::span<const double> error_variances) {
    if (loadings.empty()) throw Error("empty loading list");
    if (loadings.size() != error_variances.size()) {
        throw Error(fmt::format("{} loadings but {} error variances", loadings.size(), error_variances.size()));
    }
    for (double v : error_variances) {
        if (v < 0.0) throw Error(fmt::format("negative error variance {}", v));
    }
}

double log_det_pd(const Eigen::MatrixXd& r, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success) throw NumericalError(fmt::format("{} is not positive definite", what));
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

double cronbach_alpha(const Eigen::MatrixXd& items) {
    const Eigen::Index k = items.cols();
    if (k < 2) throw Error("Cronbach's alpha needs at least two items");

    std::vector<Eigen::Index> complete;
    for (Eigen::Index r = 0; r < items.rows(); ++r) {
        if (!items.row(r).array().isNaN().any()) complete.push_back(r);
    }
    const auto n = static_cast<Eigen::Index>(complete.size());
    if (n < 2) throw Error("Cronbach's alpha needs at least two complete rows");

    Eigen::MatrixXd x(n, k);
    for (Eigen::Index r = 0; r < n; ++r) x.row(r) = items.row(complete[static_cast<std::size_t>(r)]);
    x.rowwise() -= x.colwise().mean();

    const double item_var_sum = x.array().square().colwise().sum().sum();
    const Eigen::VectorXd totals = x.rowwise().sum();
    const double total_var = totals.squaredNorm();
    if (!(total_var > 0.0)) throw NumericalError("Cronbach's alpha undefined: total score has zero variance");

    const double kd = static_cast<double>(k);
    return (kd / (kd - 1.0)) * (1.0 - item_var_sum / total_var);
}

std::vector<double> standardized_error_variances(std::span<const double> loadings) {
    std::vector<double> out;
    out.reserve(loadings.size());
    for (double l : loadings) out.push_back(1.0 - l * l);
    return out;
}

double composite_reliability(std::span<const double> loadings, std::span<const double> error_variances) {
    check_lengths(loadings, error_variances);
    const double sum = std::accumulate(loadings.begin(), loadings.end(), 0.0);
    const double err = std::accumulate(error_variances.begin(), error_variances.end(), 0.0);
    return sum * sum / (sum * sum + err);
}

double composite_reliability(std::span<const double> loadings) {
    const auto err = standardized_error_variances(loadings);
    return composite_reliability(loadings, err);
}

double average_variance_extracted(std::span<const double> loadings, std::span<const double> error_variances) {
    check_lengths(loadings, error_variances);
    const double sq = std::inner_product(loadings.begin(), loadings.end(), loadings.begin(), 0.0);
    const double err = std::accumulate(error_variances.begin(), error_variances.end(), 0.0);
    return sq / (sq + err);
}

double average_variance_extracted(std::span<const double> loadings) {
    const auto err = standardized_error_variances(loadings);
    return average_variance_extracted(loadings, err);
}

double kmo(const Eigen::MatrixXd& r) {
    const Eigen::Index p = r.rows();
    if (p != r.cols() || p < 2) throw Error("KMO needs a square correlation matrix of order >= 2");
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success) throw NumericalError("KMO undefined: correlation matrix is singular");
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));

    double r2 = 0.0, q2 = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (i == j) continue;
            const double q = -inv(i, j) / std::sqrt(inv(i, i) * inv(j, j));
            r2 += r(i, j) * r(i, j);
            q2 += q * q;
        }
    }
    if (r2 + q2 == 0.0) throw NumericalError("KMO undefined: no off-diagonal correlation (0/0)");
    return r2 / (r2 + q2);
}

BartlettResult bartlett(const Eigen::MatrixXd& r, int n) {
    const auto p = static_cast<int>(r.rows());
    if (r.cols() != p) throw Error("Bartlett's test needs a square correlation matrix");
    if (n <= p) throw Error(fmt::format("Bartlett's test needs n > p (n = {}, p = {})", n, p));
    const double log_det = log_det_pd(r, "correlation matrix");

    BartlettResult out;
    out.chi_square = -(n - 1.0 - (2.0 * p + 5.0) / 6.0) * log_det;
    if (out.chi_square <= 0.0) out.chi_square = 0.0;
    out.df = p * (p - 1) / 2;
    out.p_value = chi_square_upper_tail(out.chi_square, out.df);
    return out;
}

FornellLarcker fornell_larcker(const std::vector<std::string>& names, std::span<const double> ave,
                               const Eigen::MatrixXd& correlations) {
    const auto k = static_cast<Eigen::Index>(names.size());
    if (static_cast<Eigen::Index>(ave.size()) != k || correlations.rows() != k || correlations.cols() != k) {
        throw Error("Fornell-Larcker inputs disagree in dimension");
    }
    FornellLarcker out;
    out.names = names;
    out.table = Eigen::MatrixXd::Zero(k, k);
    out.passes.resize(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        const double root = std::sqrt(ave[static_cast<std::size_t>(i)]);
        out.table(i, i) = root;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (j == i) continue;
            worst = std::max(worst, std::abs(correlations(i, j)));
            if (j < i) out.table(i, j) = correlations(i, j);
        }
        out.passes[static_cast<std::size_t>(i)] = root > worst;
    }
    return out;
}

}  // namespace latentpath
