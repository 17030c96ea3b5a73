#include "latentpath/distributions.hpp"
#include "latentpath/error.hpp"
#include "latentpath/sem.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace latentpath {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int variable_position(const ParamMatrices& m, const std::string& name) {
    auto it = std::find(m.variable_order.begin(), m.variable_order.end(), name);
    return static_cast<int>(it - m.variable_order.begin());
}

/// Marker (first) indicator of a latent, in the internal observed order.
std::string marker_of(const ParamMatrices& m, const std::string& latent) {
    auto first_loading = [&](const std::vector<std::string>& latents, const std::vector<std::string>& observed,
                             const MatrixPattern& lambda) -> std::string {
        auto it = std::find(latents.begin(), latents.end(), latent);
        if (it == latents.end()) return {};
        const auto j = static_cast<Eigen::Index>(it - latents.begin());
        for (Eigen::Index i = 0; i < lambda.value.rows(); ++i) {
            if (lambda.index(i, j) >= 0 || lambda.value(i, j) != 0.0) return observed[static_cast<std::size_t>(i)];
        }
        return {};
    };
    auto found = first_loading(m.eta, m.y, m.lambda_y);
    return found.empty() ? first_loading(m.xi, m.x, m.lambda_x) : found;
}

double multiplier_value(ChiSquareMultiplier multiplier, int n) {
    return multiplier == ChiSquareMultiplier::N ? static_cast<double>(n) : static_cast<double>(n - 1);
}

std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

struct Minimum {
    Eigen::VectorXd theta;
    double f = 0.0;
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;
    std::string message;
    std::vector<double> trace;
};

/// BFGS on the inverse Hessian with Armijo backtracking. A step that lands on
/// a non-positive-definite Sigma is halved like any other rejected step.
Minimum minimize(const MlObjective& objective, Eigen::VectorXd x, const EstimationOptions& options) {
    const Eigen::Index t = x.size();
    Minimum out;
    Eigen::VectorXd g;
    auto f0 = objective.value_and_gradient(view(x), g);
    if (!f0) throw NumericalError("start values give a non-positive-definite implied covariance matrix");
    double f = *f0;
    out.trace.push_back(f);

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(t, t);
    bool scaled = false;
    int stalled = 0;
    int iter = 0;
    for (; iter < options.max_iter; ++iter) {
        if (g.norm() <= options.gtol) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd d = -h * g;
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            h.setIdentity();
            d = -g;
            slope = -g.squaredNorm();
        }

        double alpha = 1.0;
        Eigen::VectorXd x_new, g_new;
        double f_new = 0.0;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            x_new = x + alpha * d;
            auto value = objective.value_and_gradient(view(x_new), g_new);
            if (value && *value <= f + 1e-4 * alpha * slope) {
                f_new = *value;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (h.isIdentity()) {
                out.message = "line search failed";
                break;
            }
            h.setIdentity();
            continue;
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                h *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::VectorXd hy = h * y;
            h += (rho * rho * y.dot(hy) + rho) * s * s.transpose() - rho * (hy * s.transpose() + s * hy.transpose());
        }

        const double decrease = f - f_new;
        x = std::move(x_new);
        g = std::move(g_new);
        f = f_new;
        out.trace.push_back(f);
        stalled = decrease <= options.ftol * std::max(1.0, std::abs(f)) ? stalled + 1 : 0;
        if (stalled >= 5) {
            out.converged = g.norm() <= options.gtol;
            if (!out.converged) out.message = "objective stalled";
            ++iter;
            break;
        }
    }
    if (!out.converged && out.message.empty()) {
        if (g.norm() <= options.gtol) {
            out.converged = true;
        } else {
            out.message = fmt::format("iteration limit {} reached", options.max_iter);
        }
    }
    out.theta = std::move(x);
    out.f = f;
    out.gradient = std::move(g);
    out.iterations = iter;
    return out;
}

}  // namespace

std::vector<double> start_values(const ParamMatrices& m, const Eigen::MatrixXd& s) {
    std::vector<double> theta(m.parameters.size(), 0.0);
    for (std::size_t k = 0; k < m.parameters.size(); ++k) {
        const auto& p = m.parameters[k];
        switch (p.kind) {
            case ParameterKind::Loading: theta[k] = 0.7; break;
            case ParameterKind::Path: theta[k] = 0.0; break;
            case ParameterKind::LatentVariance:
            case ParameterKind::DisturbanceVariance: {
                const auto marker = marker_of(m, p.lhs);
                const int i = variable_position(m, marker);
                theta[k] = 0.5 * s(i, i);
                break;
            }
            case ParameterKind::ErrorVariance: {
                const int i = variable_position(m, p.lhs);
                theta[k] = 0.5 * s(i, i);
                break;
            }
            case ParameterKind::LatentCovariance:
            case ParameterKind::DisturbanceCovariance:
            case ParameterKind::ErrorCovariance: theta[k] = 0.0; break;
        }
    }
    return theta;
}

Eigen::MatrixXd parameter_covariance(const MlObjective& objective, std::span<const double> theta, double multiplier) {
    const auto t = static_cast<Eigen::Index>(theta.size());
    Eigen::MatrixXd hessian(t, t);
    Eigen::VectorXd base = Eigen::Map<const Eigen::VectorXd>(theta.data(), t);
    for (Eigen::Index k = 0; k < t; ++k) {
        const double step = 1e-5 * std::max(1.0, std::abs(base(k)));
        Eigen::VectorXd up = base, down = base;
        up(k) += step;
        down(k) -= step;
        Eigen::VectorXd g_up, g_down;
        if (!objective.value_and_gradient(view(up), g_up) || !objective.value_and_gradient(view(down), g_down)) {
            return Eigen::MatrixXd::Constant(t, t, kNaN);
        }
        hessian.col(k) = (g_up - g_down) / (2.0 * step);
    }
    hessian = (0.5 * multiplier * 0.5 * (hessian + hessian.transpose())).eval();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || (ldlt.vectorD().array() <= 0.0).any()) {
        return Eigen::MatrixXd::Constant(t, t, kNaN);
    }
    return ldlt.solve(Eigen::MatrixXd::Identity(t, t));
}

StandardizedSolution standardize(const ParamMatrices& m, std::span<const double> theta) {
    const LisrelMatrices raw = evaluate(m, theta);
    const Eigen::MatrixXd c = latent_covariance(m, theta);
    const Eigen::MatrixXd sigma = implied_covariance(m, theta);

    const auto ne = static_cast<Eigen::Index>(m.eta.size());
    const auto nx = static_cast<Eigen::Index>(m.xi.size());
    Eigen::VectorXd latent_sd(ne + nx);
    for (Eigen::Index i = 0; i < ne + nx; ++i) {
        if (!(c(i, i) > 0.0)) throw NumericalError("non-positive implied latent variance; cannot standardize");
        latent_sd(i) = std::sqrt(c(i, i));
    }
    auto observed_sd = [&](const std::string& name) {
        const int i = variable_position(m, name);
        if (!(sigma(i, i) > 0.0)) throw NumericalError("non-positive implied indicator variance; cannot standardize");
        return std::sqrt(sigma(i, i));
    };
    Eigen::VectorXd y_sd(static_cast<Eigen::Index>(m.y.size())), x_sd(static_cast<Eigen::Index>(m.x.size()));
    for (std::size_t i = 0; i < m.y.size(); ++i) y_sd(static_cast<Eigen::Index>(i)) = observed_sd(m.y[i]);
    for (std::size_t i = 0; i < m.x.size(); ++i) x_sd(static_cast<Eigen::Index>(i)) = observed_sd(m.x[i]);
    const Eigen::VectorXd eta_sd = latent_sd.head(ne);
    const Eigen::VectorXd xi_sd = latent_sd.tail(nx);

    auto scale = [](const Eigen::MatrixXd& mat, const Eigen::VectorXd& row_sd, const Eigen::VectorXd& col_sd) {
        return Eigen::MatrixXd(row_sd.cwiseInverse().asDiagonal() * mat * col_sd.asDiagonal());
    };
    auto correlate = [](const Eigen::MatrixXd& mat, const Eigen::VectorXd& sd) {
        const Eigen::VectorXd inv = sd.cwiseInverse();
        return Eigen::MatrixXd(inv.asDiagonal() * mat * inv.asDiagonal());
    };

    StandardizedSolution out;
    out.matrices.lambda_y = scale(raw.lambda_y, y_sd, eta_sd);
    out.matrices.lambda_x = scale(raw.lambda_x, x_sd, xi_sd);
    out.matrices.beta = scale(raw.beta, eta_sd, eta_sd);
    out.matrices.gamma = scale(raw.gamma, eta_sd, xi_sd);
    out.matrices.phi = correlate(raw.phi, xi_sd);
    out.matrices.psi = correlate(raw.psi, eta_sd);
    out.matrices.theta_eps = correlate(raw.theta_eps, y_sd);
    out.matrices.theta_delta = correlate(raw.theta_delta, x_sd);
    out.latent_correlation = correlate(c, latent_sd);

    out.parameters.assign(m.parameters.size(), kNaN);
    auto collect = [&](const MatrixPattern& pattern, const Eigen::MatrixXd& values) {
        for (Eigen::Index j = 0; j < pattern.index.cols(); ++j) {
            for (Eigen::Index i = 0; i < pattern.index.rows(); ++i) {
                if (const int k = pattern.index(i, j); k >= 0) out.parameters[static_cast<std::size_t>(k)] = values(i, j);
            }
        }
    };
    collect(m.lambda_y, out.matrices.lambda_y);
    collect(m.lambda_x, out.matrices.lambda_x);
    collect(m.beta, out.matrices.beta);
    collect(m.gamma, out.matrices.gamma);
    collect(m.phi, out.matrices.phi);
    collect(m.psi, out.matrices.psi);
    collect(m.theta_eps, out.matrices.theta_eps);
    collect(m.theta_delta, out.matrices.theta_delta);
    return out;
}

StandardizedSolution standardize(const FitResult& result) { return standardize(result.model, result.theta); }

double standardized_loading(const FitResult& result, const std::string& indicator) {
    const auto& m = result.model;
    auto lookup = [&](const std::vector<std::string>& observed, const Eigen::MatrixXd& lambda) -> std::optional<double> {
        auto it = std::find(observed.begin(), observed.end(), indicator);
        if (it == observed.end()) return std::nullopt;
        const auto i = static_cast<Eigen::Index>(it - observed.begin());
        Eigen::Index j = 0;
        lambda.row(i).cwiseAbs().maxCoeff(&j);
        return lambda(i, j);
    };
    if (auto v = lookup(m.y, result.standardized.matrices.lambda_y)) return *v;
    if (auto v = lookup(m.x, result.standardized.matrices.lambda_x)) return *v;
    throw ModelError(fmt::format("'{}' is not an indicator of the model", indicator));
}

const ParameterEstimate* FitResult::find(const std::string& name_or_label) const {
    for (const auto& e : estimates) {
        if (e.name == name_or_label || (!e.label.empty() && e.label == name_or_label)) return &e;
    }
    return nullptr;
}

FitResult fit(const ModelSpec& spec, const SampleMoments& moments, const EstimationOptions& options) {
    return fit(build_matrices(spec, moments.names, options.identification), moments, options);
}

FitResult fit(const ParamMatrices& m, const SampleMoments& moments, const EstimationOptions& options) {
    if (options.max_iter < 1 || !(options.gtol > 0.0) || !(options.ftol > 0.0)) {
        throw Error("estimation tolerances and iteration limit must be positive");
    }
    const DegreesOfFreedom dof = count_df(m, moments.p);
    if (dof.under_identified) {
        throw IdentificationError(fmt::format("model is under-identified: {} free parameters for {} moments (df = {})",
                                              dof.parameters, dof.moments, dof.df));
    }
    if (moments.names != m.variable_order) throw ModelError("sample moments and model disagree on variable order");

    const MlObjective objective(m, moments.covariance);
    std::vector<double> start = options.start ? *options.start : start_values(m, moments.covariance);
    if (static_cast<int>(start.size()) != m.free_count()) throw Error("start vector has the wrong length");

    Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(start.data(), static_cast<Eigen::Index>(start.size()));
    Minimum best = minimize(objective, x0, options);

    FitResult r;
    r.model = m;
    r.theta.assign(best.theta.data(), best.theta.data() + best.theta.size());
    r.f_min = best.f;
    r.n = moments.n;
    r.multiplier = options.multiplier;
    r.chi_square = multiplier_value(options.multiplier, moments.n) * best.f;
    r.df = dof.df;
    r.iterations = best.iterations;
    r.gradient_norm = best.gradient.norm();
    r.converged = best.converged;
    r.message = best.converged ? "converged" : best.message;
    r.objective_trace = std::move(best.trace);
    r.implied = implied_covariance(m, r.theta);

    const auto t = static_cast<Eigen::Index>(r.theta.size());
    if (options.standard_errors) {
        r.parameter_covariance = parameter_covariance(objective, r.theta, multiplier_value(options.multiplier, r.n));
    } else {
        r.parameter_covariance = Eigen::MatrixXd::Constant(t, t, kNaN);
    }
    r.se.resize(r.theta.size());
    for (Eigen::Index k = 0; k < t; ++k) {
        const double v = r.parameter_covariance(k, k);
        r.se[static_cast<std::size_t>(k)] = v > 0.0 ? std::sqrt(v) : kNaN;
    }

    try {
        r.standardized = standardize(m, r.theta);
    } catch (const NumericalError&) {
        r.standardized.parameters.assign(r.theta.size(), kNaN);
    }

    for (std::size_t k = 0; k < r.theta.size(); ++k) {
        const auto& p = m.parameters[k];
        ParameterEstimate e{p.name, p.label, p.kind, p.lhs, p.rhs};
        e.estimate = r.theta[k];
        e.se = r.se[k];
        e.z = e.estimate / e.se;
        e.p_value = normal_two_sided_p(e.z);
        e.standardized = r.standardized.parameters[k];
        const bool variance = p.kind == ParameterKind::ErrorVariance || p.kind == ParameterKind::LatentVariance ||
                              p.kind == ParameterKind::DisturbanceVariance;
        e.heywood = variance && e.estimate < 0.0;
        if (e.heywood) r.heywood.push_back(p.name);
        r.estimates.push_back(std::move(e));
    }
    return r;
}

}  // namespace latentpath
