#include "latentpath/sem.hpp"

#include "latentpath/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <random>

namespace latentpath {

namespace {

/// The model written over the stacked latent vector (eta, xi):
///   nu = B_full nu + zeta_full,  Cov(zeta_full) = blockdiag(Psi, Phi),
///   Sigma = Lambda A C A' Lambda' + Theta  with A = (I - B_full)^-1,
/// with B_full = [[B, Gamma], [0, 0]] and Lambda = blockdiag(Lambda_y, Lambda_x).
struct Assembled {
    Eigen::MatrixXd lambda;
    Eigen::MatrixXd beta_full;
    Eigen::MatrixXd psi_full;
    Eigen::MatrixXd theta;
    Eigen::MatrixXd inverse;     // (I - B_full)^-1
    Eigen::MatrixXd latent_cov;  // C
    Eigen::MatrixXd sigma;       // internal order (y, x)
};

Assembled assemble(const ParamMatrices& m, std::span<const double> theta) {
    const LisrelMatrices mats = evaluate(m, theta);
    const auto ne = static_cast<Eigen::Index>(m.eta.size());
    const auto nx = static_cast<Eigen::Index>(m.xi.size());
    const auto ny = static_cast<Eigen::Index>(m.y.size());
    const auto nobs_x = static_cast<Eigen::Index>(m.x.size());
    const Eigen::Index k = ne + nx;
    const Eigen::Index p = ny + nobs_x;

    Assembled a;
    a.lambda = Eigen::MatrixXd::Zero(p, k);
    a.lambda.topLeftCorner(ny, ne) = mats.lambda_y;
    a.lambda.bottomRightCorner(nobs_x, nx) = mats.lambda_x;

    a.beta_full = Eigen::MatrixXd::Zero(k, k);
    a.beta_full.topLeftCorner(ne, ne) = mats.beta;
    a.beta_full.topRightCorner(ne, nx) = mats.gamma;

    a.psi_full = Eigen::MatrixXd::Zero(k, k);
    a.psi_full.topLeftCorner(ne, ne) = mats.psi;
    a.psi_full.bottomRightCorner(nx, nx) = mats.phi;

    a.theta = Eigen::MatrixXd::Zero(p, p);
    a.theta.topLeftCorner(ny, ny) = mats.theta_eps;
    a.theta.bottomRightCorner(nobs_x, nobs_x) = mats.theta_delta;

    // I - B_full is unit upper-block-triangular with an acyclic B, hence invertible.
    const Eigen::MatrixXd i_minus_b = Eigen::MatrixXd::Identity(k, k) - a.beta_full;
    a.inverse = i_minus_b.partialPivLu().inverse();
    a.latent_cov = a.inverse * a.psi_full * a.inverse.transpose();
    a.latent_cov = (0.5 * (a.latent_cov + a.latent_cov.transpose())).eval();
    a.sigma = a.lambda * a.latent_cov * a.lambda.transpose() + a.theta;
    a.sigma = (0.5 * (a.sigma + a.sigma.transpose())).eval();
    return a;
}

Eigen::MatrixXd to_variable_order(const ParamMatrices& m, const Eigen::MatrixXd& internal) {
    const auto p = static_cast<Eigen::Index>(m.observed_position.size());
    Eigen::MatrixXd out(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            out(m.observed_position[static_cast<std::size_t>(i)], m.observed_position[static_cast<std::size_t>(j)]) =
                internal(i, j);
        }
    }
    return out;
}

Eigen::MatrixXd to_internal_order(const ParamMatrices& m, const Eigen::MatrixXd& external) {
    const auto p = static_cast<Eigen::Index>(m.observed_position.size());
    if (external.rows() != p || external.cols() != p) {
        throw Error(fmt::format("covariance matrix is {}x{}, model has {} observed variables", external.rows(),
                                external.cols(), p));
    }
    Eigen::MatrixXd out(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            out(i, j) = external(m.observed_position[static_cast<std::size_t>(i)],
                                 m.observed_position[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

/// sum(lambda - 1 - log lambda) over eigenvalues of L^-1 S L^-T, Sigma = L L'.
std::optional<double> discrepancy(const Eigen::LLT<Eigen::MatrixXd>& sigma_llt, const Eigen::MatrixXd& s) {
    const Eigen::MatrixXd half = sigma_llt.matrixL().solve(s);
    const Eigen::MatrixXd whitened = sigma_llt.matrixL().solve(half.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (whitened + whitened.transpose()),
                                                          Eigen::EigenvaluesOnly);
    double f = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        const double lambda = solver.eigenvalues()(i);
        if (!(lambda > 0.0)) return std::nullopt;
        const double d = lambda - 1.0;
        f += d - std::log1p(d);
    }
    return f;
}

void accumulate(const MatrixPattern& pattern, const Eigen::MatrixXd& grad, Eigen::Index row0, Eigen::Index col0,
                Eigen::VectorXd& out) {
    for (Eigen::Index j = 0; j < pattern.index.cols(); ++j) {
        for (Eigen::Index i = 0; i < pattern.index.rows(); ++i) {
            if (const int k = pattern.index(i, j); k >= 0) out(k) += grad(row0 + i, col0 + j);
        }
    }
}

}  // namespace

Eigen::MatrixXd latent_covariance(const ParamMatrices& m, std::span<const double> theta) {
    return assemble(m, theta).latent_cov;
}

Eigen::MatrixXd implied_covariance(const ParamMatrices& m, std::span<const double> theta) {
    return to_variable_order(m, assemble(m, theta).sigma);
}

double f_ml(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s, int p) {
    if (sigma.rows() != p || s.rows() != p || sigma.cols() != p || s.cols() != p) {
        throw Error("f_ml: matrix dimensions disagree with p");
    }
    if (Eigen::LLT<Eigen::MatrixXd>(s).info() != Eigen::Success) {
        throw NumericalError("sample covariance matrix is not positive definite");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("implied covariance matrix is not positive definite");
    auto f = discrepancy(llt, s);
    if (!f) throw NumericalError("implied covariance matrix is not positive definite");
    return *f;
}

double log_likelihood(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s, int n, int p) {
    if (Eigen::LLT<Eigen::MatrixXd>(s).info() != Eigen::Success) {
        throw NumericalError("sample covariance matrix is not positive definite");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("implied covariance matrix is not positive definite");
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double trace = llt.solve(s).trace();
    return -0.5 * n * (log_det + trace + p * std::log(2.0 * std::numbers::pi));
}

MlObjective::MlObjective(const ParamMatrices& m, const Eigen::MatrixXd& s) : m_(m), s_internal_(to_internal_order(m, s)) {
    if (Eigen::LLT<Eigen::MatrixXd>(s_internal_).info() != Eigen::Success) {
        throw NumericalError("sample covariance matrix is not positive definite");
    }
}

std::optional<double> MlObjective::value(std::span<const double> theta) const {
    const Assembled a = assemble(m_, theta);
    Eigen::LLT<Eigen::MatrixXd> llt(a.sigma);
    if (llt.info() != Eigen::Success) return std::nullopt;
    return discrepancy(llt, s_internal_);
}

std::optional<double> MlObjective::value_and_gradient(std::span<const double> theta, Eigen::VectorXd& gradient) const {
    const Assembled a = assemble(m_, theta);
    Eigen::LLT<Eigen::MatrixXd> llt(a.sigma);
    if (llt.info() != Eigen::Success) return std::nullopt;
    auto f = discrepancy(llt, s_internal_);
    if (!f) return std::nullopt;

    // dF = tr(W dSigma) with W = Sigma^-1 (Sigma - S) Sigma^-1.
    const auto p = a.sigma.rows();
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd w = inv - inv * s_internal_ * inv;
    w = (0.5 * (w + w.transpose())).eval();

    const Eigen::MatrixXd v = a.lambda.transpose() * w * a.lambda;
    const Eigen::MatrixXd g_lambda = 2.0 * w * a.lambda * a.latent_cov;
    const Eigen::MatrixXd g_psi = a.inverse.transpose() * v * a.inverse;
    const Eigen::MatrixXd g_beta = 2.0 * a.inverse.transpose() * v * a.latent_cov;

    const auto ne = static_cast<Eigen::Index>(m_.eta.size());
    const auto ny = static_cast<Eigen::Index>(m_.y.size());

    gradient = Eigen::VectorXd::Zero(m_.free_count());
    accumulate(m_.lambda_y, g_lambda, 0, 0, gradient);
    accumulate(m_.lambda_x, g_lambda, ny, ne, gradient);
    accumulate(m_.beta, g_beta, 0, 0, gradient);
    accumulate(m_.gamma, g_beta, 0, ne, gradient);
    accumulate(m_.psi, g_psi, 0, 0, gradient);
    accumulate(m_.phi, g_psi, ne, ne, gradient);
    accumulate(m_.theta_eps, w, 0, 0, gradient);
    accumulate(m_.theta_delta, w, ny, ny, gradient);
    return f;
}

Dataset simulate(const ParamMatrices& m, std::span<const double> theta, int n, std::uint64_t seed) {
    if (n < 1) throw Error("simulate: n must be positive");
    const Eigen::MatrixXd sigma = implied_covariance(m, theta);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("cannot simulate: implied covariance matrix is not positive definite");
    }
    const Eigen::MatrixXd lower = llt.matrixL();
    const auto p = sigma.rows();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(n, p);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) z(r, c) = normal(rng);
    }

    Dataset out;
    out.names = m.variable_order;
    out.values = z * lower.transpose();
    out.raw.assign(static_cast<std::size_t>(n), std::vector<std::string>(static_cast<std::size_t>(p)));
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) {
            out.raw[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = fmt::format("{}", out.values(r, c));
        }
    }
    return out;
}

std::vector<double> assign_parameters(const ParamMatrices& m, const std::vector<std::pair<std::string, double>>& values,
                                      const ParameterDefaults& defaults) {
    std::vector<double> theta(m.parameters.size());
    for (std::size_t k = 0; k < m.parameters.size(); ++k) {
        switch (m.parameters[k].kind) {
            case ParameterKind::Loading: theta[k] = defaults.loading; break;
            case ParameterKind::Path: theta[k] = defaults.path; break;
            case ParameterKind::LatentVariance: theta[k] = defaults.latent_variance; break;
            case ParameterKind::LatentCovariance: theta[k] = defaults.latent_covariance; break;
            case ParameterKind::DisturbanceVariance: theta[k] = defaults.disturbance_variance; break;
            case ParameterKind::DisturbanceCovariance: theta[k] = 0.0; break;
            case ParameterKind::ErrorVariance: theta[k] = defaults.error_variance; break;
            case ParameterKind::ErrorCovariance: theta[k] = 0.0; break;
        }
    }
    for (const auto& [name, value] : values) {
        const int k = m.find(name);
        if (k < 0) throw ModelError(fmt::format("no free parameter named '{}'", name));
        theta[static_cast<std::size_t>(k)] = value;
    }
    return theta;
}

}  // namespace latentpath
