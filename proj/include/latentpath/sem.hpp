#pragma once

#include "latentpath/dataset.hpp"
#include "latentpath/model_spec.hpp"
#include "latentpath/param_matrices.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace latentpath {

// ---------------------------------------------------------------------------
// Model-implied moments

/// Latent covariance in (eta, xi) order:
///   [[A (Gamma Phi Gamma' + Psi) A',  A Gamma Phi],
///    [Phi Gamma' A',                  Phi       ]]  with A = (I - B)^-1.
Eigen::MatrixXd latent_covariance(const ParamMatrices& m, std::span<const double> theta);

/// Sigma(theta) in the caller's variable order.
Eigen::MatrixXd implied_covariance(const ParamMatrices& m, std::span<const double> theta);

// ---------------------------------------------------------------------------
// Discrepancy and likelihood

/// ML discrepancy log|Sigma| + tr(S Sigma^-1) - log|S| - p, evaluated through
/// the eigenvalues of Sigma^-1 S so it stays accurate near zero. Throws
/// NumericalError when either matrix is not positive definite.
double f_ml(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s, int p);

/// Normal-theory log-likelihood -(n/2)[log|Sigma| + tr(S Sigma^-1) + p log(2 pi)].
double log_likelihood(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s, int n, int p);

/// F_ML as a function of the free parameters, with its analytic gradient.
class MlObjective {
public:
    MlObjective(const ParamMatrices& m, const Eigen::MatrixXd& s);

    /// Empty when Sigma(theta) is not positive definite.
    std::optional<double> value(std::span<const double> theta) const;
    std::optional<double> value_and_gradient(std::span<const double> theta, Eigen::VectorXd& gradient) const;

    const ParamMatrices& model() const { return m_; }
    int size() const { return m_.free_count(); }

private:
    ParamMatrices m_;
    Eigen::MatrixXd s_internal_;
};

// ---------------------------------------------------------------------------
// Estimation

enum class ChiSquareMultiplier { NMinusOne, N };

struct EstimationOptions {
    int max_iter = 500;
    double gtol = 1e-6;   // Euclidean norm of the F_ML gradient
    double ftol = 1e-14;  // relative decrease below which an iteration counts as stalled
    ChiSquareMultiplier multiplier = ChiSquareMultiplier::NMinusOne;
    Identification identification = Identification::Marker;
    std::optional<std::vector<double>> start;  // overrides the default start rule
    bool standard_errors = true;
};

/// Default start values: free loadings 0.7, paths 0, error variances
/// 0.5 diag(S), latent (residual) variances 0.5 S at the latent's marker.
std::vector<double> start_values(const ParamMatrices& m, const Eigen::MatrixXd& s);

struct ParameterEstimate {
    std::string name;
    std::string label;
    ParameterKind kind;
    std::string lhs;
    std::string rhs;
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;        // critical ratio
    double p_value = 0.0;  // two-sided, standard normal
    double standardized = 0.0;
    bool heywood = false;  // negative variance estimate
};

struct StandardizedSolution {
    LisrelMatrices matrices;           // every entry rescaled, fixed ones included
    Eigen::MatrixXd latent_correlation;  // (eta, xi) order
    std::vector<double> parameters;    // per free parameter
};

struct FitResult {
    ParamMatrices model;
    std::vector<double> theta;
    std::vector<double> se;
    std::vector<ParameterEstimate> estimates;
    double f_min = 0.0;
    double chi_square = 0.0;
    int df = 0;
    int n = 0;
    int iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::string message;
    std::vector<double> objective_trace;  // F_ML after each accepted step, start value first
    std::vector<std::string> heywood;     // names of negative variance estimates
    Eigen::MatrixXd implied;              // Sigma(theta_hat), variable order
    Eigen::MatrixXd parameter_covariance;
    StandardizedSolution standardized;
    ChiSquareMultiplier multiplier = ChiSquareMultiplier::NMinusOne;

    const ParameterEstimate* find(const std::string& name_or_label) const;
};

/// Quasi-Newton (BFGS) minimisation of F_ML with a backtracking line search.
/// Throws IdentificationError when df < 0 and NumericalError when S is not
/// positive definite; non-convergence is reported through the result.
FitResult fit(const ModelSpec& spec, const SampleMoments& moments, const EstimationOptions& options = {});
FitResult fit(const ParamMatrices& m, const SampleMoments& moments, const EstimationOptions& options = {});

/// Rescale by model-implied latent and indicator standard deviations.
StandardizedSolution standardize(const ParamMatrices& m, std::span<const double> theta);
StandardizedSolution standardize(const FitResult& result);

/// Standardized loading of an indicator (fixed markers included).
double standardized_loading(const FitResult& result, const std::string& indicator);

/// Inverse of the central-difference Hessian of multiplier/2 * F_ML.
Eigen::MatrixXd parameter_covariance(const MlObjective& objective, std::span<const double> theta, double multiplier);

// ---------------------------------------------------------------------------
// Simulation

/// n zero-mean multivariate normal rows with covariance Sigma(theta), drawn as
/// standard normals times the Cholesky factor. Deterministic for a seed.
Dataset simulate(const ParamMatrices& m, std::span<const double> theta, int n, std::uint64_t seed);

/// Parameter vector from name -> value assignments (canonical names or
/// labels); anything unassigned takes a per-kind default.
struct ParameterDefaults {
    double loading = 0.8;
    double path = 0.0;
    double latent_variance = 1.0;
    double latent_covariance = 0.0;
    double disturbance_variance = 0.5;
    double error_variance = 0.5;
};

std::vector<double> assign_parameters(const ParamMatrices& m, const std::vector<std::pair<std::string, double>>& values,
                                      const ParameterDefaults& defaults = {});

}  // namespace latentpath
