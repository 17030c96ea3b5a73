#pragma once

#include "latentpath/model_spec.hpp"

#include <Eigen/Dense>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace latentpath {

enum class Identification {
    Marker,                 // first indicator loading fixed to 1
    VarianceStandardized,   // all loadings free, latent (residual) variances fixed to 1
};

enum class ParameterKind {
    Loading,
    Path,
    LatentVariance,
    LatentCovariance,
    DisturbanceVariance,
    DisturbanceCovariance,
    ErrorVariance,
    ErrorCovariance,
};

const char* to_string(ParameterKind kind);

/// One entry of the flat parameter vector.
struct FreeParameter {
    std::string name;   // canonical, e.g. "PB=~PB2", "PB~PerVa", "CE1~~CE1"
    std::string label;  // user label from the model text, may be empty
    ParameterKind kind;
    std::string lhs;
    std::string rhs;
};

/// Fixed values plus a parallel map of free-parameter positions (-1 = fixed).
struct MatrixPattern {
    Eigen::MatrixXd value;
    Eigen::MatrixXi index;

    MatrixPattern() = default;
    MatrixPattern(Eigen::Index rows, Eigen::Index cols)
        : value(Eigen::MatrixXd::Zero(rows, cols)), index(Eigen::MatrixXi::Constant(rows, cols, -1)) {}

    /// Fixed values with the free entries filled from theta.
    Eigen::MatrixXd evaluate(std::span<const double> theta) const;
};

/// Model in LISREL form. Endogenous quantities (eta, y) come first in the
/// internal observed order, exogenous (xi, x) second.
struct ParamMatrices {
    std::vector<std::string> eta;  // endogenous latents, topological order
    std::vector<std::string> xi;   // exogenous latents, by name
    std::vector<std::string> y;    // indicators of eta
    std::vector<std::string> x;    // indicators of xi

    MatrixPattern lambda_y;     // |y| x |eta|
    MatrixPattern lambda_x;     // |x| x |xi|
    MatrixPattern beta;         // |eta| x |eta|, beta(i, j): eta_j -> eta_i
    MatrixPattern gamma;        // |eta| x |xi|
    MatrixPattern phi;          // |xi| x |xi|
    MatrixPattern psi;          // |eta| x |eta|
    MatrixPattern theta_eps;    // |y| x |y|
    MatrixPattern theta_delta;  // |x| x |x|

    std::vector<FreeParameter> parameters;
    std::map<std::string, int> theta_index;  // canonical name -> position

    /// Caller's variable order and, for each internal observed variable
    /// (y then x), its position in that order.
    std::vector<std::string> variable_order;
    std::vector<int> observed_position;

    Identification identification = Identification::Marker;

    int free_count() const { return static_cast<int>(parameters.size()); }
    int observed_count() const { return static_cast<int>(observed_position.size()); }
    int latent_count() const { return static_cast<int>(eta.size() + xi.size()); }

    /// Position of a parameter by canonical name or user label; -1 if absent.
    int find(const std::string& name_or_label) const;
};

/// Concrete matrices at a given parameter vector.
struct LisrelMatrices {
    Eigen::MatrixXd lambda_y, lambda_x, beta, gamma, phi, psi, theta_eps, theta_delta;
};

ParamMatrices build_matrices(const ModelSpec& spec, const std::vector<std::string>& variable_order,
                             Identification identification = Identification::Marker);

LisrelMatrices evaluate(const ParamMatrices& m, std::span<const double> theta);

struct DegreesOfFreedom {
    int moments = 0;     // p(p+1)/2
    int parameters = 0;  // t
    int df = 0;
    bool under_identified = false;
};

DegreesOfFreedom count_df(const ParamMatrices& m, int p);

}  // namespace latentpath
