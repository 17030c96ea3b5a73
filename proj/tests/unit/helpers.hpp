#pragma once

#include "latentpath/model_spec.hpp"
#include "latentpath/param_matrices.hpp"
#include "latentpath/sem.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(LATENTPATH_DATA_DIR) + "/" + name; }

inline latentpath::ModelSpec bundled_model() { return latentpath::load_model(data_path("wuliangye.model")); }

/// Random symmetric positive definite matrix A A' / p + ridge.
inline Eigen::MatrixXd random_spd(int p, std::mt19937_64& rng, double ridge = 0.5) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) a(i, j) = normal(rng);
    return a * a.transpose() / p + ridge * Eigen::MatrixXd::Identity(p, p);
}

/// Feasible parameter vector: loadings and paths drawn near typical values,
/// variances positive, covariances small.
inline std::vector<double> random_theta(const latentpath::ParamMatrices& m, std::mt19937_64& rng) {
    using latentpath::ParameterKind;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> theta;
    for (const auto& p : m.parameters) {
        switch (p.kind) {
            case ParameterKind::Loading: theta.push_back(0.5 + 0.7 * u(rng)); break;
            case ParameterKind::Path: theta.push_back(-0.4 + 0.8 * u(rng)); break;
            case ParameterKind::LatentCovariance:
            case ParameterKind::DisturbanceCovariance:
            case ParameterKind::ErrorCovariance: theta.push_back(-0.2 + 0.4 * u(rng)); break;
            default: theta.push_back(0.5 + u(rng)); break;
        }
    }
    return theta;
}

inline const char* kThreeFactorModel = R"(
X =~ x1 + x2 + x3
M =~ m1 + m2 + m3
Y =~ y1 + y2 + y3
M ~ X
Y ~ M + X
)";

}  // namespace testing
