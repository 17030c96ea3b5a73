#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace latentpath {

/// Cronbach's alpha of an n x k item block (complete rows only).
double cronbach_alpha(const Eigen::MatrixXd& items);

/// Error variances 1 - lambda^2 for a standardized solution.
std::vector<double> standardized_error_variances(std::span<const double> loadings);

/// (sum lambda)^2 / ((sum lambda)^2 + sum var(eps)).
double composite_reliability(std::span<const double> loadings, std::span<const double> error_variances);
double composite_reliability(std::span<const double> loadings);

/// sum lambda^2 / (sum lambda^2 + sum var(eps)).
double average_variance_extracted(std::span<const double> loadings, std::span<const double> error_variances);
double average_variance_extracted(std::span<const double> loadings);

/// Kaiser-Meyer-Olkin sampling adequacy from a correlation matrix.
double kmo(const Eigen::MatrixXd& r);

struct BartlettResult {
    double chi_square = 0.0;
    int df = 0;
    double p_value = 1.0;
};

/// Bartlett's test of sphericity.
BartlettResult bartlett(const Eigen::MatrixXd& r, int n);

struct FornellLarcker {
    std::vector<std::string> names;
    Eigen::MatrixXd table;     // lower triangle correlations, sqrt(AVE) on the diagonal, zero above
    std::vector<bool> passes;  // sqrt(AVE_i) > max_j |corr_ij|
};

FornellLarcker fornell_larcker(const std::vector<std::string>& names, std::span<const double> ave,
                               const Eigen::MatrixXd& correlations);

}  // namespace latentpath
