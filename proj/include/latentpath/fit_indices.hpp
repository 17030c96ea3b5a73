#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace latentpath {

struct FitResult;

struct Baseline {
    double chi_square = 0.0;
    int df = 0;
};

/// Independence model (free variances, zero covariances), in closed form:
/// F = sum log s_ii - log|S|.
Baseline baseline(const Eigen::MatrixXd& s, double multiplier);

struct IndexCheck {
    std::string name;
    std::optional<double> value;  // empty when undefined
    std::string standard;         // e.g. "< 0.08"
    bool meets = false;
};

struct FitIndexReport {
    double chi_square = 0.0;
    int df = 0;
    double p_value = 0.0;
    double null_chi_square = 0.0;
    int null_df = 0;
    std::optional<double> chi_square_ratio, rmsea, gfi, agfi, nfi, tli, cfi, pnfi, pcfi, pgfi;
    std::vector<IndexCheck> checks;     // in display order
    std::vector<std::string> undefined; // indices whose formula hit a division guard
};

struct IndexInputs {
    double chi_square = 0.0;
    int df = 0;
    double null_chi_square = 0.0;
    int null_df = 0;
    int n = 0;                 // sample size; RMSEA uses n - 1
    Eigen::MatrixXd s;         // sample covariance
    Eigen::MatrixXd sigma;     // implied covariance at the estimate
};

FitIndexReport indices(const IndexInputs& in);

/// Convenience: baseline plus indices for a fitted model.
FitIndexReport indices(const FitResult& result, const Eigen::MatrixXd& s);

/// RMSEA from chi-square, df and n: sqrt(max(chi2 - df, 0) / (df (n - 1))).
double rmsea(double chi_square, int df, int n);

}  // namespace latentpath
