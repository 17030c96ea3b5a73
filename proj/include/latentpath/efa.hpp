#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace latentpath {

enum class Extraction { PrincipalComponents, PrincipalAxis };

/// Factor retention rule: Kaiser (eigenvalue strictly above 1) or a fixed count.
struct Retention {
    std::optional<int> fixed;  // empty = Kaiser

    static Retention kaiser() { return {}; }
    static Retention count(int m) { return {m}; }
};

struct LoadingMatrix {
    std::vector<std::string> items;
    Eigen::MatrixXd loadings;      // p x m
    Eigen::VectorXd eigenvalues;   // all p eigenvalues of R, descending
    Eigen::VectorXd communalities; // row sums of squared loadings
    Eigen::MatrixXd rotation;      // m x m; identity when unrotated
    bool rotated = false;
    int sweeps = 0;
    std::vector<double> criterion_trace;  // varimax criterion after each sweep, starting value first

    int factors() const { return static_cast<int>(loadings.cols()); }
};

struct ExtractionOptions {
    Extraction method = Extraction::PrincipalComponents;
    int max_iter = 200;  // principal-axis communality iterations
    double tol = 1e-8;
};

/// Eigendecomposition-based extraction from a correlation matrix. Columns are
/// ordered by descending eigenvalue and signed so their largest-magnitude
/// loading is positive.
LoadingMatrix extract(const Eigen::MatrixXd& r, Retention retention, std::vector<std::string> items = {},
                      const ExtractionOptions& options = {});

struct VarimaxOptions {
    double tol = 1e-12;
    int max_iter = 500;
    bool kaiser_normalize = true;
};

/// Orthogonal varimax rotation by pairwise planar sweeps. The rotated columns
/// are re-ordered by explained variance and sign-normalised.
LoadingMatrix varimax(const LoadingMatrix& input, const VarimaxOptions& options = {});

/// Raw varimax criterion: sum over columns of the variance of squared loadings.
double varimax_criterion(const Eigen::MatrixXd& loadings);

struct ComponentRow {
    std::string item;
    int dominant = 0;                        // column with the largest |loading|
    std::vector<std::optional<double>> cells;  // empty where |loading| < threshold
};

/// Display table: rows grouped by dominant factor (stable within a group),
/// entries below the suppression threshold blanked.
std::vector<ComponentRow> rotated_component_table(const LoadingMatrix& loadings, double suppress_below);

}  // namespace latentpath
