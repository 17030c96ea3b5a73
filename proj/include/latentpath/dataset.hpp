#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace latentpath {

/// Rectangular numeric observations. Cells that are empty, "NA" or not
/// numeric are missing; their raw text is kept for frequency tabulation.
struct Dataset {
    std::vector<std::string> names;
    Eigen::MatrixXd values;                  // n x p, NaN where missing
    std::vector<std::vector<std::string>> raw;  // n rows of p cells

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
    bool missing(int row, int col) const;
    int column(const std::string& name) const;  // -1 if absent

    /// Columns in the given order; throws DataError on unknown names.
    Dataset select(const std::vector<std::string>& columns) const;
    /// Rows in the given order (repeats allowed).
    Dataset take_rows(const std::vector<int>& rows) const;
};

struct TableOptions {
    char delimiter = ',';
};

Dataset load_table(const std::string& path, const TableOptions& options = {});
Dataset parse_table(const std::string& text, const TableOptions& options = {});

/// Writes comma-separated text with a header row and full-precision values.
void write_table(const Dataset& data, const std::string& path);

enum class Divisor { NMinusOne, N };

struct SampleMoments {
    Eigen::MatrixXd covariance;   // S
    Eigen::MatrixXd correlation;  // R; rows/cols of zero-variance variables are NaN off the diagonal
    int n = 0;                    // complete rows used
    int p = 0;
    std::vector<std::string> names;
    std::vector<bool> zero_variance;
    Divisor divisor = Divisor::NMinusOne;

    bool has_zero_variance() const;
};

/// Listwise-deleted covariance and correlation.
SampleMoments covariance(const Dataset& data, Divisor divisor = Divisor::NMinusOne);

/// Moments from a known covariance matrix (no raw data).
SampleMoments moments_from_covariance(const Eigen::MatrixXd& s, int n, std::vector<std::string> names);

Eigen::MatrixXd correlation_from_covariance(const Eigen::MatrixXd& s);

struct FrequencyRow {
    std::string level;
    int count = 0;
    double percentage = 0.0;
};

/// Counts of each distinct non-missing value. Levels sort numerically when
/// every level parses as a number, lexically otherwise.
std::vector<FrequencyRow> frequency_table(const Dataset& data, const std::string& variable);

}  // namespace latentpath
