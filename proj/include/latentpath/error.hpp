#pragma once

#include <stdexcept>
#include <string>

namespace latentpath {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed model text. Line and column are 1-based.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, int line, int column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Well-formed model text that violates a structural rule (duplicate indicator,
/// undeclared latent, cyclic regressions, variable order mismatch).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Unreadable, ragged or otherwise unusable input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be positive definite (or invertible) is not.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// More free parameters than distinct covariance moments.
class IdentificationError : public Error {
public:
    using Error::Error;
};

/// Too many bootstrap replicates failed to converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace latentpath
