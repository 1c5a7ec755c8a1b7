#pragma once

#include <stdexcept>
#include <string>

namespace rdlab {

/// Bad configuration or parameter values supplied by the caller (CLI exit 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or missing input data (CLI exit 3).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure during fitting or sampling (CLI exit 4).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Singular design matrix in a least-squares or GLM fit.
class RankDeficiencyError : public NumericError {
public:
    RankDeficiencyError(int rank, int columns)
        : NumericError("design matrix is rank deficient: rank " + std::to_string(rank) +
                       " < " + std::to_string(columns) + " columns"),
          rank_(rank), columns_(columns) {}
    int rank() const { return rank_; }
    int columns() const { return columns_; }

private:
    int rank_;
    int columns_;
};

/// Complete separation (or non-convergence) in a logistic fit.
class SeparationError : public NumericError {
public:
    SeparationError(const std::string& msg, int iterations)
        : NumericError(msg), iterations_(iterations) {}
    int iterations() const { return iterations_; }

private:
    int iterations_;
};

} // namespace rdlab
