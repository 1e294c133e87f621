#pragma once

// Shared scalar/matrix aliases and error types for the coxsvi library.
// The whole library works in double precision through these aliases;
// Eigen is the only linear-algebra dependency.

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace coxsvi {

using Real = double;
using Index = std::int64_t;

using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<int, Eigen::Dynamic, 1>;

// Input that cannot be parsed at all (malformed CSV, bad numbers).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Well-formed input that violates a model precondition.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure inside a numerical routine (singular information matrix,
// impossible resampling, non-finite intermediate).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace coxsvi
