#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lamn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";

/// Thrown when a computation hits a numerical dead end (singular
/// covariance, non-finite state, conditioning failure).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on invalid user-supplied configuration or arguments.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace lamn
