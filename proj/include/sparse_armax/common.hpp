#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sparse_armax {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad parameters or configuration; the CLI maps these to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or non-finite data, I/O failures; exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A regularization schedule produced an unusable value.
class ScheduleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Threshold below which |Theta_hat| is treated as zero (infinite L1 weight).
inline constexpr double kWeightFloor = 1e-12;

// Default correct-rate threshold.
inline constexpr double kDefaultTau = 1e-7;

}  // namespace sparse_armax
