#pragma once

#include "sparse_armax/armax_model.hpp"
#include "sparse_armax/common.hpp"

#include <json.hpp>

#include <cstdint>

namespace sparse_armax {

struct NoiseOrders {
  int pbar = 0, qbar = 0, rbar = 0;
  friend bool operator==(const NoiseOrders&, const NoiseOrders&) = default;
};

// (p + margin, q + margin, r + margin).  The margin must be positive so the
// over-parameterized model strictly contains the true one.
NoiseOrders noise_order_margin(int p, int q, int r, int margin = 2);

// A posteriori noise estimates from an over-parameterized extended least
// squares fit
//
//   y_N = alpha^T psi_{N-1} + w_N,
//   psi_{N-1} = [y_{N-1} .. y_{N-pbar}, u_{N-1} .. u_{N-qbar}, w^_{N-1} .. w^_{N-rbar}],
//
// run recursively with gain Pbar_0 = I / mu.  Each update returns the
// residual of the freshly updated fit, w^_N = y_N - alpha_N^T psi_{N-1}.
class NoiseEstimator {
 public:
  NoiseEstimator(int n, int l, NoiseOrders orders, double mu);

  // Consumes y_N and u_{N-1}; returns w^_N.
  Vector update(const Vector& y, const Vector& u_prev);

  int state_dim() const { return static_cast<int>(alpha_.rows()); }
  const Matrix& alpha() const { return alpha_; }
  const Matrix& gain() const { return gain_; }
  NoiseOrders orders() const { return orders_; }
  double mu() const { return mu_; }
  std::int64_t step() const { return step_; }
  // b_{N-1} of the last update; 1 before any update.
  double last_b() const { return last_b_; }
  // Most recent noise estimate (zero before the first update).
  const Vector& last_estimate() const { return last_what_; }

  // Smallest eigenvalue of the gain; diagnostic only.
  double gain_min_eigenvalue() const;

  // Full state, matrices as column-major numeric arrays.
  nlohmann::json snapshot() const;
  static NoiseEstimator restore(const nlohmann::json& j);

 private:
  Vector psi() const;

  int n_, l_;
  NoiseOrders orders_;
  double mu_;
  Matrix alpha_;
  Matrix gain_;
  LagBuffer y_, u_, what_;
  std::int64_t step_ = 0;
  double last_b_ = 1.0;
  Vector work_;
  Vector last_what_;
};

}  // namespace sparse_armax
