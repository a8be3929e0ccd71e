#pragma once

#include "sparse_armax/armax_model.hpp"
#include "sparse_armax/common.hpp"
#include "sparse_armax/noise_estimator.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sparse_armax {

enum class LambdaKind { log_n_over_n, eig_ratio_sqrt, constant, custom_table };

// Penalty sequence lambda_N used in the soft-threshold step.
//
//   log_n_over_n    scale * (log N / N)^exponent, N clamped to >= 2
//   eig_ratio_sqrt  scale * sqrt(log lambda_max(N) / lambda_min(N))
//   constant        scale
//   custom_table    table[min(N, size - 1)]
struct LambdaSchedule {
  LambdaKind kind = LambdaKind::log_n_over_n;
  double scale = 1.0;
  double exponent = 0.5;
  std::vector<double> table;

  void validate() const;
  // `step` is the zero-based update index N.
  double value(std::int64_t step, double lambda_max, double lambda_min) const;
};

std::string to_string(LambdaKind kind);
LambdaKind parse_lambda_kind(const std::string& name);

// Which values fill the support of the sparse estimate.
enum class SparseMode { theta_values, xi_values };

std::string to_string(SparseMode mode);
SparseMode parse_sparse_mode(const std::string& name);

// How the auxiliary matrix Xi is formed from Theta.
//   adaptive  per-entry weights lambda_N / |Theta_hat|
//   constant  one threshold lambda / mu for every entry
//   none      Xi stays zero: plain regularized recursive least squares
enum class Weighting { adaptive, constant, none };

enum class EigenPolicy { every_step, stride, final_only };
enum class EigenMethod { full, power };

struct EigenSettings {
  EigenPolicy policy = EigenPolicy::every_step;
  int stride = 1;
  EigenMethod method = EigenMethod::full;
};

struct IdentifierConfig {
  double mu = 1.0;
  LambdaSchedule schedule;
  SparseMode mode = SparseMode::theta_values;
  Weighting weighting = Weighting::adaptive;
  double constant_lambda = 0.1;  // Weighting::constant only
  EigenSettings eigen;

  void validate() const;
};

struct SparseEstimate {
  Matrix s;
  IndexSet zero_set;
  SparseMode mode = SparseMode::theta_values;
};

struct EigenPair {
  double max = 0.0;
  double min = 0.0;
};

// Recursive alternating minimization of
//
//   1/2 ||Y - Phi X||^2 + sum gamma(s,t) |Xi(s,t)| + mu/2 ||X - Xi||^2
//
// over (X, Xi), one observation at a time.  The X-step is recursive least
// squares with a proximal correction mu P_{N+1} (Xi_N - Xi_{N-1}); the
// Xi-step is entrywise soft-thresholding.  P_N = (mu I + sum phi phi^T)^{-1}
// is propagated by rank-one downdates and the information matrix R_N = P_N^{-1}
// is kept explicitly for its extreme eigenvalues.
class SparseIdentifier {
 public:
  SparseIdentifier(int d, int n, IdentifierConfig config);

  // One full update from (phi_N, y_{N+1}).
  void step(const Vector& phi, const Vector& y_next);

  // The X-step alone.  Throws DataError and leaves the state untouched on
  // non-finite input.
  void rls_core_update(const Vector& phi, const Vector& y_next);

  // Theta_hat = Theta + sgn(Theta) sqrt(log lambda_max / lambda_min), sgn(0) = +1.
  Matrix adaptive_weight_matrix() const;
  // sqrt(log lambda_max / lambda_min); ScheduleError if lambda_max < 1.
  double weight_offset() const;

  // The Xi-step for penalty lambda_N (> 0 for adaptive weighting, >= 0 for
  // constant weighting).
  void soft_threshold_update(double lambda);

  SparseEstimate extract_sparse() const;

  // Refreshes the cached extreme eigenvalues of R now, regardless of policy.
  EigenPair eigen_refresh();

  int d() const { return d_; }
  int n() const { return n_; }
  const IdentifierConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_; }
  const Matrix& theta() const { return theta_; }
  const Matrix& xi() const { return xi_; }
  const Matrix& xi_prev() const { return xi_prev_; }
  const Matrix& gain() const { return gain_; }
  const Matrix& information() const { return info_; }
  double lambda_max() const { return eig_.max; }
  double lambda_min() const { return eig_.min; }
  double last_lambda() const { return last_lambda_; }

  // {step, d, n, theta, xi, sparse_estimate (row-major), zero_set (one-based
  // pairs), lambda_max, lambda_min, lambda_N, mode}
  nlohmann::json snapshot() const;

 private:
  bool needs_eigenvalues() const;
  EigenPair power_refresh();

  int d_, n_;
  IdentifierConfig config_;
  Matrix theta_, xi_, xi_prev_;
  Matrix gain_, info_;
  Matrix correction_;
  EigenPair eig_;
  Vector v_max_, v_min_;  // warm starts for power iteration
  Vector g_;
  std::int64_t step_ = 0;
  double last_lambda_ = 0.0;
};

// Largest and smallest eigenvalues of a symmetric matrix by full eigensolve.
EigenPair extreme_eigenvalues(const Matrix& symmetric);

// Turns raw (u_k, y_k) observations into identifier regressors
// phi_k = [y_k .., u_k .., w^_k ..] built from a posteriori noise estimates.
class ArmaxRegressorStream {
 public:
  ArmaxRegressorStream(int n, int l, int p, int q, int r, NoiseOrders orders, double noise_mu);

  // Consumes (u_k, y_k) and returns phi_k.
  Vector push(const Vector& u, const Vector& y);

  const NoiseEstimator& noise() const { return noise_; }
  int d() const { return n_ * p_ + l_ * q_ + n_ * r_; }

 private:
  int n_, l_, p_, q_, r_;
  NoiseEstimator noise_;
  ArmaxHistory hist_;
  Vector u_prev_;
};

// Streaming ARMAX identification: each observation row (u_k, y_k) completes
// the pending update (phi_{k-1}, y_k) and prepares phi_k.
class ArmaxIdentifier {
 public:
  ArmaxIdentifier(const ArmaxSystem& orders_only, NoiseOrders noise_orders, double noise_mu,
                  IdentifierConfig config);

  // True when the row triggered an identifier update (every row but the first).
  bool observe(const Vector& u, const Vector& y);

  const SparseIdentifier& identifier() const { return id_; }
  const ArmaxRegressorStream& regressors() const { return stream_; }

 private:
  ArmaxRegressorStream stream_;
  SparseIdentifier id_;
  Vector pending_phi_;
  bool has_pending_ = false;
};

}  // namespace sparse_armax
