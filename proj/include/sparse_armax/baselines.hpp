#pragma once

#include "sparse_armax/common.hpp"
#include "sparse_armax/identifier.hpp"

#include <memory>
#include <string>
#include <vector>

namespace sparse_armax {

enum class EstimatorKind { alg1, rls, oam, lsw, sindy };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& name);

// Plain recursive least squares started from P_0 = mu I.
struct RlsConfig {
  double mu = 10000.0;
};

// Constant-weight specialization of the alternating recursion: every entry
// is thresholded at lambda / mu, with no eigenvalue-based reweighting.
struct OamConfig {
  double mu = 1.0;
  double lambda = 0.1;
};

struct LswConfig {
  double scale = 1.0;     // lambda_N = scale * N^exponent
  double exponent = 0.8;
  double ridge_mu = 1.0;  // ridge used for the weight denominators
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

struct SindyConfig {
  double threshold = 0.1;
  int max_iterations = 50;
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::alg1;
  IdentifierConfig alg1;
  RlsConfig rls;
  OamConfig oam;
  LswConfig lsw;
  SindyConfig sindy;
};

IdentifierConfig rls_identifier_config(const RlsConfig& cfg);
IdentifierConfig oam_identifier_config(const OamConfig& cfg);

// What a checkpoint reports: `values` is scored for estimation error and
// `sparse` for support recovery.  They coincide except for OAM, which keeps
// Theta as its value path and Xi as its sparse path.
struct CheckpointEstimate {
  Matrix values;
  Matrix sparse;
};

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual EstimatorKind kind() const = 0;
  // Streaming kinds update here; batch kinds only record the sample.
  virtual void observe(const Vector& phi, const Vector& y_next) = 0;
  // Batch kinds solve from scratch over everything observed so far.
  virtual CheckpointEstimate estimate() = 0;
  virtual bool streaming() const = 0;
};

// alg1, rls and oam: thin wrappers over SparseIdentifier.
class StreamingEstimator final : public Estimator {
 public:
  StreamingEstimator(EstimatorKind kind, int d, int n, IdentifierConfig cfg);
  EstimatorKind kind() const override { return kind_; }
  void observe(const Vector& phi, const Vector& y_next) override { id_.step(phi, y_next); }
  CheckpointEstimate estimate() override;
  bool streaming() const override { return true; }
  const SparseIdentifier& identifier() const { return id_; }

 private:
  EstimatorKind kind_;
  SparseIdentifier id_;
};

std::unique_ptr<Estimator> make_estimator(const EstimatorSpec& spec, int d, int n);

// ---------------------------------------------------------------------------
// Batch solvers.  Rows of `phi` are regressors, rows of `y` the matching outputs.

struct LassoOptions {
  double tolerance = 1e-8;
  int max_iterations = 10000;
  bool record_objective = false;
};

struct LassoResult {
  Vector x;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective;  // per iteration when recorded
};

// min_x 1/2 x^T G x - c^T x + sum_s w_s |x_s| by monotone accelerated proximal
// gradient with step 1/lambda_max(G), started from `start`.  Infinite weights
// pin the coordinate at zero.
LassoResult weighted_lasso(const Matrix& gram, const Vector& cross, const Vector& weights,
                           const Vector& start, double lipschitz, const LassoOptions& options);

struct LswResult {
  Matrix x;
  bool converged = true;  // false if any column hit the iteration cap
  int max_iterations_used = 0;
  double lambda = 0.0;
  std::vector<std::vector<double>> objective;  // per column, when recorded
};

// Least squares with adaptive L1 weights lambda_N / |ridge estimate|.
LswResult lsw_solve(const Matrix& phi, const Matrix& y, const LswConfig& cfg,
                    bool record_objective = false);

struct SindyResult {
  Matrix x;
  std::vector<std::vector<int>> active_sizes;  // per column, per iteration
};

// Sequentially thresholded least squares.
SindyResult sindy_solve(const Matrix& phi, const Matrix& y, const SindyConfig& cfg);

}  // namespace sparse_armax
