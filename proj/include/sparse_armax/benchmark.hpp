#pragma once

#include "sparse_armax/armax_model.hpp"
#include "sparse_armax/baselines.hpp"
#include "sparse_armax/common.hpp"
#include "sparse_armax/noise_estimator.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sparse_armax {

enum class Scenario { example1, example2, custom };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

struct Example2Settings {
  int d = 100;
  int n = 100;
  double density = 0.25;
};

struct BenchmarkConfig {
  Scenario scenario = Scenario::example1;
  ArmaxSystem system = ArmaxSystem::example1();  // used by example1 and custom
  InputGeneratorSpec input;                      // inputs, or regressors for example2
  Example2Settings example2;
  NoiseOrders noise_orders{4, 4, 4};
  double noise_mu = 1.0;

  std::vector<double> sigma2_list{0.5};
  int trials = 1;
  std::int64_t n_max = 5000;
  std::int64_t stride = 100;
  std::vector<EstimatorSpec> algorithms;
  std::uint64_t base_seed = 1;
  double tau = kDefaultTau;
  int workers = 1;
  // Record per-trial diagnostics of the alg1 estimator.
  bool diagnostics = true;

  // Fills `algorithms` with all five kinds at their default settings.
  static std::vector<EstimatorSpec> default_algorithms();
  void validate() const;
  int checkpoints() const { return static_cast<int>(n_max / stride); }
};

// Per-trial record of the alg1 run, sampled at each checkpoint.
struct TrialDiagnostics {
  double sigma2 = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> n;
  std::vector<int> support_exact;          // A(Xi_N) == A*
  std::vector<std::int64_t> support_flips;  // cumulative count of steps where A(Xi) changed
  std::vector<double> noise_error_sum;      // sum_{k<=N} |w^_k - w_k|^2 (ARMAX only)
  std::vector<double> lambda_max;
  std::vector<double> lambda_min;
  std::vector<double> theta_error;          // |Theta_N - Theta|_F
  std::vector<double> rate_ratio;           // theta_error / sqrt(log lambda_max / lambda_min)
};

struct MetricSeries {
  EstimatorKind kind = EstimatorKind::alg1;
  double sigma2 = 0.0;
  std::vector<std::int64_t> n;
  std::vector<double> pee, cr, ct;
  int trials_used = 0;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<MetricSeries> series;  // algorithm-major, then sigma2
  std::vector<TrialDiagnostics> diagnostics;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> failures;
  int excluded = 0;
  bool incomplete = false;
  double wall_seconds = 0.0;

  const MetricSeries& find(EstimatorKind kind, double sigma2) const;
};

// ||X - Theta||_F / ||Theta||_F; ConfigError when Theta = 0.
double relative_error(const Matrix& estimate, const Matrix& theta);

// True when every entry of the true zero set is below tau in magnitude and
// every true nonzero is at least tau.
bool support_recovered(const Matrix& estimate, const Matrix& theta, double tau);

// Mean relative error over trials.
double compute_pee(std::span<const Matrix> estimates, const Matrix& theta);
// Fraction of trials with exact support recovery at threshold tau.
double compute_cr(std::span<const Matrix> estimates, const Matrix& theta, double tau);
// Trial-averaged cumulative time; segment_seconds[trial][checkpoint].
std::vector<double> compute_ct(const std::vector<std::vector<double>>& segment_seconds);

BenchmarkReport run_benchmark(const BenchmarkConfig& config);

struct SnrOptions {
  std::int64_t n_probe = 5000;
  int replicas = 200;
  int window = 50;
  std::uint64_t seed = 1;
};

struct SnrReport {
  Vector snr;
  Vector signal_variance;
  Vector noise_variance;
  std::vector<int> infinite;  // 1 where the noise variance is zero
};

// Per-channel Var[y_signal] / Var[y_noise] at k = n_probe.  The signal path
// runs with w = 0 and the noise path with u = 0, from the same seeds; the
// variances pool `replicas` independent runs over the trailing `window` steps.
SnrReport snr_report(const ArmaxSystem& system, const InputGeneratorSpec& input, double sigma2,
                     const SnrOptions& options);

}  // namespace sparse_armax
