#include "sparse_armax/benchmark.hpp"

#include "sparse_armax/identifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace sparse_armax {

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::example1: return "example1";
    case Scenario::example2: return "example2";
    case Scenario::custom: return "custom";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::example1, Scenario::example2, Scenario::custom})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::vector<EstimatorSpec> BenchmarkConfig::default_algorithms() {
  std::vector<EstimatorSpec> out;
  for (EstimatorKind k : {EstimatorKind::alg1, EstimatorKind::rls, EstimatorKind::oam,
                          EstimatorKind::lsw, EstimatorKind::sindy}) {
    EstimatorSpec s;
    s.kind = k;
    out.push_back(s);
  }
  return out;
}

void BenchmarkConfig::validate() const {
  if (trials < 1) throw ConfigError("benchmark: T must be at least 1");
  if (n_max < 1) throw ConfigError("benchmark: N_max must be positive");
  if (stride < 1) throw ConfigError("benchmark: stride must be positive");
  if (n_max % stride != 0) throw ConfigError("benchmark: N_max must be divisible by the stride");
  if (sigma2_list.empty()) throw ConfigError("benchmark: sigma2_list is empty");
  for (double s : sigma2_list)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("benchmark: sigma2 must be positive");
  if (algorithms.empty()) throw ConfigError("benchmark: no algorithms configured");
  if (!(tau > 0.0)) throw ConfigError("benchmark: tau must be positive");
  if (workers < 1) throw ConfigError("benchmark: workers must be at least 1");
  if (scenario == Scenario::example2) {
    if (example2.d < 1 || example2.n < 1) throw ConfigError("example2: d and n must be positive");
    if (!(example2.density > 0.0 && example2.density <= 1.0))
      throw ConfigError("example2: density must lie in (0, 1]");
  } else {
    system.validate();
    input.validate();
  }
  for (const EstimatorSpec& a : algorithms)
    if (a.kind == EstimatorKind::alg1) a.alg1.validate();
}

const MetricSeries& BenchmarkReport::find(EstimatorKind kind, double sigma2) const {
  for (const MetricSeries& s : series)
    if (s.kind == kind && s.sigma2 == sigma2) return s;
  throw ConfigError("report has no series for " + to_string(kind));
}

double relative_error(const Matrix& estimate, const Matrix& theta) {
  const double norm = theta.norm();
  if (norm == 0.0) throw ConfigError("relative error undefined for a zero parameter matrix");
  if (estimate.rows() != theta.rows() || estimate.cols() != theta.cols())
    throw DataError("relative error: shape mismatch");
  return (estimate - theta).norm() / norm;
}

bool support_recovered(const Matrix& estimate, const Matrix& theta, double tau) {
  if (estimate.rows() != theta.rows() || estimate.cols() != theta.cols())
    throw DataError("support check: shape mismatch");
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double v = std::abs(estimate.data()[i]);
    if (theta.data()[i] == 0.0 ? !(v < tau) : !(v >= tau)) return false;
  }
  return true;
}

double compute_pee(std::span<const Matrix> estimates, const Matrix& theta) {
  if (estimates.empty()) throw ConfigError("compute_pee: no estimates");
  double sum = 0.0;
  for (const Matrix& x : estimates) sum += relative_error(x, theta);
  return sum / static_cast<double>(estimates.size());
}

double compute_cr(std::span<const Matrix> estimates, const Matrix& theta, double tau) {
  if (estimates.empty()) throw ConfigError("compute_cr: no estimates");
  double hits = 0.0;
  for (const Matrix& x : estimates) hits += support_recovered(x, theta, tau) ? 1.0 : 0.0;
  return hits / static_cast<double>(estimates.size());
}

std::vector<double> compute_ct(const std::vector<std::vector<double>>& segment_seconds) {
  if (segment_seconds.empty()) return {};
  const std::size_t len = segment_seconds.front().size();
  std::vector<double> out(len, 0.0);
  for (const auto& trial : segment_seconds) {
    if (trial.size() != len) throw DataError("compute_ct: ragged timing series");
    double cum = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      cum += trial[j];
      out[j] += cum;
    }
  }
  for (double& v : out) v /= static_cast<double>(segment_seconds.size());
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct TrialData {
  Matrix theta;
  std::vector<Vector> phi;     // phi_N for N = 0..n_max-1
  std::vector<Vector> y_next;  // the output each phi_N predicts
  std::vector<double> noise_error;  // |w^ - w|^2 per step, ARMAX only
};

InputGeneratorSpec example2_regressors(int d) {
  InputGeneratorSpec spec;
  spec.kind = InputKind::example1_mixed;
  spec.ar_coefficient = 0.5;
  spec.random_walk_dims.clear();
  for (int i = 1; i <= d / 2; ++i) spec.random_walk_dims.push_back(i);
  return spec;
}

TrialData make_trial_data(const BenchmarkConfig& cfg, double sigma2, std::uint64_t seed) {
  TrialData data;
  const auto steps = static_cast<std::size_t>(cfg.n_max);
  data.phi.reserve(steps);
  data.y_next.reserve(steps);
  if (cfg.scenario == Scenario::example2) {
    const auto& e = cfg.example2;
    RegressionTrial trial = generate_linear_regression_trial(
        e.d, e.n, e.density, example2_regressors(e.d), sigma2, cfg.n_max, seed);
    data.theta = std::move(trial.theta);
    data.phi = std::move(trial.phi);
    data.y_next = std::move(trial.y);
    return data;
  }
  const ArmaxSystem& sys = cfg.system;
  data.theta = sys.theta();
  const Trajectory traj = generate_trajectory(sys, cfg.input, sigma2, cfg.n_max + 1, seed);
  ArmaxRegressorStream stream(sys.n, sys.l, sys.p, sys.q, sys.r, cfg.noise_orders, cfg.noise_mu);
  data.noise_error.reserve(steps + 1);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Observation& obs = traj.observations[k];
    Vector phi = stream.push(obs.u, obs.y);
    data.noise_error.push_back(
        (stream.noise().last_estimate() - (*traj.true_noise)[k]).squaredNorm());
    if (k + 1 < traj.size()) data.phi.push_back(std::move(phi));
    if (k >= 1) data.y_next.push_back(obs.y);
  }
  return data;
}

struct AlgorithmOutcome {
  bool ok = false;
  std::string error;
  std::vector<double> pee, cr, seconds;
};

struct UnitOutcome {
  std::vector<AlgorithmOutcome> algorithms;
  TrialDiagnostics diagnostics;
  bool has_diagnostics = false;
};

AlgorithmOutcome run_algorithm(const BenchmarkConfig& cfg, const EstimatorSpec& spec,
                               const TrialData& data, TrialDiagnostics* diag) {
  AlgorithmOutcome out;
  const int d = static_cast<int>(data.theta.rows());
  const int n = static_cast<int>(data.theta.cols());
  auto est = make_estimator(spec, d, n);
  const auto* streaming = dynamic_cast<const StreamingEstimator*>(est.get());
  if (streaming == nullptr) diag = nullptr;

  std::vector<unsigned char> prev_zero;
  if (diag) prev_zero.assign(static_cast<std::size_t>(data.theta.size()), 1);
  std::int64_t flips = 0;
  double noise_sum = 0.0;
  double segment = 0.0;

  for (std::int64_t step = 0; step < cfg.n_max; ++step) {
    const auto idx = static_cast<std::size_t>(step);
    const auto t0 = Clock::now();
    est->observe(data.phi[idx], data.y_next[idx]);
    segment += std::chrono::duration<double>(Clock::now() - t0).count();

    if (diag) {
      const Matrix& xi = streaming->identifier().xi();
      bool changed = false;
      for (Eigen::Index i = 0; i < xi.size(); ++i) {
        const unsigned char z = xi.data()[i] == 0.0 ? 1 : 0;
        if (z != prev_zero[static_cast<std::size_t>(i)]) {
          changed = true;
          prev_zero[static_cast<std::size_t>(i)] = z;
        }
      }
      // The very first update leaves the all-zero start; that is not a flip.
      if (changed && step > 0) ++flips;
      if (!data.noise_error.empty()) noise_sum += data.noise_error[idx + 1];
    }

    if ((step + 1) % cfg.stride != 0) continue;
    const auto t1 = Clock::now();
    const CheckpointEstimate ce = est->estimate();
    segment += std::chrono::duration<double>(Clock::now() - t1).count();
    out.pee.push_back(relative_error(ce.values, data.theta));
    out.cr.push_back(support_recovered(ce.sparse, data.theta, cfg.tau) ? 1.0 : 0.0);
    out.seconds.push_back(segment);
    segment = 0.0;

    if (diag) {
      const SparseIdentifier& id = streaming->identifier();
      bool exact = true;
      for (Eigen::Index i = 0; i < data.theta.size() && exact; ++i)
        exact = (id.xi().data()[i] == 0.0) == (data.theta.data()[i] == 0.0);
      const double err = (id.theta() - data.theta).norm();
      const double scale = std::sqrt(std::log(id.lambda_max()) / id.lambda_min());
      diag->n.push_back(step + 1);
      diag->support_exact.push_back(exact ? 1 : 0);
      diag->support_flips.push_back(flips);
      diag->noise_error_sum.push_back(noise_sum);
      diag->lambda_max.push_back(id.lambda_max());
      diag->lambda_min.push_back(id.lambda_min());
      diag->theta_error.push_back(err);
      diag->rate_ratio.push_back(scale > 0.0 ? err / scale
                                             : std::numeric_limits<double>::infinity());
    }
  }
  out.ok = true;
  return out;
}

UnitOutcome run_unit(const BenchmarkConfig& cfg, double sigma2, int trial) {
  UnitOutcome unit;
  unit.algorithms.resize(cfg.algorithms.size());
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
  TrialData data;
  try {
    data = make_trial_data(cfg, sigma2, seed);
  } catch (const std::exception& e) {
    for (auto& a : unit.algorithms) a.error = std::string("data generation: ") + e.what();
    return unit;
  }
  bool diag_taken = false;
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
    const EstimatorSpec& spec = cfg.algorithms[i];
    TrialDiagnostics* diag = nullptr;
    if (cfg.diagnostics && !diag_taken && spec.kind == EstimatorKind::alg1) {
      diag = &unit.diagnostics;
      diag->sigma2 = sigma2;
      diag->trial = trial;
      diag->seed = seed;
    }
    try {
      unit.algorithms[i] = run_algorithm(cfg, spec, data, diag);
      if (diag) diag_taken = unit.has_diagnostics = true;
    } catch (const std::exception& e) {
      unit.algorithms[i].ok = false;
      unit.algorithms[i].error = e.what();
      if (diag) *diag = TrialDiagnostics{};
    }
  }
  return unit;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  const auto wall0 = Clock::now();
  const std::size_t n_sigma = config.sigma2_list.size();
  const auto n_trials = static_cast<std::size_t>(config.trials);
  const std::size_t units = n_sigma * n_trials;

  std::vector<UnitOutcome> outcomes(units);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next.fetch_add(1); u < units; u = next.fetch_add(1))
      outcomes[u] = run_unit(config, config.sigma2_list[u / n_trials],
                             static_cast<int>(u % n_trials));
  };
  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(units)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  BenchmarkReport report;
  report.config = config;
  for (std::size_t t = 0; t < n_trials; ++t) report.seeds.push_back(config.base_seed + t);

  const int checkpoints = config.checkpoints();
  for (std::size_t a = 0; a < config.algorithms.size(); ++a) {
    for (std::size_t s = 0; s < n_sigma; ++s) {
      MetricSeries series;
      series.kind = config.algorithms[a].kind;
      series.sigma2 = config.sigma2_list[s];
      for (int j = 1; j <= checkpoints; ++j) series.n.push_back(j * config.stride);
      series.pee.assign(static_cast<std::size_t>(checkpoints), 0.0);
      series.cr.assign(static_cast<std::size_t>(checkpoints), 0.0);
      std::vector<std::vector<double>> times;
      for (std::size_t t = 0; t < n_trials; ++t) {
        const AlgorithmOutcome& o = outcomes[s * n_trials + t].algorithms[a];
        if (!o.ok) {
          ++report.excluded;
          report.failures.push_back(to_string(series.kind) + " sigma2=" +
                                    std::to_string(series.sigma2) + " trial " +
                                    std::to_string(t) + ": " + o.error);
          continue;
        }
        ++series.trials_used;
        for (std::size_t j = 0; j < series.pee.size(); ++j) {
          series.pee[j] += o.pee[j];
          series.cr[j] += o.cr[j];
        }
        times.push_back(o.seconds);
      }
      if (series.trials_used > 0) {
        for (std::size_t j = 0; j < series.pee.size(); ++j) {
          series.pee[j] /= series.trials_used;
          series.cr[j] /= series.trials_used;
        }
        series.ct = compute_ct(times);
      } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        std::fill(series.pee.begin(), series.pee.end(), nan);
        std::fill(series.cr.begin(), series.cr.end(), nan);
        series.ct.assign(series.pee.size(), nan);
      }
      report.series.push_back(std::move(series));
    }
  }
  for (const UnitOutcome& u : outcomes)
    if (u.has_diagnostics) report.diagnostics.push_back(u.diagnostics);
  report.incomplete = report.excluded > 0;
  report.wall_seconds = std::chrono::duration<double>(Clock::now() - wall0).count();
  return report;
}

SnrReport snr_report(const ArmaxSystem& system, const InputGeneratorSpec& input, double sigma2,
                     const SnrOptions& options) {
  system.validate();
  if (!(sigma2 >= 0.0)) throw ConfigError("snr: sigma2 must be non-negative");
  if (options.n_probe < 1 || options.replicas < 1 || options.window < 1 ||
      options.window > options.n_probe + 1)
    throw ConfigError("snr: need n_probe >= 1, replicas >= 1 and 1 <= window <= n_probe + 1");

  ArmaxSystem noise_only = system;
  for (Matrix& b : noise_only.b) b.setZero();

  const int n = system.n;
  Vector sig_sum = Vector::Zero(n), sig_sq = Vector::Zero(n);
  Vector noi_sum = Vector::Zero(n), noi_sq = Vector::Zero(n);
  double count = 0.0;
  for (int rep = 0; rep < options.replicas; ++rep) {
    const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(rep);
    const Trajectory signal = generate_trajectory(system, input, 0.0, options.n_probe + 1, seed);
    const Trajectory noise =
        generate_trajectory(noise_only, input, sigma2, options.n_probe + 1, seed);
    for (std::int64_t k = options.n_probe - options.window + 1; k <= options.n_probe; ++k) {
      const Vector& ys = signal.observations[static_cast<std::size_t>(k)].y;
      const Vector& yn = noise.observations[static_cast<std::size_t>(k)].y;
      sig_sum += ys;
      sig_sq += ys.cwiseAbs2();
      noi_sum += yn;
      noi_sq += yn.cwiseAbs2();
      count += 1.0;
    }
  }
  SnrReport out;
  auto variance = [&](const Vector& sum, const Vector& sq) -> Vector {
    if (count < 2.0) return Vector::Zero(n);
    return (sq - sum.cwiseAbs2() / count) / (count - 1.0);
  };
  out.signal_variance = variance(sig_sum, sig_sq);
  out.noise_variance = variance(noi_sum, noi_sq);
  out.snr = Vector(n);
  out.infinite.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (out.noise_variance(i) <= 0.0) {
      out.snr(i) = std::numeric_limits<double>::infinity();
      out.infinite[static_cast<std::size_t>(i)] = 1;
    } else {
      out.snr(i) = out.signal_variance(i) / out.noise_variance(i);
    }
  }
  return out;
}

}  // namespace sparse_armax
