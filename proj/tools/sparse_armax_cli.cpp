// sparse-armax: simulate, identify, benchmark and snr subcommands.

#include "sparse_armax/benchmark.hpp"
#include "sparse_armax/config.hpp"
#include "sparse_armax/identifier.hpp"
#include "sparse_armax/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sparse_armax;

namespace {

struct CommonFlags {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  std::int64_t stride = 0;
  int workers = 0;
  std::string input = "-";
  CLI::Option* seed_opt = nullptr;
  CLI::Option* stride_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--out", f.out, "output directory");
  f.seed_opt = cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--set", f.overrides, "override a config key: key=value (repeatable)");
  f.stride_opt = cmd->add_option("--stride", f.stride, "snapshot / checkpoint stride")
                     ->check(CLI::PositiveNumber);
  f.workers_opt = cmd->add_option("--workers", f.workers, "benchmark worker threads")
                      ->check(CLI::PositiveNumber);
}

RunConfig load(const CommonFlags& f) {
  ConfigSources src;
  if (!f.config.empty()) src.path = f.config;
  src.overrides = f.overrides;
  if (*f.seed_opt) src.seed = f.seed;
  if (*f.stride_opt) src.stride = f.stride;
  if (*f.workers_opt) src.workers = f.workers;
  return load_run_config(src);
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw DataError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

json theta_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_simulate(const CommonFlags& f) {
  const RunConfig cfg = load(f);
  const fs::path dir = prepare_out(f.out);
  const BenchmarkConfig& b = cfg.benchmark;
  json sidecar = {{"scenario", to_string(b.scenario)},
                  {"seed", cfg.seed},
                  {"sigma2", cfg.simulate.sigma2},
                  {"length", cfg.simulate.length}};
  auto out = open_out(dir / "trajectory.csv");
  Matrix theta;
  if (b.scenario == Scenario::example2) {
    InputGeneratorSpec regressors = b.input;
    regressors.random_walk_dims.clear();
    for (int i = 1; i <= b.example2.d / 2; ++i) regressors.random_walk_dims.push_back(i);
    const RegressionTrial trial = generate_linear_regression_trial(
        b.example2.d, b.example2.n, b.example2.density, regressors, cfg.simulate.sigma2,
        cfg.simulate.length, cfg.seed);
    write_regression_csv(out, trial, cfg.simulate.include_noise);
    theta = trial.theta;
    sidecar["d"] = b.example2.d;
    sidecar["n"] = b.example2.n;
  } else {
    if (cfg.simulate.length < 1) throw ConfigError("simulate.length must be positive");
    const Trajectory traj =
        generate_trajectory(b.system, b.input, cfg.simulate.sigma2, cfg.simulate.length, cfg.seed);
    write_trajectory_csv(out, traj, cfg.simulate.include_noise);
    theta = b.system.theta();
    sidecar["system"] = to_json(b.system);
    sidecar["d"] = b.system.d();
    sidecar["n"] = b.system.n;
  }
  out.close();
  if (!out) throw DataError("failed writing trajectory.csv");
  sidecar["theta"] = theta_rows(theta);
  json zeros = json::array();
  const IndexSet zero_set = sparse_index_set(theta);
  for (const auto& [s, t] : zero_set.entries()) zeros.push_back({s + 1, t + 1});
  sidecar["zero_set"] = zeros;
  write_json(dir / "trajectory.json", sidecar);
  std::cout << "wrote " << (dir / "trajectory.csv").string() << '\n';
  return 0;
}

int cmd_identify(const CommonFlags& f) {
  const RunConfig cfg = load(f);
  std::ifstream file;
  std::istream* in = &std::cin;
  if (f.input != "-") {
    file.open(f.input);
    if (!file) throw DataError("cannot open input '" + f.input + "'");
    in = &file;
  }
  const fs::path dir = prepare_out(f.out);
  CsvRowReader reader(*in);
  const CsvLayout& layout = reader.layout();
  const BenchmarkConfig& b = cfg.benchmark;

  std::unique_ptr<ArmaxIdentifier> armax;
  std::unique_ptr<SparseIdentifier> plain;
  if (layout.kind == CsvLayout::Kind::armax) {
    if (b.scenario == Scenario::example2)
      throw DataError("input has u_ columns but the scenario is example2");
    if (layout.inputs != b.system.l || layout.outputs != b.system.n)
      throw DataError("input has " + std::to_string(layout.inputs) + " inputs and " +
                      std::to_string(layout.outputs) + " outputs; the system declares " +
                      std::to_string(b.system.l) + " and " + std::to_string(b.system.n));
    armax = std::make_unique<ArmaxIdentifier>(b.system, b.noise_orders, b.noise_mu, cfg.identifier);
  } else {
    if (b.scenario != Scenario::example2)
      throw DataError("input has phi_ columns but the scenario is not example2");
    if (layout.inputs != b.example2.d || layout.outputs != b.example2.n)
      throw DataError("input dimensions do not match example2.d / example2.n");
    plain = std::make_unique<SparseIdentifier>(layout.inputs, layout.outputs, cfg.identifier);
  }
  auto id = [&]() -> const SparseIdentifier& { return armax ? armax->identifier() : *plain; };
  auto snapshot = [&] {
    const SparseIdentifier& s = id();
    write_json(dir / ("snapshot_" + std::to_string(s.step_count()) + ".json"), s.snapshot());
  };

  snapshot();
  std::int64_t last_written = 0;
  CsvRow row;
  while (reader.next(row)) {
    if (armax) {
      if (!armax->observe(row.input, row.output)) continue;
    } else {
      plain->step(row.input, row.output);
    }
    const std::int64_t n = id().step_count();
    if (n % cfg.stride == 0) {
      snapshot();
      last_written = n;
    }
  }
  if (id().step_count() != last_written) snapshot();
  std::cout << "processed " << row.row << " rows, " << id().step_count() << " updates\n";
  return 0;
}

int cmd_benchmark(const CommonFlags& f) {
  const RunConfig cfg = load(f);
  const fs::path dir = prepare_out(f.out);
  const BenchmarkReport report = run_benchmark(cfg.benchmark);
  write_json(dir / "report.json", report_to_json(report, to_json(cfg)));
  for (Metric m : {Metric::pee, Metric::cr, Metric::ct}) {
    auto out = open_out(dir / (to_string(m) + ".csv"));
    write_metric_csv(out, report, m);
  }
  std::cout << summary_table(report);
  if (report.incomplete) {
    std::cerr << report.excluded << " trial run(s) excluded:\n";
    for (const std::string& msg : report.failures) std::cerr << "  " << msg << '\n';
    return 3;
  }
  return 0;
}

int cmd_snr(const CommonFlags& f) {
  const RunConfig cfg = load(f);
  if (cfg.benchmark.scenario == Scenario::example2)
    throw ConfigError("snr needs an ARMAX scenario");
  const fs::path dir = prepare_out(f.out);
  const SnrReport r =
      snr_report(cfg.benchmark.system, cfg.benchmark.input, cfg.snr.sigma2, cfg.snr.options);
  json channels = json::array();
  for (Eigen::Index i = 0; i < r.snr.size(); ++i) {
    const bool inf = r.infinite[static_cast<std::size_t>(i)] != 0;
    channels.push_back({{"channel", i + 1},
                        {"snr", inf ? json("inf") : json(r.snr(i))},
                        {"signal_variance", r.signal_variance(i)},
                        {"noise_variance", r.noise_variance(i)},
                        {"infinite", inf}});
    std::cout << "channel " << (i + 1) << ": SNR " << (inf ? "inf" : format_double(r.snr(i)))
              << '\n';
  }
  write_json(dir / "snr.json", {{"config", to_json(cfg)}, {"channels", channels}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse ARMAX identification: simulate, identify, benchmark, snr"};
  app.require_subcommand(1);
  CommonFlags sim_flags, ident_flags, bench_flags, snr_flags;
  auto* sim = app.add_subcommand("simulate", "write a simulated trajectory CSV and sidecar");
  auto* ident = app.add_subcommand("identify", "stream a CSV through the identifier");
  auto* bench = app.add_subcommand("benchmark", "run the Monte Carlo benchmark");
  auto* snr = app.add_subcommand("snr", "per-channel signal-to-noise ratios");
  add_common(sim, sim_flags);
  add_common(ident, ident_flags);
  add_common(bench, bench_flags);
  add_common(snr, snr_flags);
  ident->add_option("--input", ident_flags.input, "input CSV, '-' for stdin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(sim_flags);
    if (*ident) return cmd_identify(ident_flags);
    if (*bench) return cmd_benchmark(bench_flags);
    return cmd_snr(snr_flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
