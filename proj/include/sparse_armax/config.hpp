#pragma once

#include "sparse_armax/benchmark.hpp"
#include "sparse_armax/identifier.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparse_armax {

struct SimulateSettings {
  std::int64_t length = 5000;
  double sigma2 = 0.5;
  bool include_noise = true;  // write the w_ columns
};

struct SnrSettings {
  double sigma2 = 0.5;
  SnrOptions options;
};

// Everything one CLI invocation can be configured with.  The scenario,
// system, input, noise and benchmark fields live in `benchmark`; the
// `identifier` block is both the identify settings and the default alg1
// configuration inside benchmarks.
struct RunConfig {
  BenchmarkConfig benchmark;
  IdentifierConfig identifier;
  SimulateSettings simulate;
  SnrSettings snr;
  std::uint64_t seed = 1;
  std::int64_t stride = 100;  // snapshot stride for identify, checkpoint stride for benchmark

  void validate() const;
};

// Strict parse: unknown keys, wrong types and invalid values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
// Full echo; feeding it back to run_config_from_json reproduces the config.
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json to_json(const ArmaxSystem& system);
ArmaxSystem system_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IdentifierConfig& cfg);
nlohmann::json to_json(const EstimatorSpec& spec);

// Applies "a.b.c=value" to a JSON document.  The value is parsed as JSON when
// possible and taken as a string otherwise; intermediate objects are created.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct ConfigSources {
  std::optional<std::string> path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> stride;
  std::optional<int> workers;
};

// File, then --set overrides, then dedicated flags.  SPARSE_ARMAX_WORKERS
// supplies the worker count when nothing else does.
RunConfig load_run_config(const ConfigSources& sources);

}  // namespace sparse_armax
