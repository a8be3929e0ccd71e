#include "sparse_armax/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <type_traits>

namespace sparse_armax {

using nlohmann::json;

namespace {

// Reads one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return false;
    out = convert<T>(*it, where_ + "." + key);
    return true;
  }

  const json* sub(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<std::int64_t>() < 0) throw ConfigError(where + ": expected a non-negative integer");
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(where + ": expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], where + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

const char* weighting_name(Weighting w) {
  switch (w) {
    case Weighting::adaptive: return "adaptive";
    case Weighting::constant: return "constant";
    case Weighting::none: return "none";
  }
  return "?";
}

Weighting parse_weighting(const std::string& s) {
  for (Weighting w : {Weighting::adaptive, Weighting::constant, Weighting::none})
    if (s == weighting_name(w)) return w;
  throw ConfigError("unknown weighting '" + s + "'");
}

const char* policy_name(EigenPolicy p) {
  switch (p) {
    case EigenPolicy::every_step: return "every_step";
    case EigenPolicy::stride: return "stride";
    case EigenPolicy::final_only: return "final_only";
  }
  return "?";
}

EigenPolicy parse_policy(const std::string& s) {
  for (EigenPolicy p : {EigenPolicy::every_step, EigenPolicy::stride, EigenPolicy::final_only})
    if (s == policy_name(p)) return p;
  throw ConfigError("unknown eigen policy '" + s + "'");
}

const char* method_name(EigenMethod m) { return m == EigenMethod::full ? "full" : "power"; }

EigenMethod parse_method(const std::string& s) {
  if (s == "full") return EigenMethod::full;
  if (s == "power") return EigenMethod::power;
  throw ConfigError("unknown eigen method '" + s + "'");
}

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const json& v, const std::string& where) {
  const auto rows = ObjectReader::convert<std::vector<std::vector<double>>>(v, where);
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError(where + ": ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::vector<Matrix> blocks_from_json(const json* v, const std::string& where) {
  std::vector<Matrix> out;
  if (!v) return out;
  if (!v->is_array()) throw ConfigError(where + ": expected an array of matrices");
  for (std::size_t i = 0; i < v->size(); ++i)
    out.push_back(matrix_from_rows((*v)[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

IdentifierConfig identifier_from_json(const json& j, const std::string& where,
                                      IdentifierConfig cfg) {
  ObjectReader r(j, where);
  r.get("mu", cfg.mu);
  r.get("constant_lambda", cfg.constant_lambda);
  std::string s;
  if (r.get("mode", s)) cfg.mode = parse_sparse_mode(s);
  if (r.get("weighting", s)) cfg.weighting = parse_weighting(s);
  if (const json* lj = r.sub("lambda")) {
    ObjectReader lr(*lj, r.path("lambda"));
    if (lr.get("kind", s)) cfg.schedule.kind = parse_lambda_kind(s);
    lr.get("scale", cfg.schedule.scale);
    lr.get("exponent", cfg.schedule.exponent);
    lr.get("table", cfg.schedule.table);
    lr.finish();
  }
  if (const json* ej = r.sub("eigen")) {
    ObjectReader er(*ej, r.path("eigen"));
    if (er.get("policy", s)) cfg.eigen.policy = parse_policy(s);
    er.get("stride", cfg.eigen.stride);
    if (er.get("method", s)) cfg.eigen.method = parse_method(s);
    er.finish();
  }
  r.finish();
  return cfg;
}

EstimatorSpec estimator_from_json(const json& j, const std::string& where,
                                  const IdentifierConfig& alg1_default) {
  EstimatorSpec spec;
  spec.alg1 = alg1_default;
  if (j.is_string()) {
    spec.kind = parse_estimator_kind(j.get<std::string>());
    return spec;
  }
  ObjectReader r(j, where);
  std::string kind;
  if (!r.get("kind", kind)) throw ConfigError(where + ": missing 'kind'");
  spec.kind = parse_estimator_kind(kind);
  switch (spec.kind) {
    case EstimatorKind::alg1:
      if (const json* ij = r.sub("identifier"))
        spec.alg1 = identifier_from_json(*ij, r.path("identifier"), alg1_default);
      break;
    case EstimatorKind::rls: r.get("mu", spec.rls.mu); break;
    case EstimatorKind::oam:
      r.get("mu", spec.oam.mu);
      r.get("lambda", spec.oam.lambda);
      break;
    case EstimatorKind::lsw:
      r.get("scale", spec.lsw.scale);
      r.get("exponent", spec.lsw.exponent);
      r.get("ridge_mu", spec.lsw.ridge_mu);
      r.get("tolerance", spec.lsw.tolerance);
      r.get("max_iterations", spec.lsw.max_iterations);
      break;
    case EstimatorKind::sindy:
      r.get("threshold", spec.sindy.threshold);
      r.get("max_iterations", spec.sindy.max_iterations);
      break;
  }
  r.finish();
  return spec;
}

void validate_estimator(const EstimatorSpec& s) {
  switch (s.kind) {
    case EstimatorKind::alg1: s.alg1.validate(); break;
    case EstimatorKind::rls:
      if (!(s.rls.mu > 0.0)) throw ConfigError("rls: mu must be positive");
      break;
    case EstimatorKind::oam:
      if (!(s.oam.mu > 0.0)) throw ConfigError("oam: mu must be positive");
      if (!(s.oam.lambda >= 0.0)) throw ConfigError("oam: lambda must be non-negative");
      break;
    case EstimatorKind::lsw:
      if (!(s.lsw.scale > 0.0)) throw ConfigError("lsw: scale must be positive");
      if (!(s.lsw.ridge_mu > 0.0)) throw ConfigError("lsw: ridge_mu must be positive");
      if (!(s.lsw.tolerance > 0.0)) throw ConfigError("lsw: tolerance must be positive");
      if (s.lsw.max_iterations < 1) throw ConfigError("lsw: max_iterations must be positive");
      break;
    case EstimatorKind::sindy:
      if (!(s.sindy.threshold >= 0.0)) throw ConfigError("sindy: threshold must be non-negative");
      if (s.sindy.max_iterations < 1) throw ConfigError("sindy: max_iterations must be positive");
      break;
  }
}

}  // namespace

json to_json(const ArmaxSystem& system) {
  auto blocks = [](const std::vector<Matrix>& bs) {
    json out = json::array();
    for (const Matrix& m : bs) out.push_back(matrix_rows(m));
    return out;
  };
  return {{"n", system.n}, {"l", system.l}, {"p", system.p}, {"q", system.q}, {"r", system.r},
          {"A", blocks(system.a)}, {"B", blocks(system.b)}, {"C", blocks(system.c)}};
}

ArmaxSystem system_from_json(const json& j) {
  ObjectReader r(j, "system");
  ArmaxSystem s;
  if (!r.get("n", s.n) || !r.get("l", s.l) || !r.get("p", s.p) || !r.get("q", s.q) ||
      !r.get("r", s.r))
    throw ConfigError("system: n, l, p, q and r are required");
  s.a = blocks_from_json(r.sub("A"), "system.A");
  s.b = blocks_from_json(r.sub("B"), "system.B");
  s.c = blocks_from_json(r.sub("C"), "system.C");
  r.finish();
  s.validate();
  return s;
}

json to_json(const IdentifierConfig& cfg) {
  return {{"mu", cfg.mu},
          {"lambda",
           {{"kind", to_string(cfg.schedule.kind)},
            {"scale", cfg.schedule.scale},
            {"exponent", cfg.schedule.exponent},
            {"table", cfg.schedule.table}}},
          {"mode", to_string(cfg.mode)},
          {"weighting", weighting_name(cfg.weighting)},
          {"constant_lambda", cfg.constant_lambda},
          {"eigen",
           {{"policy", policy_name(cfg.eigen.policy)},
            {"stride", cfg.eigen.stride},
            {"method", method_name(cfg.eigen.method)}}}};
}

json to_json(const EstimatorSpec& spec) {
  json j = {{"kind", to_string(spec.kind)}};
  switch (spec.kind) {
    case EstimatorKind::alg1: j["identifier"] = to_json(spec.alg1); break;
    case EstimatorKind::rls: j["mu"] = spec.rls.mu; break;
    case EstimatorKind::oam:
      j["mu"] = spec.oam.mu;
      j["lambda"] = spec.oam.lambda;
      break;
    case EstimatorKind::lsw:
      j["scale"] = spec.lsw.scale;
      j["exponent"] = spec.lsw.exponent;
      j["ridge_mu"] = spec.lsw.ridge_mu;
      j["tolerance"] = spec.lsw.tolerance;
      j["max_iterations"] = spec.lsw.max_iterations;
      break;
    case EstimatorKind::sindy:
      j["threshold"] = spec.sindy.threshold;
      j["max_iterations"] = spec.sindy.max_iterations;
      break;
  }
  return j;
}

void RunConfig::validate() const {
  if (stride < 1) throw ConfigError("stride must be positive");
  identifier.validate();
  if (simulate.length < 0) throw ConfigError("simulate.length must be non-negative");
  if (!(simulate.sigma2 >= 0.0)) throw ConfigError("simulate.sigma2 must be non-negative");
  if (!(snr.sigma2 > 0.0)) throw ConfigError("snr.sigma2 must be positive");
  const NoiseOrders& o = benchmark.noise_orders;
  if (o.pbar < 0 || o.qbar < 0 || o.rbar < 0) throw ConfigError("noise orders must be non-negative");
  if (!(benchmark.noise_mu > 0.0)) throw ConfigError("noise_estimator.mu must be positive");
  for (const EstimatorSpec& s : benchmark.algorithms) validate_estimator(s);
  benchmark.validate();
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  ObjectReader r(j, "config");
  r.get("seed", cfg.seed);
  r.get("stride", cfg.stride);

  BenchmarkConfig& b = cfg.benchmark;
  std::string s;
  if (r.get("scenario", s)) b.scenario = parse_scenario(s);
  if (const json* sj = r.sub("system")) {
    if (b.scenario != Scenario::custom)
      throw ConfigError("config.system is only accepted with scenario 'custom'");
    b.system = system_from_json(*sj);
  } else if (b.scenario == Scenario::custom) {
    throw ConfigError("scenario 'custom' requires a system block");
  }
  if (const json* ij = r.sub("input")) {
    ObjectReader ir(*ij, "config.input");
    if (ir.get("kind", s)) b.input.kind = parse_input_kind(s);
    ir.get("ar_coefficient", b.input.ar_coefficient);
    ir.get("random_walk_dims", b.input.random_walk_dims);
    ir.finish();
  }
  if (const json* ej = r.sub("example2")) {
    ObjectReader er(*ej, "config.example2");
    er.get("d", b.example2.d);
    er.get("n", b.example2.n);
    er.get("density", b.example2.density);
    er.finish();
  }
  if (const json* nj = r.sub("noise_estimator")) {
    ObjectReader nr(*nj, "config.noise_estimator");
    nr.get("pbar", b.noise_orders.pbar);
    nr.get("qbar", b.noise_orders.qbar);
    nr.get("rbar", b.noise_orders.rbar);
    nr.get("mu", b.noise_mu);
    nr.finish();
  }
  if (const json* ij = r.sub("identifier"))
    cfg.identifier = identifier_from_json(*ij, "config.identifier", cfg.identifier);
  if (const json* sj = r.sub("simulate")) {
    ObjectReader sr(*sj, "config.simulate");
    sr.get("length", cfg.simulate.length);
    sr.get("sigma2", cfg.simulate.sigma2);
    sr.get("include_noise", cfg.simulate.include_noise);
    sr.finish();
  }
  if (const json* sj = r.sub("snr")) {
    ObjectReader sr(*sj, "config.snr");
    sr.get("sigma2", cfg.snr.sigma2);
    sr.get("n_probe", cfg.snr.options.n_probe);
    sr.get("replicas", cfg.snr.options.replicas);
    sr.get("window", cfg.snr.options.window);
    sr.finish();
  }
  b.algorithms.clear();
  if (const json* bj = r.sub("benchmark")) {
    ObjectReader br(*bj, "config.benchmark");
    br.get("sigma2_list", b.sigma2_list);
    br.get("trials", b.trials);
    br.get("n_max", b.n_max);
    br.get("tau", b.tau);
    br.get("workers", b.workers);
    br.get("diagnostics", b.diagnostics);
    if (const json* aj = br.sub("algorithms")) {
      if (!aj->is_array()) throw ConfigError("config.benchmark.algorithms: expected an array");
      for (std::size_t i = 0; i < aj->size(); ++i)
        b.algorithms.push_back(estimator_from_json(
            (*aj)[i], "config.benchmark.algorithms[" + std::to_string(i) + "]", cfg.identifier));
    }
    br.finish();
  }
  r.finish();

  if (b.algorithms.empty()) {
    b.algorithms = BenchmarkConfig::default_algorithms();
    for (EstimatorSpec& spec : b.algorithms) spec.alg1 = cfg.identifier;
  }
  b.base_seed = cfg.seed;
  b.stride = cfg.stride;
  cfg.snr.options.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const BenchmarkConfig& b = cfg.benchmark;
  json algorithms = json::array();
  for (const EstimatorSpec& s : b.algorithms) algorithms.push_back(to_json(s));
  json j = {
      {"seed", cfg.seed},
      {"stride", cfg.stride},
      {"scenario", to_string(b.scenario)},
      {"input",
       {{"kind", to_string(b.input.kind)},
        {"ar_coefficient", b.input.ar_coefficient},
        {"random_walk_dims", b.input.random_walk_dims}}},
      {"example2", {{"d", b.example2.d}, {"n", b.example2.n}, {"density", b.example2.density}}},
      {"noise_estimator",
       {{"pbar", b.noise_orders.pbar},
        {"qbar", b.noise_orders.qbar},
        {"rbar", b.noise_orders.rbar},
        {"mu", b.noise_mu}}},
      {"identifier", to_json(cfg.identifier)},
      {"simulate",
       {{"length", cfg.simulate.length},
        {"sigma2", cfg.simulate.sigma2},
        {"include_noise", cfg.simulate.include_noise}}},
      {"snr",
       {{"sigma2", cfg.snr.sigma2},
        {"n_probe", cfg.snr.options.n_probe},
        {"replicas", cfg.snr.options.replicas},
        {"window", cfg.snr.options.window}}},
      {"benchmark",
       {{"sigma2_list", b.sigma2_list},
        {"trials", b.trials},
        {"n_max", b.n_max},
        {"tau", b.tau},
        {"workers", b.workers},
        {"diagnostics", b.diagnostics},
        {"algorithms", algorithms}}}};
  if (b.scenario == Scenario::custom) j["system"] = to_json(b.system);
  return j;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  if (!doc.is_object()) doc = json::object();
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object())
      throw ConfigError("override key '" + key + "': '" + part + "' is not an object");
    node = &child;
    start = dot + 1;
  }
}

RunConfig load_run_config(const ConfigSources& sources) {
  json doc = json::object();
  if (sources.path) {
    std::ifstream in(*sources.path);
    if (!in) throw ConfigError("cannot open config file '" + *sources.path + "'");
    doc = json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw ConfigError("config file '" + *sources.path + "' is not valid JSON");
  }
  for (const std::string& o : sources.overrides) apply_override(doc, o);
  if (sources.seed) doc["seed"] = *sources.seed;
  if (sources.stride) doc["stride"] = *sources.stride;
  if (sources.workers) {
    apply_override(doc, "benchmark.workers=" + std::to_string(*sources.workers));
  } else if (const char* env = std::getenv("SPARSE_ARMAX_WORKERS");
             env && *env && !(doc.contains("benchmark") && doc["benchmark"].is_object() &&
                              doc["benchmark"].contains("workers"))) {
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (*end != '\0' || w < 1) throw ConfigError("SPARSE_ARMAX_WORKERS must be a positive integer");
    apply_override(doc, "benchmark.workers=" + std::to_string(w));
  }
  return run_config_from_json(doc);
}

}  // namespace sparse_armax
