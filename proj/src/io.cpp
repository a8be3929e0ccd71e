#include "sparse_armax/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sparse_armax {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void put_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_double(v(i));
}

void put_header(std::ostream& out, const char* in_name, int inputs, int outputs, bool noise) {
  out << 'k';
  for (int i = 1; i <= inputs; ++i) out << ',' << in_name << '_' << i;
  for (int i = 1; i <= outputs; ++i) out << ",y_" << i;
  if (noise)
    for (int i = 1; i <= outputs; ++i) out << ",w_" << i;
  out << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

// Counts a run of columns `prefix_1, prefix_2, ...` starting at `pos`.
int count_prefixed(const std::vector<std::string>& cols, std::size_t& pos, const std::string& prefix) {
  int count = 0;
  while (pos < cols.size() && cols[pos] == prefix + "_" + std::to_string(count + 1)) {
    ++count;
    ++pos;
  }
  return count;
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, bool include_noise) {
  if (traj.observations.empty()) throw DataError("cannot infer dimensions of an empty trajectory");
  const bool noise = include_noise && traj.true_noise.has_value();
  const auto& first = traj.observations.front();
  put_header(out, "u", static_cast<int>(first.u.size()), static_cast<int>(first.y.size()), noise);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Observation& obs = traj.observations[k];
    out << obs.k;
    put_vector(out, obs.u);
    put_vector(out, obs.y);
    if (noise) put_vector(out, (*traj.true_noise)[k]);
    out << '\n';
  }
  if (!out) throw DataError("failed writing trajectory CSV");
}

void write_regression_csv(std::ostream& out, const RegressionTrial& trial, bool include_noise) {
  put_header(out, "phi", static_cast<int>(trial.theta.rows()), static_cast<int>(trial.theta.cols()),
             include_noise);
  for (std::size_t k = 0; k < trial.phi.size(); ++k) {
    out << (k + 1);
    put_vector(out, trial.phi[k]);
    put_vector(out, trial.y[k]);
    if (include_noise) put_vector(out, trial.noise[k]);
    out << '\n';
  }
  if (!out) throw DataError("failed writing regression CSV");
}

CsvRowReader::CsvRowReader(std::istream& in) : in_(in) {
  std::string header;
  if (!std::getline(in_, header)) throw DataError("CSV input is empty (missing header)");
  strip_cr(header);
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
  const auto cols = split(header);
  if (cols.empty() || cols[0] != "k") throw DataError("CSV header must start with 'k'");
  std::size_t pos = 1;
  layout_.inputs = count_prefixed(cols, pos, "u");
  if (layout_.inputs == 0) {
    layout_.inputs = count_prefixed(cols, pos, "phi");
    if (layout_.inputs > 0) layout_.kind = CsvLayout::Kind::regression;
  }
  layout_.outputs = count_prefixed(cols, pos, "y");
  if (layout_.outputs == 0) throw DataError("CSV header has no y_ columns");
  if (pos < cols.size()) {
    const int w = count_prefixed(cols, pos, "w");
    if (w != layout_.outputs) throw DataError("CSV header: w_ columns must match the y_ columns");
    layout_.has_noise = true;
  }
  if (pos != cols.size()) throw DataError("CSV header: unexpected column '" + cols[pos] + "'");
  columns_ = cols.size();
  values_.resize(columns_);
}

bool CsvRowReader::next(CsvRow& row) {
  while (std::getline(in_, line_)) {
    strip_cr(line_);
    ++rows_;
    if (line_.empty()) {
      // Tolerate trailing blank lines only.
      std::string rest;
      while (std::getline(in_, rest)) {
        strip_cr(rest);
        if (!rest.empty()) throw DataError("row " + std::to_string(rows_) + ": empty row");
      }
      return false;
    }
    const char* p = line_.data();
    const char* end = p + line_.size();
    for (std::size_t c = 0; c < columns_; ++c) {
      auto [ptr, ec] = std::from_chars(p, end, values_[c]);
      if (ec != std::errc() || ptr == p)
        throw DataError("row " + std::to_string(rows_) + ": column " + std::to_string(c + 1) +
                        " is not a number");
      p = ptr;
      if (c + 1 < columns_) {
        if (p == end || *p != ',')
          throw DataError("row " + std::to_string(rows_) + ": expected " +
                          std::to_string(columns_) + " columns");
        ++p;
      }
    }
    if (p != end)
      throw DataError("row " + std::to_string(rows_) + ": expected " + std::to_string(columns_) +
                      " columns");
    for (std::size_t c = 1; c < columns_; ++c)
      if (!std::isfinite(values_[c]))
        throw DataError("row " + std::to_string(rows_) + ": non-finite value in column " +
                        std::to_string(c + 1));
    if (values_[0] != std::floor(values_[0]))
      throw DataError("row " + std::to_string(rows_) + ": k must be an integer");

    row.row = rows_;
    row.k = static_cast<std::int64_t>(values_[0]);
    const int l = layout_.inputs, n = layout_.outputs;
    row.input = Eigen::Map<const Vector>(values_.data() + 1, l);
    row.output = Eigen::Map<const Vector>(values_.data() + 1 + l, n);
    if (layout_.has_noise)
      row.noise = Vector(Eigen::Map<const Vector>(values_.data() + 1 + l + n, n));
    else
      row.noise.reset();
    return true;
  }
  return false;
}

Trajectory read_trajectory_csv(std::istream& in) {
  CsvRowReader reader(in);
  if (reader.layout().kind != CsvLayout::Kind::armax)
    throw DataError("expected a trajectory CSV with u_ columns");
  Trajectory traj;
  if (reader.layout().has_noise) traj.true_noise.emplace();
  CsvRow row;
  while (reader.next(row)) {
    traj.observations.push_back({row.k, row.input, row.output});
    if (row.noise) traj.true_noise->push_back(*row.noise);
  }
  return traj;
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::pee: return "pee";
    case Metric::cr: return "cr";
    case Metric::ct: return "ct";
  }
  return "?";
}

namespace {

const std::vector<double>& pick(const MetricSeries& s, Metric m) {
  switch (m) {
    case Metric::pee: return s.pee;
    case Metric::cr: return s.cr;
    case Metric::ct: break;
  }
  return s.ct;
}

json nan_safe(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return out;
}

}  // namespace

void write_metric_csv(std::ostream& out, const BenchmarkReport& report, Metric metric) {
  out << "algorithm,sigma2,N,value\n";
  for (const MetricSeries& s : report.series) {
    const auto& values = pick(s, metric);
    for (std::size_t j = 0; j < s.n.size(); ++j)
      out << to_string(s.kind) << ',' << format_double(s.sigma2) << ',' << s.n[j] << ','
          << format_double(values[j]) << '\n';
  }
  if (!out) throw DataError("failed writing metric CSV");
}

json report_to_json(const BenchmarkReport& report, const json& config_echo) {
  json series = json::array();
  json summary = json::array();
  for (const MetricSeries& s : report.series) {
    series.push_back({{"algorithm", to_string(s.kind)},
                      {"sigma2", s.sigma2},
                      {"N", s.n},
                      {"pee", nan_safe(s.pee)},
                      {"cr", nan_safe(s.cr)},
                      {"ct", nan_safe(s.ct)},
                      {"trials_used", s.trials_used}});
    if (!s.n.empty())
      summary.push_back({{"algorithm", to_string(s.kind)},
                         {"sigma2", s.sigma2},
                         {"N", s.n.back()},
                         {"pee", nan_safe({s.pee.back()})[0]},
                         {"cr", nan_safe({s.cr.back()})[0]},
                         {"ct", nan_safe({s.ct.back()})[0]}});
  }
  json diagnostics = json::array();
  for (const TrialDiagnostics& d : report.diagnostics)
    diagnostics.push_back({{"sigma2", d.sigma2},
                           {"trial", d.trial},
                           {"seed", d.seed},
                           {"N", d.n},
                           {"support_exact", d.support_exact},
                           {"support_flips", d.support_flips},
                           {"noise_error_sum", nan_safe(d.noise_error_sum)},
                           {"lambda_max", nan_safe(d.lambda_max)},
                           {"lambda_min", nan_safe(d.lambda_min)},
                           {"theta_error", nan_safe(d.theta_error)},
                           {"rate_ratio", nan_safe(d.rate_ratio)}});
  return {{"config", config_echo},
          {"series", series},
          {"summary", summary},
          {"diagnostics", diagnostics},
          {"seeds", report.seeds},
          {"failures", report.failures},
          {"excluded", report.excluded},
          {"incomplete", report.incomplete},
          {"wall_seconds", report.wall_seconds}};
}

std::string summary_table(const BenchmarkReport& report) {
  const auto& sigmas = report.config.sigma2_list;
  std::ostringstream out;
  char cell[64];
  for (Metric m : {Metric::pee, Metric::cr, Metric::ct}) {
    const std::int64_t final_n = report.config.n_max;
    out << to_string(m) << " at N=" << final_n << '\n';
    std::snprintf(cell, sizeof cell, "%-10s", "algorithm");
    out << cell;
    for (double s : sigmas) {
      std::snprintf(cell, sizeof cell, " %14s", ("s2=" + format_double(s)).c_str());
      out << cell;
    }
    out << '\n';
    for (std::size_t a = 0; a < report.config.algorithms.size(); ++a) {
      std::snprintf(cell, sizeof cell, "%-10s", to_string(report.config.algorithms[a].kind).c_str());
      out << cell;
      for (std::size_t s = 0; s < sigmas.size(); ++s) {
        const MetricSeries& series = report.series.at(a * sigmas.size() + s);
        const auto& v = pick(series, m);
        std::snprintf(cell, sizeof cell, " %14.6g", v.empty() ? std::nan("") : v.back());
        out << cell;
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace sparse_armax
