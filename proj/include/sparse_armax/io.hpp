#pragma once

#include "sparse_armax/armax_model.hpp"
#include "sparse_armax/benchmark.hpp"

#include <json.hpp>

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sparse_armax {

// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

// Header `k,u_1..u_l,y_1..y_n[,w_1..w_n]`, one row per time step.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, bool include_noise);
// Header `k,phi_1..phi_d,y_1..y_n[,w_1..w_n]`, k starting at 1.
void write_regression_csv(std::ostream& out, const RegressionTrial& trial, bool include_noise);

struct CsvLayout {
  enum class Kind { armax, regression };
  Kind kind = Kind::armax;
  int inputs = 0;   // l, or d for regression files
  int outputs = 0;  // n
  bool has_noise = false;
};

struct CsvRow {
  std::int64_t k = 0;
  Vector input;  // u_k, or phi_k
  Vector output;
  std::optional<Vector> noise;
  std::int64_t row = 0;  // one-based data row
};

// Streams rows from either CSV layout.  The header is read on construction;
// malformed rows raise DataError naming the row.
class CsvRowReader {
 public:
  explicit CsvRowReader(std::istream& in);
  const CsvLayout& layout() const { return layout_; }
  bool next(CsvRow& row);

 private:
  std::istream& in_;
  CsvLayout layout_;
  std::size_t columns_ = 0;
  std::int64_t rows_ = 0;
  std::string line_;
  std::vector<double> values_;
};

Trajectory read_trajectory_csv(std::istream& in);

enum class Metric { pee, cr, ct };
std::string to_string(Metric m);

// Long format: `algorithm,sigma2,N,value`.
void write_metric_csv(std::ostream& out, const BenchmarkReport& report, Metric metric);

// Full report; `config_echo` is stored verbatim under "config".
nlohmann::json report_to_json(const BenchmarkReport& report, const nlohmann::json& config_echo);

// Final-checkpoint table: one row per algorithm, one column per sigma2, for
// each of PEE, CR and CT.
std::string summary_table(const BenchmarkReport& report);

}  // namespace sparse_armax
