#pragma once

#include "sparse_armax/common.hpp"
#include "sparse_armax/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sparse_armax {

// A(z) y_{k+1} = B(z) u_k + C(z) w_{k+1} with
//   A(z) = I + A_1 z + ... + A_p z^p
//   B(z) = B_1 + B_2 z + ... + B_q z^{q-1}
//   C(z) = I + C_1 z + ... + C_r z^r
// and z the backward shift.
struct ArmaxSystem {
  int n = 0;  // outputs
  int l = 0;  // inputs
  int p = 0, q = 0, r = 0;
  std::vector<Matrix> a;  // p blocks, n x n
  std::vector<Matrix> b;  // q blocks, n x l
  std::vector<Matrix> c;  // r blocks, n x n

  int d() const { return n * p + l * q + n * r; }

  // Throws ConfigError when block counts or shapes disagree with the orders.
  void validate() const;

  // Stacked parameter matrix [-A_1 .. -A_p, B_1 .. B_q, C_1 .. C_r]^T, d x n.
  Matrix theta() const;

  // Inverse of theta(): rebuilds the blocks from a stacked d x n matrix.
  static ArmaxSystem from_theta(const Matrix& theta, int n, int l, int p, int q, int r);

  // Ten-channel benchmark system: A_1 = -I, A_2 = 0.5 I, B_1 = I, B_2 = 0.5 I,
  // C_1 = 0.8 I, C_2 = 0.
  static ArmaxSystem example1();
};

// Fixed-capacity lag buffer; at(0) is the most recent vector.  Unwritten
// slots read as zero, which is the k <= 0 padding convention.
class LagBuffer {
 public:
  LagBuffer() = default;
  LagBuffer(int capacity, int dim);

  void push(const Vector& v);
  const Vector& at(int lag) const;
  int capacity() const { return static_cast<int>(slots_.size()); }
  int dim() const { return dim_; }
  void clear();

 private:
  std::vector<Vector> slots_;
  int head_ = 0;
  int dim_ = 0;
};

// Regressor history at time k: y.at(0) = y_k, u.at(0) = u_k, w.at(0) = w_k.
struct ArmaxHistory {
  LagBuffer y, u, w;
  ArmaxHistory() = default;
  ArmaxHistory(int n, int l, int p, int q, int r);
};

// y_{k+1} from the difference equation, given the history at time k (u_k
// already pushed) and the next noise vector.
Vector simulate_step(const ArmaxSystem& system, const ArmaxHistory& at_k, const Vector& w_next);

// [y_k .. y_{k-p+1}, u_k .. u_{k-q+1}, w_k .. w_{k-r+1}] stacked into one d-vector.
// Passing estimated noise in `w` gives the regressor the identifier consumes.
Vector build_phi0(int p, int q, int r, const LagBuffer& y, const LagBuffer& u, const LagBuffer& w);

// Zero-based (row, column) pairs; serialized one-based.
using IndexPair = std::pair<int, int>;

class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(int rows, int cols) : rows_(rows), cols_(cols) {}

  // Entries must be within range; duplicates are dropped.
  static IndexSet from_pairs(int rows, int cols, std::vector<IndexPair> pairs);

  void insert_sorted_unique(IndexPair p) { entries_.push_back(p); }
  bool contains(IndexPair p) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<IndexPair>& entries() const { return entries_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  IndexSet complement() const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<IndexPair> entries_;  // sorted column-major by (col, row)
};

// {(s, t) : |X(s, t)| <= tau}.  tau = 0 gives the exact zero set.
IndexSet sparse_index_set(const Matrix& x, double tau = 0.0);

enum class InputKind { example1_mixed, random_walk, ar1, white };

struct InputGeneratorSpec {
  InputKind kind = InputKind::example1_mixed;
  double ar_coefficient = 0.5;
  std::vector<int> random_walk_dims{1};  // one-based channel indices
  std::uint64_t seed = 0;                // echoed in configs; generators take seeds explicitly

  void validate() const;
};

std::string to_string(InputKind kind);
InputKind parse_input_kind(const std::string& name);

// Streams u_0, u_1, ... started from zero state (u_{-1} = 0):
// u_{k+1}(i) = a_i u_k(i) + v_{k+1}(i) with v ~ N(0, I).
class InputGenerator {
 public:
  InputGenerator(const InputGeneratorSpec& spec, int dim, std::uint64_t seed,
                 std::uint64_t stream);
  Vector next();

 private:
  Vector coeff_;
  Vector state_;
  Rng rng_;
};

struct Observation {
  std::int64_t k = 0;
  Vector u;
  Vector y;
};

struct Trajectory {
  std::vector<Observation> observations;
  std::optional<std::vector<Vector>> true_noise;

  std::size_t size() const { return observations.size(); }
};

// N observations k = 0..N-1.  y_0 = 0 and w_0 = 0; w_k ~ N(0, sigma2 I) i.i.d.
// for k >= 1; inputs from `input_spec` on an independent stream.
Trajectory generate_trajectory(const ArmaxSystem& system, const InputGeneratorSpec& input_spec,
                               double noise_sigma2, std::int64_t length, std::uint64_t seed);

struct RegressionTrial {
  Matrix theta;                 // d x n
  std::vector<Vector> phi;      // phi_1 .. phi_N
  std::vector<Vector> y;        // y_1 .. y_N
  std::vector<Vector> noise;    // w_1 .. w_N
};

// y_k = Theta^T phi_k + w_k with round(density * d * n) unit entries in Theta at
// uniformly random positions and phi generated by `regressor_spec`.
RegressionTrial generate_linear_regression_trial(int d, int n, double density,
                                                 const InputGeneratorSpec& regressor_spec,
                                                 double noise_sigma2, std::int64_t length,
                                                 std::uint64_t seed);

struct CzStability {
  bool stable = true;
  double min_root_modulus = 0.0;  // +inf when det C(z) has no finite roots
};

// Stable iff every root of det C(z) lies strictly outside the closed unit disk.
CzStability check_cz_stability(const ArmaxSystem& system);

}  // namespace sparse_armax
