#include "sparse_armax/armax_model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparse_armax {

namespace {

void check_blocks(const std::vector<Matrix>& blocks, int count, int rows, int cols,
                  const char* name) {
  if (static_cast<int>(blocks.size()) != count)
    throw ConfigError(std::string("ArmaxSystem: expected ") + std::to_string(count) + " " + name +
                      " blocks, got " + std::to_string(blocks.size()));
  for (const Matrix& m : blocks)
    if (m.rows() != rows || m.cols() != cols)
      throw ConfigError(std::string("ArmaxSystem: ") + name + " block has shape " +
                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
}

}  // namespace

void ArmaxSystem::validate() const {
  if (n <= 0 || l <= 0) throw ConfigError("ArmaxSystem: dimensions must be positive");
  if (p < 0 || q < 0 || r < 0) throw ConfigError("ArmaxSystem: orders must be non-negative");
  if (p + q + r == 0) throw ConfigError("ArmaxSystem: at least one order must be positive");
  check_blocks(a, p, n, n, "A");
  check_blocks(b, q, n, l, "B");
  check_blocks(c, r, n, n, "C");
}

Matrix ArmaxSystem::theta() const {
  validate();
  Matrix t(d(), n);
  int row = 0;
  for (const Matrix& m : a) {
    t.middleRows(row, n) = -m.transpose();
    row += n;
  }
  for (const Matrix& m : b) {
    t.middleRows(row, l) = m.transpose();
    row += l;
  }
  for (const Matrix& m : c) {
    t.middleRows(row, n) = m.transpose();
    row += n;
  }
  return t;
}

ArmaxSystem ArmaxSystem::from_theta(const Matrix& theta, int n, int l, int p, int q, int r) {
  ArmaxSystem s;
  s.n = n;
  s.l = l;
  s.p = p;
  s.q = q;
  s.r = r;
  if (theta.rows() != s.d() || theta.cols() != n)
    throw ConfigError("ArmaxSystem::from_theta: theta shape does not match the orders");
  int row = 0;
  for (int i = 0; i < p; ++i, row += n) s.a.push_back(-theta.middleRows(row, n).transpose());
  for (int j = 0; j < q; ++j, row += l) s.b.push_back(theta.middleRows(row, l).transpose());
  for (int v = 0; v < r; ++v, row += n) s.c.push_back(theta.middleRows(row, n).transpose());
  return s;
}

ArmaxSystem ArmaxSystem::example1() {
  constexpr int kDim = 10;
  const Matrix eye = Matrix::Identity(kDim, kDim);
  ArmaxSystem s;
  s.n = s.l = kDim;
  s.p = s.q = s.r = 2;
  s.a = {-1.0 * eye, 0.5 * eye};
  s.b = {eye, 0.5 * eye};
  s.c = {0.8 * eye, Matrix::Zero(kDim, kDim)};
  return s;
}

LagBuffer::LagBuffer(int capacity, int dim)
    : slots_(static_cast<std::size_t>(std::max(capacity, 0)), Vector::Zero(dim)), dim_(dim) {}

void LagBuffer::push(const Vector& v) {
  if (slots_.empty()) return;
  head_ = (head_ + capacity() - 1) % capacity();
  slots_[static_cast<std::size_t>(head_)] = v;
}

const Vector& LagBuffer::at(int lag) const {
  return slots_[static_cast<std::size_t>((head_ + lag) % capacity())];
}

void LagBuffer::clear() {
  for (Vector& v : slots_) v.setZero();
  head_ = 0;
}

ArmaxHistory::ArmaxHistory(int n, int l, int p, int q, int r) : y(p, n), u(q, l), w(r, n) {}

Vector simulate_step(const ArmaxSystem& system, const ArmaxHistory& at_k, const Vector& w_next) {
  if (w_next.size() != system.n || at_k.y.dim() != system.n || at_k.u.dim() != system.l ||
      at_k.w.dim() != system.n || at_k.y.capacity() < system.p ||
      at_k.u.capacity() < system.q || at_k.w.capacity() < system.r)
    throw ConfigError("simulate_step: history or noise dimension mismatch");
  Vector y = w_next;
  for (int i = 0; i < system.p; ++i) y.noalias() -= system.a[i] * at_k.y.at(i);
  for (int j = 0; j < system.q; ++j) y.noalias() += system.b[j] * at_k.u.at(j);
  for (int v = 0; v < system.r; ++v) y.noalias() += system.c[v] * at_k.w.at(v);
  return y;
}

Vector build_phi0(int p, int q, int r, const LagBuffer& y, const LagBuffer& u,
                  const LagBuffer& w) {
  if (y.capacity() < p || u.capacity() < q || w.capacity() < r)
    throw ConfigError("build_phi0: history shorter than the model orders");
  Vector phi(p * y.dim() + q * u.dim() + r * w.dim());
  Eigen::Index off = 0;
  for (int i = 0; i < p; ++i, off += y.dim()) phi.segment(off, y.dim()) = y.at(i);
  for (int j = 0; j < q; ++j, off += u.dim()) phi.segment(off, u.dim()) = u.at(j);
  for (int v = 0; v < r; ++v, off += w.dim()) phi.segment(off, w.dim()) = w.at(v);
  return phi;
}

IndexSet IndexSet::from_pairs(int rows, int cols, std::vector<IndexPair> pairs) {
  for (const auto& [s, t] : pairs)
    if (s < 0 || s >= rows || t < 0 || t >= cols)
      throw DataError("IndexSet: index (" + std::to_string(s + 1) + ", " + std::to_string(t + 1) +
                      ") out of range");
  std::sort(pairs.begin(), pairs.end(), [](const IndexPair& x, const IndexPair& y) {
    return x.second != y.second ? x.second < y.second : x.first < y.first;
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  IndexSet set(rows, cols);
  set.entries_ = std::move(pairs);
  return set;
}

bool IndexSet::contains(IndexPair p) const {
  return std::binary_search(entries_.begin(), entries_.end(), p,
                            [](const IndexPair& x, const IndexPair& y) {
                              return x.second != y.second ? x.second < y.second
                                                          : x.first < y.first;
                            });
}

IndexSet IndexSet::complement() const {
  IndexSet out(rows_, cols_);
  auto it = entries_.begin();
  for (int t = 0; t < cols_; ++t)
    for (int s = 0; s < rows_; ++s) {
      if (it != entries_.end() && *it == IndexPair{s, t}) {
        ++it;
        continue;
      }
      out.entries_.emplace_back(s, t);
    }
  return out;
}

IndexSet sparse_index_set(const Matrix& x, double tau) {
  IndexSet set(static_cast<int>(x.rows()), static_cast<int>(x.cols()));
  for (Eigen::Index t = 0; t < x.cols(); ++t)
    for (Eigen::Index s = 0; s < x.rows(); ++s)
      if (std::abs(x(s, t)) <= tau)
        set.insert_sorted_unique({static_cast<int>(s), static_cast<int>(t)});
  return set;
}

std::string to_string(InputKind kind) {
  switch (kind) {
    case InputKind::example1_mixed: return "example1_mixed";
    case InputKind::random_walk: return "random_walk";
    case InputKind::ar1: return "ar1";
    case InputKind::white: return "white";
  }
  return "?";
}

InputKind parse_input_kind(const std::string& name) {
  for (InputKind k :
       {InputKind::example1_mixed, InputKind::random_walk, InputKind::ar1, InputKind::white})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown input kind '" + name + "'");
}

void InputGeneratorSpec::validate() const {
  if (kind == InputKind::ar1 && !(ar_coefficient > -1.0 && ar_coefficient < 1.0))
    throw ConfigError("input: ar_coefficient must lie in (-1, 1) for ar1");
  if (kind == InputKind::example1_mixed) {
    if (!(ar_coefficient > -1.0 && ar_coefficient < 1.0))
      throw ConfigError("input: ar_coefficient must lie in (-1, 1)");
    for (int i : random_walk_dims)
      if (i < 1) throw ConfigError("input: random_walk_dims are one-based");
  }
}

InputGenerator::InputGenerator(const InputGeneratorSpec& spec, int dim, std::uint64_t seed,
                               std::uint64_t stream)
    : coeff_(Vector::Zero(dim)), state_(Vector::Zero(dim)), rng_(seed, stream) {
  spec.validate();
  switch (spec.kind) {
    case InputKind::white: break;
    case InputKind::random_walk: coeff_.setOnes(); break;
    case InputKind::ar1: coeff_.setConstant(spec.ar_coefficient); break;
    case InputKind::example1_mixed:
      coeff_.setConstant(spec.ar_coefficient);
      for (int i : spec.random_walk_dims) {
        if (i > dim) throw ConfigError("input: random walk channel exceeds input dimension");
        coeff_(i - 1) = 1.0;
      }
      break;
  }
}

Vector InputGenerator::next() {
  for (Eigen::Index i = 0; i < state_.size(); ++i)
    state_(i) = coeff_(i) * state_(i) + rng_.gaussian();
  return state_;
}

Trajectory generate_trajectory(const ArmaxSystem& system, const InputGeneratorSpec& input_spec,
                               double noise_sigma2, std::int64_t length, std::uint64_t seed) {
  system.validate();
  if (length < 1) throw ConfigError("generate_trajectory: length must be at least 1");
  if (!(noise_sigma2 >= 0.0) || !std::isfinite(noise_sigma2))
    throw ConfigError("generate_trajectory: noise variance must be finite and non-negative");

  InputGenerator inputs(input_spec, system.l, seed, Rng::kInput);
  Rng noise_rng(seed, Rng::kNoise);
  const double sigma = std::sqrt(noise_sigma2);

  Trajectory traj;
  traj.observations.reserve(static_cast<std::size_t>(length));
  std::vector<Vector> noise;
  noise.reserve(static_cast<std::size_t>(length));

  ArmaxHistory hist(system.n, system.l, system.p, system.q, system.r);
  Vector y = Vector::Zero(system.n);
  Vector w = Vector::Zero(system.n);
  Vector u = inputs.next();
  traj.observations.push_back({0, u, y});
  noise.push_back(w);

  for (std::int64_t k = 0; k + 1 < length; ++k) {
    hist.u.push(u);
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w(i) = sigma == 0.0 ? 0.0 : sigma * noise_rng.gaussian();
    y = simulate_step(system, hist, w);
    hist.y.push(y);
    hist.w.push(w);
    u = inputs.next();
    traj.observations.push_back({k + 1, u, y});
    noise.push_back(w);
  }
  traj.true_noise = std::move(noise);
  return traj;
}

RegressionTrial generate_linear_regression_trial(int d, int n, double density,
                                                 const InputGeneratorSpec& regressor_spec,
                                                 double noise_sigma2, std::int64_t length,
                                                 std::uint64_t seed) {
  if (d < 1 || n < 1) throw ConfigError("regression trial: d and n must be positive");
  if (!(density > 0.0 && density <= 1.0))
    throw ConfigError("regression trial: density must lie in (0, 1]");
  if (length < 1) throw ConfigError("regression trial: length must be at least 1");
  if (!(noise_sigma2 >= 0.0)) throw ConfigError("regression trial: negative noise variance");

  RegressionTrial trial;
  const std::size_t total = static_cast<std::size_t>(d) * static_cast<std::size_t>(n);
  const auto nonzero = static_cast<std::size_t>(std::llround(density * static_cast<double>(total)));
  std::vector<std::size_t> cells(total);
  for (std::size_t i = 0; i < total; ++i) cells[i] = i;
  Rng support_rng(seed, Rng::kSupport);
  // Partial Fisher-Yates: the first `nonzero` cells are a uniform random subset.
  for (std::size_t i = 0; i < nonzero; ++i)
    std::swap(cells[i], cells[i + support_rng.below(total - i)]);
  trial.theta = Matrix::Zero(d, n);
  for (std::size_t i = 0; i < nonzero; ++i) trial.theta(cells[i] % d, cells[i] / d) = 1.0;

  InputGenerator regressors(regressor_spec, d, seed, Rng::kRegressor);
  Rng noise_rng(seed, Rng::kNoise);
  const double sigma = std::sqrt(noise_sigma2);
  trial.phi.reserve(static_cast<std::size_t>(length));
  trial.y.reserve(static_cast<std::size_t>(length));
  trial.noise.reserve(static_cast<std::size_t>(length));
  for (std::int64_t k = 0; k < length; ++k) {
    Vector phi = regressors.next();
    Vector w(n);
    for (int i = 0; i < n; ++i) w(i) = sigma == 0.0 ? 0.0 : sigma * noise_rng.gaussian();
    trial.y.push_back(trial.theta.transpose() * phi + w);
    trial.phi.push_back(std::move(phi));
    trial.noise.push_back(std::move(w));
  }
  return trial;
}

CzStability check_cz_stability(const ArmaxSystem& system) {
  CzStability out{true, std::numeric_limits<double>::infinity()};
  if (system.r == 0) return out;
  const int n = system.n, r = system.r;
  // det C(z) = 0  <=>  x = 1/z is an eigenvalue of the block companion matrix
  // of x^r I + C_1 x^{r-1} + ... + C_r.
  Matrix companion = Matrix::Zero(n * r, n * r);
  for (int v = 0; v < r; ++v) companion.block(0, v * n, n, n) = -system.c[v];
  if (r > 1) companion.bottomLeftCorner(n * (r - 1), n * (r - 1)).setIdentity();
  Eigen::EigenSolver<Matrix> solver(companion, false);
  double max_modulus = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    max_modulus = std::max(max_modulus, std::abs(solver.eigenvalues()(i)));
  out.stable = max_modulus < 1.0;
  if (max_modulus > 0.0) out.min_root_modulus = 1.0 / max_modulus;
  return out;
}

}  // namespace sparse_armax
