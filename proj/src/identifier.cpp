#include "sparse_armax/identifier.hpp"

#include "sparse_armax/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace sparse_armax {

namespace {

std::span<const double> view(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> view(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

nlohmann::json row_major(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// LambdaSchedule

std::string to_string(LambdaKind kind) {
  switch (kind) {
    case LambdaKind::log_n_over_n: return "log_n_over_n";
    case LambdaKind::eig_ratio_sqrt: return "eig_ratio_sqrt";
    case LambdaKind::constant: return "constant";
    case LambdaKind::custom_table: return "custom_table";
  }
  return "?";
}

LambdaKind parse_lambda_kind(const std::string& name) {
  for (LambdaKind k : {LambdaKind::log_n_over_n, LambdaKind::eig_ratio_sqrt, LambdaKind::constant,
                       LambdaKind::custom_table})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown lambda schedule kind '" + name + "'");
}

void LambdaSchedule::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ConfigError("lambda schedule: scale must be positive");
  if (kind == LambdaKind::custom_table) {
    if (table.empty()) throw ConfigError("lambda schedule: custom_table is empty");
    for (double v : table)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError("lambda schedule: table entries must be positive");
  }
}

double LambdaSchedule::value(std::int64_t step, double lambda_max, double lambda_min) const {
  double v = 0.0;
  switch (kind) {
    case LambdaKind::log_n_over_n: {
      const double n = static_cast<double>(std::max<std::int64_t>(step, 2));
      v = scale * std::pow(std::log(n) / n, exponent);
      break;
    }
    case LambdaKind::eig_ratio_sqrt:
      v = scale * std::sqrt(std::log(lambda_max) / lambda_min);
      break;
    case LambdaKind::constant: v = scale; break;
    case LambdaKind::custom_table:
      v = table[static_cast<std::size_t>(
          std::min<std::int64_t>(step, static_cast<std::int64_t>(table.size()) - 1))];
      break;
  }
  if (!(v > 0.0) || !std::isfinite(v))
    throw ScheduleError("lambda schedule produced a non-positive value at N = " +
                        std::to_string(step));
  return v;
}

std::string to_string(SparseMode mode) {
  return mode == SparseMode::xi_values ? "xi_values" : "theta_values";
}

SparseMode parse_sparse_mode(const std::string& name) {
  if (name == "theta_values") return SparseMode::theta_values;
  if (name == "xi_values") return SparseMode::xi_values;
  throw ConfigError("unknown sparse mode '" + name + "'");
}

void IdentifierConfig::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("identifier: mu must be positive");
  schedule.validate();
  if (weighting == Weighting::constant && !(constant_lambda >= 0.0))
    throw ConfigError("identifier: constant lambda must be non-negative");
  if (eigen.policy == EigenPolicy::stride && eigen.stride < 1)
    throw ConfigError("identifier: eigen stride must be positive");
  const bool needs = weighting == Weighting::adaptive || schedule.kind == LambdaKind::eig_ratio_sqrt;
  if (needs && eigen.policy == EigenPolicy::final_only)
    throw ConfigError("identifier: adaptive weighting needs per-step eigenvalues");
}

// ---------------------------------------------------------------------------
// SparseIdentifier

EigenPair extreme_eigenvalues(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev(ev.size() - 1), ev(0)};
}

SparseIdentifier::SparseIdentifier(int d, int n, IdentifierConfig config)
    : d_(d), n_(n), config_(std::move(config)) {
  if (d < 1 || n < 1) throw ConfigError("identifier: d and n must be positive");
  config_.validate();
  theta_ = Matrix::Zero(d, n);
  xi_ = Matrix::Zero(d, n);
  xi_prev_ = Matrix::Zero(d, n);
  correction_ = Matrix::Zero(d, n);
  gain_ = Matrix::Identity(d, d) / config_.mu;
  info_ = Matrix::Identity(d, d) * config_.mu;
  eig_ = {config_.mu, config_.mu};
  v_max_ = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  v_min_ = v_max_;
  g_ = Vector::Zero(d);
}

bool SparseIdentifier::needs_eigenvalues() const {
  switch (config_.eigen.policy) {
    case EigenPolicy::every_step: return true;
    case EigenPolicy::stride: return step_ % config_.eigen.stride == 0;
    case EigenPolicy::final_only: return false;
  }
  return true;
}

void SparseIdentifier::rls_core_update(const Vector& phi, const Vector& y_next) {
  if (phi.size() != d_ || y_next.size() != n_)
    throw DataError("identifier: regressor or output dimension mismatch");
  if (!phi.allFinite() || !y_next.allFinite())
    throw DataError("identifier: non-finite regressor or output");

  const auto d = static_cast<std::size_t>(d_);
  const auto n = static_cast<std::size_t>(n_);

  // g = P_N phi, a = 1 / (1 + phi^T g)
  kernels::symv(view(gain_), d, view(phi), view(g_));
  const double a = 1.0 / (1.0 + kernels::dot(view(phi), view(g_)));

  // Theta += a g (y^T - phi^T Theta)
  Vector innovation(n_);
  for (int t = 0; t < n_; ++t)
    innovation(t) = y_next(t) - kernels::dot(view(phi), {theta_.col(t).data(), d});
  kernels::ger(view(theta_), d, n, a, view(g_), view(innovation));

  // P_{N+1} = P_N - a g g^T ; R_{N+1} = R_N + phi phi^T
  kernels::ger(view(gain_), d, d, -a, view(g_), view(g_));
  kernels::symmetrize(view(gain_), d);
  kernels::ger(view(info_), d, d, 1.0, view(phi), view(phi));

  // Theta += mu P_{N+1} (Xi_N - Xi_{N-1})
  const Matrix delta = xi_ - xi_prev_;
  if (!delta.isZero(0.0)) {
    for (int t = 0; t < n_; ++t) {
      kernels::symv(view(gain_), d, {delta.col(t).data(), d}, {correction_.col(t).data(), d});
      kernels::axpy(config_.mu, {correction_.col(t).data(), d}, {theta_.col(t).data(), d});
    }
  }

  ++step_;
  if (needs_eigenvalues()) eigen_refresh();
}

EigenPair SparseIdentifier::eigen_refresh() {
  if (config_.eigen.method == EigenMethod::power) {
    eig_ = power_refresh();
  } else {
    eig_ = extreme_eigenvalues(info_);
  }
  return eig_;
}

EigenPair SparseIdentifier::power_refresh() {
  constexpr int kMaxIter = 1000;
  constexpr double kTol = 1e-9;
  // Dominant eigenpair by power iteration, warm-started from the previous
  // eigenvector; returns a negative value on non-convergence.
  auto dominant = [&](const Matrix& m, Vector& v) {
    const auto d = static_cast<std::size_t>(d_);
    Vector w(d_);
    for (int it = 0; it < kMaxIter; ++it) {
      kernels::symv(view(m), d, view(v), view(w));
      const double rho = v.dot(w);
      const double resid = (w - rho * v).norm();
      const double wn = w.norm();
      if (!(wn > 0.0)) return -1.0;
      v = w / wn;
      if (resid <= kTol * std::abs(rho)) return rho;
    }
    return -1.0;
  };
  const double top = dominant(info_, v_max_);
  const double top_inv = dominant(gain_, v_min_);
  if (top <= 0.0 || top_inv <= 0.0) {
    v_max_.setConstant(1.0 / std::sqrt(static_cast<double>(d_)));
    v_min_ = v_max_;
    return extreme_eigenvalues(info_);
  }
  return {top, 1.0 / top_inv};
}

double SparseIdentifier::weight_offset() const {
  if (eig_.max < 1.0)
    throw ScheduleError(
        "lambda_max of the information matrix is below 1, so log(lambda_max) is negative; "
        "use mu >= 1");
  return std::sqrt(std::log(eig_.max) / eig_.min);
}

Matrix SparseIdentifier::adaptive_weight_matrix() const {
  const double off = weight_offset();
  Matrix hat(d_, n_);
  for (Eigen::Index i = 0; i < theta_.size(); ++i) {
    const double t = theta_.data()[i];
    hat.data()[i] = t + (t >= 0.0 ? off : -off);
  }
  return hat;
}

void SparseIdentifier::soft_threshold_update(double lambda) {
  const auto size = static_cast<std::size_t>(theta_.size());
  xi_prev_ = xi_;
  switch (config_.weighting) {
    case Weighting::none: xi_.setZero(); break;
    case Weighting::constant:
      if (!(lambda >= 0.0)) throw ScheduleError("constant penalty must be non-negative");
      kernels::soft_threshold(view(theta_), view(xi_), lambda / config_.mu);
      break;
    case Weighting::adaptive: {
      if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ScheduleError("lambda_N must be positive");
      // |Theta_hat| = |Theta| + offset because the signs agree.
      kernels::adaptive_shrink(view(theta_), {xi_.data(), size}, lambda / config_.mu,
                               weight_offset(), kWeightFloor);
      break;
    }
  }
  last_lambda_ = lambda;
}

void SparseIdentifier::step(const Vector& phi, const Vector& y_next) {
  const std::int64_t index = step_;
  rls_core_update(phi, y_next);
  switch (config_.weighting) {
    case Weighting::none: return;
    case Weighting::constant: soft_threshold_update(config_.constant_lambda); return;
    case Weighting::adaptive:
      soft_threshold_update(config_.schedule.value(index, eig_.max, eig_.min));
      return;
  }
}

SparseEstimate SparseIdentifier::extract_sparse() const {
  SparseEstimate est;
  est.mode = config_.mode;
  est.zero_set = sparse_index_set(xi_, 0.0);
  const Matrix& values = config_.mode == SparseMode::xi_values ? xi_ : theta_;
  est.s = Matrix::Zero(d_, n_);
  for (Eigen::Index i = 0; i < xi_.size(); ++i)
    if (xi_.data()[i] != 0.0) est.s.data()[i] = values.data()[i];
  return est;
}

nlohmann::json SparseIdentifier::snapshot() const {
  const SparseEstimate est = extract_sparse();
  nlohmann::json zeros = nlohmann::json::array();
  for (const auto& [s, t] : est.zero_set.entries()) zeros.push_back({s + 1, t + 1});
  return {{"step", step_},
          {"d", d_},
          {"n", n_},
          {"theta", row_major(theta_)},
          {"xi", row_major(xi_)},
          {"sparse_estimate", row_major(est.s)},
          {"zero_set", std::move(zeros)},
          {"lambda_max", eig_.max},
          {"lambda_min", eig_.min},
          {"lambda_N", last_lambda_},
          {"mode", to_string(config_.mode)}};
}

// ---------------------------------------------------------------------------
// ARMAX front end

ArmaxRegressorStream::ArmaxRegressorStream(int n, int l, int p, int q, int r, NoiseOrders orders,
                                           double noise_mu)
    : n_(n), l_(l), p_(p), q_(q), r_(r), noise_(n, l, orders, noise_mu),
      hist_(n, l, p, q, r), u_prev_(Vector::Zero(l)) {}

Vector ArmaxRegressorStream::push(const Vector& u, const Vector& y) {
  if (u.size() != l_ || y.size() != n_) throw DataError("regressor stream: dimension mismatch");
  const Vector what = noise_.update(y, u_prev_);
  hist_.y.push(y);
  hist_.u.push(u);
  hist_.w.push(what);
  u_prev_ = u;
  return build_phi0(p_, q_, r_, hist_.y, hist_.u, hist_.w);
}

ArmaxIdentifier::ArmaxIdentifier(const ArmaxSystem& orders_only, NoiseOrders noise_orders,
                                 double noise_mu, IdentifierConfig config)
    : stream_(orders_only.n, orders_only.l, orders_only.p, orders_only.q, orders_only.r,
              noise_orders, noise_mu),
      id_(orders_only.d(), orders_only.n, std::move(config)) {}

bool ArmaxIdentifier::observe(const Vector& u, const Vector& y) {
  bool updated = false;
  if (has_pending_) {
    id_.step(pending_phi_, y);
    updated = true;
  }
  pending_phi_ = stream_.push(u, y);
  has_pending_ = true;
  return updated;
}

}  // namespace sparse_armax
