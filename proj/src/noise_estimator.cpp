#include "sparse_armax/noise_estimator.hpp"

#include "sparse_armax/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <cmath>

namespace sparse_armax {

namespace {

std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

nlohmann::json to_array(const Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

Matrix from_array(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    throw DataError("noise estimator snapshot: array size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace

NoiseOrders noise_order_margin(int p, int q, int r, int margin) {
  if (margin < 1) throw ConfigError("noise order margin must be a positive integer");
  return {p + margin, q + margin, r + margin};
}

NoiseEstimator::NoiseEstimator(int n, int l, NoiseOrders orders, double mu)
    : n_(n), l_(l), orders_(orders), mu_(mu) {
  if (n < 1 || l < 1) throw ConfigError("noise estimator: dimensions must be positive");
  if (orders.pbar < 0 || orders.qbar < 0 || orders.rbar < 0 ||
      orders.pbar + orders.qbar + orders.rbar == 0)
    throw ConfigError("noise estimator: orders must be non-negative and not all zero");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("noise estimator: mu must be positive");
  const int dim = n * orders.pbar + l * orders.qbar + n * orders.rbar;
  alpha_ = Matrix::Zero(dim, n);
  gain_ = Matrix::Identity(dim, dim) / mu;
  y_ = LagBuffer(orders.pbar, n);
  u_ = LagBuffer(orders.qbar, l);
  what_ = LagBuffer(orders.rbar, n);
  work_ = Vector::Zero(dim);
  last_what_ = Vector::Zero(n);
}

Vector NoiseEstimator::psi() const {
  return build_phi0(orders_.pbar, orders_.qbar, orders_.rbar, y_, u_, what_);
}

Vector NoiseEstimator::update(const Vector& y, const Vector& u_prev) {
  if (y.size() != n_ || u_prev.size() != l_)
    throw DataError("noise estimator: observation dimension mismatch");
  if (!y.allFinite() || !u_prev.allFinite())
    throw DataError("noise estimator: non-finite observation");

  u_.push(u_prev);
  const Vector ps = psi();
  const auto dim = static_cast<std::size_t>(ps.size());

  // g = Pbar psi, b = 1 / (1 + psi^T g)
  kernels::symv(view(gain_), dim, view(ps), view(work_));
  const double b = 1.0 / (1.0 + kernels::dot(view(ps), view(work_)));
  last_b_ = b;

  // alpha += b g (y^T - psi^T alpha), using the pre-update gain.
  Vector innovation(n_);
  for (int t = 0; t < n_; ++t)
    innovation(t) = y(t) - kernels::dot(view(ps), {alpha_.col(t).data(), dim});
  kernels::ger(view(alpha_), dim, static_cast<std::size_t>(n_), b, view(work_), view(innovation));

  // Pbar -= b g g^T
  kernels::ger(view(gain_), dim, dim, -b, view(work_), view(work_));
  kernels::symmetrize(view(gain_), dim);

  Vector what(n_);
  for (int t = 0; t < n_; ++t)
    what(t) = y(t) - kernels::dot(view(ps), {alpha_.col(t).data(), dim});

  y_.push(y);
  what_.push(what);
  last_what_ = what;
  ++step_;
  return what;
}

double NoiseEstimator::gain_min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gain_, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

nlohmann::json NoiseEstimator::snapshot() const {
  auto history = [](const LagBuffer& buf) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < buf.capacity(); ++i) arr.push_back(to_array(buf.at(i)));
    return arr;
  };
  return {{"n", n_},
          {"l", l_},
          {"pbar", orders_.pbar},
          {"qbar", orders_.qbar},
          {"rbar", orders_.rbar},
          {"mu", mu_},
          {"step", step_},
          {"alpha", to_array(alpha_)},
          {"gain", to_array(gain_)},
          {"y_history", history(y_)},
          {"u_history", history(u_)},
          {"w_history", history(what_)}};
}

NoiseEstimator NoiseEstimator::restore(const nlohmann::json& j) {
  try {
    NoiseEstimator est(j.at("n").get<int>(), j.at("l").get<int>(),
                       {j.at("pbar").get<int>(), j.at("qbar").get<int>(), j.at("rbar").get<int>()},
                       j.at("mu").get<double>());
    const auto dim = est.alpha_.rows();
    est.step_ = j.at("step").get<std::int64_t>();
    est.alpha_ = from_array(j.at("alpha"), dim, est.n_);
    est.gain_ = from_array(j.at("gain"), dim, dim);
    auto load = [](LagBuffer& buf, const nlohmann::json& arr, int dim_v) {
      if (static_cast<int>(arr.size()) != buf.capacity())
        throw DataError("noise estimator snapshot: history length mismatch");
      // Oldest first so at(0) ends up as the newest entry.
      for (int i = buf.capacity() - 1; i >= 0; --i) buf.push(from_array(arr.at(i), dim_v, 1));
    };
    load(est.y_, j.at("y_history"), est.n_);
    load(est.u_, j.at("u_history"), est.l_);
    load(est.what_, j.at("w_history"), est.n_);
    if (est.what_.capacity() > 0) est.last_what_ = est.what_.at(0);
    return est;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("noise estimator snapshot: ") + e.what());
  }
}

}  // namespace sparse_armax
