#include "sparse_armax/baselines.hpp"

#include "sparse_armax/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <limits>

namespace sparse_armax {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::alg1: return "alg1";
    case EstimatorKind::rls: return "rls";
    case EstimatorKind::oam: return "oam";
    case EstimatorKind::lsw: return "lsw";
    case EstimatorKind::sindy: return "sindy";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  for (EstimatorKind k : {EstimatorKind::alg1, EstimatorKind::rls, EstimatorKind::oam,
                          EstimatorKind::lsw, EstimatorKind::sindy})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown algorithm '" + name + "'");
}

IdentifierConfig rls_identifier_config(const RlsConfig& cfg) {
  // mu scales the initial gain, P_0 = mu I, i.e. a ridge of 1 / mu.
  IdentifierConfig id;
  id.mu = 1.0 / cfg.mu;
  id.weighting = Weighting::none;
  id.eigen.policy = EigenPolicy::final_only;
  return id;
}

IdentifierConfig oam_identifier_config(const OamConfig& cfg) {
  IdentifierConfig id;
  id.mu = cfg.mu;
  id.weighting = Weighting::constant;
  id.constant_lambda = cfg.lambda;
  id.eigen.policy = EigenPolicy::final_only;
  return id;
}

StreamingEstimator::StreamingEstimator(EstimatorKind kind, int d, int n, IdentifierConfig cfg)
    : kind_(kind), id_(d, n, std::move(cfg)) {}

CheckpointEstimate StreamingEstimator::estimate() {
  switch (kind_) {
    case EstimatorKind::rls: return {id_.theta(), id_.theta()};
    case EstimatorKind::oam: return {id_.theta(), id_.xi()};
    default: {
      Matrix s = id_.extract_sparse().s;
      return {s, s};
    }
  }
}

namespace {

class BatchEstimator final : public Estimator {
 public:
  BatchEstimator(const EstimatorSpec& spec, int d, int n) : spec_(spec), d_(d), n_(n) {}

  EstimatorKind kind() const override { return spec_.kind; }
  bool streaming() const override { return false; }

  void observe(const Vector& phi, const Vector& y_next) override {
    if (phi.size() != d_ || y_next.size() != n_)
      throw DataError("batch estimator: dimension mismatch");
    phi_.insert(phi_.end(), phi.data(), phi.data() + d_);
    y_.insert(y_.end(), y_next.data(), y_next.data() + n_);
  }

  CheckpointEstimate estimate() override {
    const auto rows = static_cast<Eigen::Index>(phi_.size() / static_cast<std::size_t>(d_));
    if (rows == 0) {
      Matrix z = Matrix::Zero(d_, n_);
      return {z, z};
    }
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Matrix phi = Eigen::Map<const RowMajor>(phi_.data(), rows, d_);
    const Matrix y = Eigen::Map<const RowMajor>(y_.data(), rows, n_);
    Matrix x = spec_.kind == EstimatorKind::lsw ? lsw_solve(phi, y, spec_.lsw).x
                                                : sindy_solve(phi, y, spec_.sindy).x;
    return {x, x};
  }

 private:
  EstimatorSpec spec_;
  int d_, n_;
  std::vector<double> phi_, y_;
};

std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

double lasso_objective(const Vector& x, const Vector& gx, const Vector& cross,
                       const Vector& weights) {
  double penalty = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) != 0.0) penalty += weights(i) * std::abs(x(i));
  return 0.5 * x.dot(gx) - cross.dot(x) + penalty;
}

Vector solve_spd_or_least_squares(const Matrix& a, const Vector& b) {
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const double dmin = ldlt.vectorD().minCoeff();
    const double dmax = ldlt.vectorD().maxCoeff();
    if (dmin > 1e-13 * dmax) return ldlt.solve(b);
  }
  return a.completeOrthogonalDecomposition().solve(b);
}

}  // namespace

std::unique_ptr<Estimator> make_estimator(const EstimatorSpec& spec, int d, int n) {
  switch (spec.kind) {
    case EstimatorKind::alg1:
      return std::make_unique<StreamingEstimator>(spec.kind, d, n, spec.alg1);
    case EstimatorKind::rls:
      return std::make_unique<StreamingEstimator>(spec.kind, d, n, rls_identifier_config(spec.rls));
    case EstimatorKind::oam:
      return std::make_unique<StreamingEstimator>(spec.kind, d, n, oam_identifier_config(spec.oam));
    case EstimatorKind::lsw:
    case EstimatorKind::sindy: return std::make_unique<BatchEstimator>(spec, d, n);
  }
  throw ConfigError("unknown estimator kind");
}

LassoResult weighted_lasso(const Matrix& gram, const Vector& cross, const Vector& weights,
                           const Vector& start, double lipschitz, const LassoOptions& options) {
  const Eigen::Index d = cross.size();
  const auto ud = static_cast<std::size_t>(d);
  LassoResult res;
  if (!(lipschitz > 0.0)) {
    res.x = Vector::Zero(d);
    res.converged = true;
    return res;
  }
  const double step = 1.0 / lipschitz;
  Vector thresholds = weights * step;

  Vector x = start;
  for (Eigen::Index i = 0; i < d; ++i)
    if (!std::isfinite(weights(i))) x(i) = 0.0;
  Vector gx(d), x_prev = x, y = x, gy(d), z(d), z_prev = x, gz(d), grad_step(d);
  kernels::symv({gram.data(), ud * ud}, ud, view(x), view(gx));
  double fx = lasso_objective(x, gx, cross, weights);
  double t = 1.0;

  for (int it = 1; it <= options.max_iterations; ++it) {
    // z = prox_{w/L}(y - (G y - c) / L)
    kernels::symv({gram.data(), ud * ud}, ud, view(y), view(gy));
    grad_step = y - step * (gy - cross);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!std::isfinite(thresholds(i))) {
        z(i) = 0.0;
        continue;
      }
      const double mag = std::abs(grad_step(i)) - thresholds(i);
      z(i) = mag > 0.0 ? std::copysign(mag, grad_step(i)) : 0.0;
    }
    kernels::symv({gram.data(), ud * ud}, ud, view(z), view(gz));
    const double fz = lasso_objective(z, gz, cross, weights);

    x_prev = x;
    if (fz <= fx) {
      x = z;
      gx = gz;
      fx = fz;
    }
    if (options.record_objective) res.objective.push_back(fx);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;

    res.iterations = it;
    const double znorm = z.norm();
    const double change = (z - z_prev).norm();
    z_prev = z;
    if (change <= options.tolerance * znorm || (znorm == 0.0 && change == 0.0)) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  return res;
}

LswResult lsw_solve(const Matrix& phi, const Matrix& y, const LswConfig& cfg,
                    bool record_objective) {
  if (phi.rows() != y.rows()) throw DataError("lsw: phi and y row counts differ");
  const Eigen::Index d = phi.cols(), n = y.cols();
  LswResult out;
  out.x = Matrix::Zero(d, n);
  if (phi.rows() == 0) return out;

  const Matrix gram = phi.transpose() * phi;
  const Matrix cross = phi.transpose() * y;
  out.lambda = cfg.scale * std::pow(static_cast<double>(phi.rows()), cfg.exponent);

  const Matrix ridge_sys = gram + cfg.ridge_mu * Matrix::Identity(d, d);
  const Matrix ridge = ridge_sys.ldlt().solve(cross);
  const double lipschitz = extreme_eigenvalues(gram).max;

  LassoOptions opts;
  opts.tolerance = cfg.tolerance;
  opts.max_iterations = cfg.max_iterations;
  opts.record_objective = record_objective;
  for (Eigen::Index t = 0; t < n; ++t) {
    Vector weights(d);
    for (Eigen::Index s = 0; s < d; ++s) {
      const double denom = std::abs(ridge(s, t));
      weights(s) = denom <= kWeightFloor ? std::numeric_limits<double>::infinity()
                                         : out.lambda / denom;
    }
    LassoResult r = weighted_lasso(gram, cross.col(t), weights, ridge.col(t), lipschitz, opts);
    out.x.col(t) = r.x;
    out.converged = out.converged && r.converged;
    out.max_iterations_used = std::max(out.max_iterations_used, r.iterations);
    if (record_objective) out.objective.push_back(std::move(r.objective));
  }
  return out;
}

SindyResult sindy_solve(const Matrix& phi, const Matrix& y, const SindyConfig& cfg) {
  if (phi.rows() != y.rows()) throw DataError("sindy: phi and y row counts differ");
  const Eigen::Index d = phi.cols(), n = y.cols();
  SindyResult out;
  out.x = Matrix::Zero(d, n);
  out.active_sizes.resize(static_cast<std::size_t>(n));
  if (phi.rows() == 0) return out;

  const Matrix gram = phi.transpose() * phi;
  const Matrix cross = phi.transpose() * y;

  for (Eigen::Index t = 0; t < n; ++t) {
    std::vector<Eigen::Index> active(static_cast<std::size_t>(d));
    for (Eigen::Index s = 0; s < d; ++s) active[static_cast<std::size_t>(s)] = s;
    Vector coef;
    auto& sizes = out.active_sizes[static_cast<std::size_t>(t)];

    for (int it = 0; it < cfg.max_iterations && !active.empty(); ++it) {
      sizes.push_back(static_cast<int>(active.size()));
      const auto k = static_cast<Eigen::Index>(active.size());
      Matrix g(k, k);
      Vector c(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        c(i) = cross(active[i], t);
        for (Eigen::Index j = 0; j < k; ++j) g(i, j) = gram(active[i], active[j]);
      }
      coef = solve_spd_or_least_squares(g, c);

      std::vector<Eigen::Index> kept;
      for (Eigen::Index i = 0; i < k; ++i)
        if (std::abs(coef(i)) >= cfg.threshold) kept.push_back(active[static_cast<std::size_t>(i)]);
      if (kept.size() == active.size()) break;
      active = std::move(kept);
      coef.resize(0);
    }
    // Re-solve if the loop stopped on the iteration cap right after pruning.
    if (!active.empty() && coef.size() != static_cast<Eigen::Index>(active.size())) {
      const auto k = static_cast<Eigen::Index>(active.size());
      Matrix g(k, k);
      Vector c(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        c(i) = cross(active[i], t);
        for (Eigen::Index j = 0; j < k; ++j) g(i, j) = gram(active[i], active[j]);
      }
      coef = solve_spd_or_least_squares(g, c);
    }
    for (std::size_t i = 0; i < active.size(); ++i)
      out.x(active[i], t) = coef(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace sparse_armax
