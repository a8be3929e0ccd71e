#include "sparse_armax/baselines.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <random>

using namespace sparse_armax;

namespace {

Matrix randn(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

Matrix sparse_truth(Eigen::Index d, Eigen::Index n) {
  Matrix t = Matrix::Zero(d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    t(j % d, j) = 1.0;
    t((j + 2) % d, j) = -0.7;
  }
  return t;
}

double weighted_objective(const Matrix& g, const Vector& c, const Vector& w, const Vector& x) {
  double pen = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) != 0.0) pen += w(i) * std::abs(x(i));
  return 0.5 * x.dot(g * x) - c.dot(x) + pen;
}

// Exact weighted lasso minimizer by enumerating every sign pattern.
Vector lasso_by_signs(const Matrix& g, const Vector& c, const Vector& w) {
  const auto d = c.size();
  int total = 1;
  for (Eigen::Index i = 0; i < d; ++i) total *= 3;
  Vector best = Vector::Zero(d);
  double best_f = 0.0;
  for (int code = 0; code < total; ++code) {
    std::vector<int> sign(static_cast<std::size_t>(d));
    std::vector<Eigen::Index> act;
    int rest = code;
    for (Eigen::Index i = 0; i < d; ++i, rest /= 3) {
      sign[static_cast<std::size_t>(i)] = rest % 3 - 1;
      if (rest % 3 != 1) act.push_back(i);
    }
    if (act.empty()) continue;
    const auto k = static_cast<Eigen::Index>(act.size());
    Matrix ga(k, k);
    Vector rhs(k);
    bool finite = true;
    for (Eigen::Index a = 0; a < k; ++a) {
      const int s = sign[static_cast<std::size_t>(act[a])];
      if (!std::isfinite(w(act[a]))) finite = false;
      rhs(a) = c(act[a]) - s * w(act[a]);
      for (Eigen::Index b = 0; b < k; ++b) ga(a, b) = g(act[a], act[b]);
    }
    if (!finite) continue;
    const Vector xa = ga.ldlt().solve(rhs);
    Vector x = Vector::Zero(d);
    bool ok = true;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (xa(a) * sign[static_cast<std::size_t>(act[a])] <= 0.0) ok = false;
      x(act[a]) = xa(a);
    }
    if (!ok) continue;
    const double f = weighted_objective(g, c, w, x);
    if (f < best_f) {
      best_f = f;
      best = x;
    }
  }
  return best;
}

// Sequential thresholding with least squares by Householder QR on the
// regressor columns themselves rather than the normal equations.
Vector stlsq_by_qr(const Matrix& phi, const Vector& y, double threshold, int iterations) {
  const auto d = phi.cols();
  std::vector<Eigen::Index> act;
  for (Eigen::Index i = 0; i < d; ++i) act.push_back(i);
  Vector coef;
  for (int it = 0; it < iterations && !act.empty(); ++it) {
    Matrix sub(phi.rows(), static_cast<Eigen::Index>(act.size()));
    for (std::size_t j = 0; j < act.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = phi.col(act[j]);
    coef = sub.householderQr().solve(y);
    std::vector<Eigen::Index> kept;
    for (std::size_t j = 0; j < act.size(); ++j)
      if (std::abs(coef(static_cast<Eigen::Index>(j))) >= threshold) kept.push_back(act[j]);
    if (kept.size() == act.size()) break;
    act = kept;
    if (act.empty()) break;
    Matrix sub2(phi.rows(), static_cast<Eigen::Index>(act.size()));
    for (std::size_t j = 0; j < act.size(); ++j) sub2.col(static_cast<Eigen::Index>(j)) = phi.col(act[j]);
    coef = sub2.householderQr().solve(y);
  }
  Vector x = Vector::Zero(d);
  for (std::size_t j = 0; j < act.size(); ++j) x(act[j]) = coef(static_cast<Eigen::Index>(j));
  return x;
}

}  // namespace

TEST_CASE("estimator names") {
  for (EstimatorKind k : {EstimatorKind::alg1, EstimatorKind::rls, EstimatorKind::oam,
                          EstimatorKind::lsw, EstimatorKind::sindy})
    CHECK(parse_estimator_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_estimator_kind("lasso"), ConfigError);
}

TEST_CASE("RLS recovers a noiseless system with a dense estimate") {
  std::mt19937_64 gen(1);
  const Matrix truth = sparse_truth(5, 2);
  auto est = make_estimator(EstimatorSpec{EstimatorKind::rls}, 5, 2);
  for (int k = 0; k < 200; ++k) {
    const Vector phi = randn(5, 1, gen);
    est->observe(phi, truth.transpose() * phi);
  }
  const CheckpointEstimate e = est->estimate();
  // P_0 = 1e4 I leaves a ridge of 1e-4 against an information of about 200.
  CHECK((e.values - truth).norm() < 1e-5);
  // Dense: no entry is exactly zero.
  CHECK(sparse_index_set(e.sparse).size() == 0);
  CHECK(rls_identifier_config(RlsConfig{}).mu == doctest::Approx(1e-4));
}

TEST_CASE("OAM with zero penalty matches its closed form") {
  std::mt19937_64 gen(2);
  EstimatorSpec spec{EstimatorKind::oam};
  spec.oam.lambda = 0.0;
  auto est = make_estimator(spec, 4, 1);
  auto* s = dynamic_cast<StreamingEstimator*>(est.get());
  REQUIRE(s != nullptr);
  Matrix info = Matrix::Identity(4, 4), cross = Matrix::Zero(4, 1);
  for (int k = 0; k < 50; ++k) {
    const Vector phi = randn(4, 1, gen);
    const Vector y = randn(1, 1, gen);
    const Matrix xi = s->identifier().xi();
    est->observe(phi, y);
    info += phi * phi.transpose();
    cross += phi * y.transpose();
    const Matrix expect = info.ldlt().solve(cross + xi);
    CHECK((s->identifier().theta() - expect).norm() < 1e-9);
    // Zero threshold: Xi tracks Theta exactly.
    CHECK(s->identifier().xi() == s->identifier().theta());
  }
  const CheckpointEstimate e = est->estimate();
  CHECK(e.values == s->identifier().theta());
  CHECK(e.sparse == s->identifier().xi());
}

TEST_CASE("OAM thresholds at lambda over mu") {
  OamConfig cfg;
  cfg.mu = 2.0;
  cfg.lambda = 0.4;
  SparseIdentifier id(3, 1, oam_identifier_config(cfg));
  std::mt19937_64 gen(3);
  for (int k = 0; k < 20; ++k) id.step(randn(3, 1, gen), randn(1, 1, gen));
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double t = id.theta()(i, 0);
    const double expect = std::abs(t) > 0.2 ? t - std::copysign(0.2, t) : 0.0;
    CHECK(id.xi()(i, 0) == doctest::Approx(expect));
  }
}

TEST_CASE("weighted lasso against sign enumeration") {
  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix phi = randn(30, 5, gen);
    const Matrix g = phi.transpose() * phi;
    const Vector c = phi.transpose() * randn(30, 1, gen, 2.0);
    Vector w(5);
    for (int i = 0; i < 5; ++i) w(i) = std::abs(randn(1, 1, gen)(0)) * 8.0;
    LassoOptions opt;
    opt.tolerance = 1e-13;
    opt.max_iterations = 100000;
    opt.record_objective = true;
    const double lip = extreme_eigenvalues(g).max;
    const LassoResult r = weighted_lasso(g, c, w, Vector::Zero(5), lip, opt);
    const Vector oracle = lasso_by_signs(g, c, w);
    CHECK((r.x - oracle).norm() < 1e-6);
    for (std::size_t i = 1; i < r.objective.size(); ++i)
      CHECK(r.objective[i] <= r.objective[i - 1]);
  }
}

TEST_CASE("infinite weights pin coordinates at zero") {
  std::mt19937_64 gen(5);
  const Matrix phi = randn(20, 3, gen);
  const Matrix g = phi.transpose() * phi;
  const Vector c = phi.transpose() * randn(20, 1, gen);
  Vector w(3);
  w << 0.0, std::numeric_limits<double>::infinity(), 0.0;
  Vector start = Vector::Ones(3);
  const LassoResult r = weighted_lasso(g, c, w, start, extreme_eigenvalues(g).max, LassoOptions{});
  CHECK(r.x(1) == 0.0);
  // The others solve the reduced least squares problem.
  Matrix g2(2, 2);
  g2 << g(0, 0), g(0, 2), g(2, 0), g(2, 2);
  Vector c2(2);
  c2 << c(0), c(2);
  const Vector ls = g2.ldlt().solve(c2);
  CHECK(r.x(0) == doctest::Approx(ls(0)).epsilon(1e-5));
  CHECK(r.x(2) == doctest::Approx(ls(1)).epsilon(1e-5));
}

TEST_CASE("LSW with zero scale is least squares") {
  std::mt19937_64 gen(6);
  const Matrix phi = randn(40, 4, gen);
  const Matrix y = phi * sparse_truth(4, 2) + randn(40, 2, gen, 0.1);
  LswConfig cfg;
  cfg.scale = 0.0;
  cfg.tolerance = 1e-14;
  const LswResult r = lsw_solve(phi, y, cfg);
  const Matrix ls = phi.householderQr().solve(y);
  CHECK((r.x - ls).norm() < 1e-7);
}

TEST_CASE("LSW matches the exact weighted lasso and its objective never rises") {
  std::mt19937_64 gen(7);
  const Matrix phi = randn(25, 5, gen);
  const Matrix y = phi * sparse_truth(5, 2) + randn(25, 2, gen, 0.5);
  LswConfig cfg;
  cfg.tolerance = 1e-13;
  cfg.max_iterations = 100000;
  const LswResult r = lsw_solve(phi, y, cfg, true);
  CHECK(r.lambda == doctest::Approx(std::pow(25.0, 0.8)));
  const Matrix g = phi.transpose() * phi;
  const Matrix ridge = (g + Matrix::Identity(5, 5)).ldlt().solve(phi.transpose() * y);
  for (Eigen::Index t = 0; t < 2; ++t) {
    Vector w(5);
    for (int s = 0; s < 5; ++s) w(s) = r.lambda / std::abs(ridge(s, t));
    const Vector oracle = lasso_by_signs(g, phi.transpose() * y.col(t), w);
    CHECK((r.x.col(t) - oracle).norm() < 1e-6);
    const auto& obj = r.objective[static_cast<std::size_t>(t)];
    for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] <= obj[i - 1]);
  }
}

TEST_CASE("SINDy recovers a noiseless system") {
  std::mt19937_64 gen(8);
  const Matrix truth = sparse_truth(6, 3);
  const Matrix phi = randn(50, 6, gen);
  const SindyResult r = sindy_solve(phi, phi * truth, SindyConfig{});
  CHECK((r.x - truth).norm() < 1e-10);
  CHECK(sparse_index_set(r.x) == sparse_index_set(truth));
}

TEST_CASE("SINDy matches a QR-based thresholding oracle") {
  std::mt19937_64 gen(9);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix phi = randn(15, 4, gen);
    const Matrix y = phi * sparse_truth(4, 2) * 0.3 + randn(15, 2, gen, 0.3);
    SindyConfig cfg;
    cfg.threshold = 0.15;
    const SindyResult r = sindy_solve(phi, y, cfg);
    for (Eigen::Index t = 0; t < 2; ++t) {
      const Vector oracle = stlsq_by_qr(phi, y.col(t), cfg.threshold, cfg.max_iterations);
      CHECK((r.x.col(t) - oracle).norm() < 1e-9);
      const auto& sizes = r.active_sizes[static_cast<std::size_t>(t)];
      for (std::size_t i = 1; i < sizes.size(); ++i) CHECK(sizes[i] < sizes[i - 1]);
    }
  }
}

TEST_CASE("every estimator returns finite d x n estimates") {
  std::mt19937_64 gen(10);
  const Matrix truth = sparse_truth(6, 2);
  for (EstimatorKind k : {EstimatorKind::alg1, EstimatorKind::rls, EstimatorKind::oam,
                          EstimatorKind::lsw, EstimatorKind::sindy}) {
    CAPTURE(to_string(k));
    EstimatorSpec spec;
    spec.kind = k;
    auto est = make_estimator(spec, 6, 2);
    CHECK(est->kind() == k);
    const CheckpointEstimate empty = est->estimate();
    CHECK(empty.values.rows() == 6);
    CHECK(empty.values.cols() == 2);
    for (int i = 0; i < 100; ++i) {
      const Vector phi = randn(6, 1, gen);
      est->observe(phi, truth.transpose() * phi + randn(2, 1, gen, 0.2));
    }
    const CheckpointEstimate e = est->estimate();
    CHECK(e.values.rows() == 6);
    CHECK(e.sparse.cols() == 2);
    CHECK(e.values.allFinite());
    CHECK(e.sparse.allFinite());
    CHECK(est->streaming() == (k != EstimatorKind::lsw && k != EstimatorKind::sindy));
    CHECK_THROWS_AS(est->observe(Vector::Zero(5), Vector::Zero(2)), DataError);
  }
}
