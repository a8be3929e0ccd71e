#include "sparse_armax/armax_model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace sparse_armax;

namespace {

ArmaxSystem random_system(int n, int l, int p, int q, int r, unsigned seed, double scale) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  auto rnd = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
    return m;
  };
  ArmaxSystem s;
  s.n = n, s.l = l, s.p = p, s.q = q, s.r = r;
  for (int i = 0; i < p; ++i) s.a.push_back(rnd(n, n));
  for (int i = 0; i < q; ++i) s.b.push_back(rnd(n, l));
  for (int i = 0; i < r; ++i) s.c.push_back(rnd(n, n));
  return s;
}

// y_{k+1} written out entry by entry, no lag buffers.
std::vector<Vector> naive_outputs(const ArmaxSystem& s, const std::vector<Vector>& u,
                                  const std::vector<Vector>& w) {
  const auto len = u.size();
  std::vector<Vector> y(len, Vector::Zero(s.n));
  auto at = [](const std::vector<Vector>& v, long k, int dim) -> Vector {
    return k < 0 ? Vector::Zero(dim) : v[static_cast<std::size_t>(k)];
  };
  for (long k = 0; k + 1 < static_cast<long>(len); ++k) {
    Vector next = w[static_cast<std::size_t>(k + 1)];
    for (int row = 0; row < s.n; ++row) {
      double acc = 0.0;
      for (int i = 1; i <= s.p; ++i) {
        const Vector yk = at(y, k + 1 - i, s.n);
        for (int c = 0; c < s.n; ++c) acc -= s.a[i - 1](row, c) * yk(c);
      }
      for (int j = 1; j <= s.q; ++j) {
        const Vector uk = at(u, k + 1 - j, s.l);
        for (int c = 0; c < s.l; ++c) acc += s.b[j - 1](row, c) * uk(c);
      }
      for (int v = 1; v <= s.r; ++v) {
        const Vector wk = at(w, k + 1 - v, s.n);
        for (int c = 0; c < s.n; ++c) acc += s.c[v - 1](row, c) * wk(c);
      }
      next(row) += acc;
    }
    y[static_cast<std::size_t>(k + 1)] = next;
  }
  return y;
}

// Convolution form: y_{k+1} = sum_j H_j u_{k-j} + sum_j G_j w_{k+1-j} with the
// Markov parameters of A^{-1}B and A^{-1}C.
std::vector<Vector> convolution_outputs(const ArmaxSystem& s, const std::vector<Vector>& u,
                                        const std::vector<Vector>& w) {
  const auto len = u.size();
  std::vector<Matrix> h(len, Matrix::Zero(s.n, s.l)), g(len, Matrix::Zero(s.n, s.n));
  for (std::size_t j = 0; j < len; ++j) {
    if (static_cast<int>(j) < s.q) h[j] = s.b[j];
    if (j == 0) g[j] = Matrix::Identity(s.n, s.n);
    else if (static_cast<int>(j) <= s.r) g[j] = s.c[j - 1];
    for (int i = 1; i <= s.p && i <= static_cast<int>(j); ++i) {
      h[j] -= s.a[i - 1] * h[j - i];
      g[j] -= s.a[i - 1] * g[j - i];
    }
  }
  std::vector<Vector> y(len, Vector::Zero(s.n));
  for (std::size_t k = 0; k + 1 < len; ++k) {
    Vector acc = Vector::Zero(s.n);
    for (std::size_t j = 0; j <= k; ++j) acc += h[j] * u[k - j];
    for (std::size_t j = 0; j <= k + 1; ++j) acc += g[j] * w[k + 1 - j];
    y[k + 1] = acc;
  }
  return y;
}

}  // namespace

TEST_CASE("example1 parameter inventory") {
  const ArmaxSystem s = ArmaxSystem::example1();
  CHECK(s.d() == 60);
  const Matrix theta = s.theta();
  CHECK(theta.rows() == 60);
  CHECK(theta.cols() == 10);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double v = std::abs(theta.data()[i]);
    if (v == 0.0) continue;
    ++nonzero;
    CHECK((v == 0.5 || v == 0.8 || v == 1.0));
  }
  CHECK(nonzero == 50);
  // Theta stacks -A_1: diagonal +1 on the first block.
  CHECK(theta(0, 0) == 1.0);
  CHECK(theta(10, 0) == -0.5);
  CHECK(theta(20, 0) == 1.0);
  CHECK(theta(40, 0) == 0.8);
  CHECK(sparse_index_set(theta).size() == 550);
}

TEST_CASE("theta round trip and validation") {
  const ArmaxSystem s = random_system(3, 2, 2, 3, 1, 5, 0.3);
  const ArmaxSystem back = ArmaxSystem::from_theta(s.theta(), 3, 2, 2, 3, 1);
  CHECK(back.theta() == s.theta());
  ArmaxSystem bad = s;
  bad.b.pop_back();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.c[0] = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(ArmaxSystem::from_theta(Matrix::Zero(4, 3), 3, 2, 2, 3, 1), ConfigError);
}

TEST_CASE("lag buffer ordering and zero padding") {
  LagBuffer b(3, 2);
  CHECK(b.at(0).isZero());
  b.push(Vector::Constant(2, 1.0));
  b.push(Vector::Constant(2, 2.0));
  CHECK(b.at(0)(0) == 2.0);
  CHECK(b.at(1)(0) == 1.0);
  CHECK(b.at(2).isZero());
  b.push(Vector::Constant(2, 3.0));
  b.push(Vector::Constant(2, 4.0));
  CHECK(b.at(0)(0) == 4.0);
  CHECK(b.at(2)(0) == 2.0);
}

TEST_CASE("build_phi0 stacks lags newest first") {
  LagBuffer y(2, 1), u(1, 2), w(1, 1);
  Vector v(1);
  v << 1.0;
  y.push(v);
  v << 2.0;
  y.push(v);
  u.push(Vector::Constant(2, 5.0));
  w.push(Vector::Constant(1, 7.0));
  const Vector phi = build_phi0(2, 1, 1, y, u, w);
  CHECK(phi.size() == 5);
  CHECK(phi(0) == 2.0);
  CHECK(phi(1) == 1.0);
  CHECK(phi(2) == 5.0);
  CHECK(phi(4) == 7.0);
}

TEST_CASE("simulate_step matches a hand-written evaluation") {
  // Scalar system y_{k+1} = 0.5 y_k + 2 u_k + w_{k+1} + 0.3 w_k.
  ArmaxSystem s;
  s.n = s.l = 1;
  s.p = s.q = s.r = 1;
  s.a = {Matrix::Constant(1, 1, -0.5)};
  s.b = {Matrix::Constant(1, 1, 2.0)};
  s.c = {Matrix::Constant(1, 1, 0.3)};
  ArmaxHistory h(1, 1, 1, 1, 1);
  h.y.push(Vector::Constant(1, 1.0));
  h.u.push(Vector::Constant(1, 3.0));
  h.w.push(Vector::Constant(1, -1.0));
  const Vector y = simulate_step(s, h, Vector::Constant(1, 0.25));
  CHECK(y(0) == doctest::Approx(0.5 + 6.0 + 0.25 - 0.3));
}

TEST_CASE("trajectory agrees with naive and convolution evaluators") {
  const ArmaxSystem s = random_system(3, 2, 2, 2, 2, 9, 0.2);
  InputGeneratorSpec spec;
  spec.kind = InputKind::white;
  const Trajectory traj = generate_trajectory(s, spec, 0.3, 40, 17);
  REQUIRE(traj.size() == 40);
  REQUIRE(traj.true_noise.has_value());
  std::vector<Vector> u, w;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    u.push_back(traj.observations[k].u);
    w.push_back((*traj.true_noise)[k]);
  }
  const auto naive = naive_outputs(s, u, w);
  const auto conv = convolution_outputs(s, u, w);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    CAPTURE(k);
    const Vector& y = traj.observations[k].y;
    CHECK((y - naive[k]).norm() <= 1e-12 * (1.0 + y.norm()));
    CHECK((y - conv[k]).norm() <= 1e-9 * (1.0 + y.norm()));
  }
}

TEST_CASE("trajectory conventions") {
  const ArmaxSystem s = ArmaxSystem::example1();
  InputGeneratorSpec spec;
  const Trajectory a = generate_trajectory(s, spec, 0.5, 300, 3);
  const Trajectory b = generate_trajectory(s, spec, 0.5, 300, 3);
  const Trajectory c = generate_trajectory(s, spec, 0.5, 300, 4);
  CHECK(a.observations[0].y.isZero());
  CHECK((*a.true_noise)[0].isZero());
  CHECK(a.observations[0].k == 0);
  CHECK(a.observations[299].k == 299);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a.observations[k].y == b.observations[k].y);
    CHECK(a.observations[k].u == b.observations[k].u);
  }
  CHECK(a.observations[10].y != c.observations[10].y);
  // Zero noise variance gives zero noise.
  const Trajectory quiet = generate_trajectory(s, spec, 0.0, 50, 3);
  for (const Vector& w : *quiet.true_noise) CHECK(w.isZero());
  CHECK_THROWS_AS(generate_trajectory(s, spec, -1.0, 10, 1), ConfigError);
  CHECK_THROWS_AS(generate_trajectory(s, spec, 0.5, 0, 1), ConfigError);
}

TEST_CASE("noise and input statistics") {
  const ArmaxSystem s = ArmaxSystem::example1();
  InputGeneratorSpec spec;
  const Trajectory t = generate_trajectory(s, spec, 0.5, 20001, 21);
  double wsum = 0.0, wsq = 0.0, usq = 0.0, incr_sq = 0.0;
  const double count = 20000.0 * 10.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    const Vector& w = (*t.true_noise)[k];
    wsum += w.sum();
    wsq += w.squaredNorm();
    usq += t.observations[k].u.tail(9).squaredNorm();
    const double du = t.observations[k].u(0) - t.observations[k - 1].u(0);
    incr_sq += du * du;
  }
  CHECK(wsum / count == doctest::Approx(0.0).epsilon(0.01).scale(1.0));
  CHECK(wsq / count == doctest::Approx(0.5).epsilon(0.02));
  // AR(1) with coefficient 0.5 and unit innovations: variance 4/3.
  CHECK(usq / (20000.0 * 9.0) == doctest::Approx(4.0 / 3.0).epsilon(0.03));
  // The first channel is a random walk with unit increments.
  CHECK(incr_sq / 20000.0 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("input generator kinds") {
  InputGeneratorSpec spec;
  spec.kind = InputKind::random_walk;
  InputGenerator rw(spec, 2, 1, Rng::kInput);
  Rng ref(1, Rng::kInput);
  Vector state = Vector::Zero(2);
  for (int k = 0; k < 5; ++k) {
    const Vector u = rw.next();
    for (int i = 0; i < 2; ++i) state(i) += ref.gaussian();
    CHECK((u - state).norm() == 0.0);
  }
  spec.kind = InputKind::ar1;
  spec.ar_coefficient = 1.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.kind = InputKind::example1_mixed;
  spec.ar_coefficient = 0.5;
  spec.random_walk_dims = {3};
  CHECK_THROWS_AS(InputGenerator(spec, 2, 1, Rng::kInput), ConfigError);
  CHECK(parse_input_kind("white") == InputKind::white);
  CHECK_THROWS_AS(parse_input_kind("pink"), ConfigError);
}

TEST_CASE("index sets") {
  const IndexSet s = IndexSet::from_pairs(3, 2, {{2, 1}, {0, 0}, {2, 1}, {1, 0}});
  CHECK(s.size() == 3);
  CHECK(s.entries()[0] == IndexPair{0, 0});
  CHECK(s.entries()[2] == IndexPair{2, 1});
  CHECK(s.contains({1, 0}));
  CHECK(!s.contains({1, 1}));
  const IndexSet c = s.complement();
  CHECK(c.size() == 3);
  CHECK(c.contains({1, 1}));
  CHECK(c.complement() == s);
  CHECK_THROWS(IndexSet::from_pairs(3, 2, {{3, 0}}));

  Matrix x(2, 2);
  x << 0.0, 1e-9, -0.5, 2.0;
  CHECK(sparse_index_set(x).size() == 1);
  CHECK(sparse_index_set(x, 1e-7).size() == 2);
}

TEST_CASE("regression trial construction") {
  InputGeneratorSpec spec;
  spec.kind = InputKind::example1_mixed;
  spec.random_walk_dims = {1, 2, 3, 4, 5};
  const RegressionTrial t = generate_linear_regression_trial(10, 6, 0.25, spec, 0.0, 50, 8);
  CHECK(t.theta.rows() == 10);
  CHECK(t.theta.cols() == 6);
  CHECK(t.theta.sum() == 15.0);
  CHECK((t.theta.array() == 0.0).count() == 45);
  for (std::size_t k = 0; k < t.phi.size(); ++k)
    CHECK((t.y[k] - t.theta.transpose() * t.phi[k]).norm() == 0.0);
  const RegressionTrial again = generate_linear_regression_trial(10, 6, 0.25, spec, 0.0, 50, 8);
  CHECK(again.theta == t.theta);
  const RegressionTrial other = generate_linear_regression_trial(10, 6, 0.25, spec, 0.0, 50, 9);
  CHECK(other.theta != t.theta);
}

TEST_CASE("C(z) stability check") {
  ArmaxSystem s = ArmaxSystem::example1();
  CzStability st = check_cz_stability(s);
  CHECK(st.stable);
  CHECK(st.min_root_modulus == doctest::Approx(1.25));
  s.c[0] = 1.25 * Matrix::Identity(10, 10);
  st = check_cz_stability(s);
  CHECK(!st.stable);
  CHECK(st.min_root_modulus == doctest::Approx(0.8));
}
