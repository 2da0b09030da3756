#include <doctest.h>

#include <cmath>
#include <random>

#include "harvestkit/errors.hpp"
#include "harvestkit/optimize.hpp"

using namespace hk;

namespace {

const double kSqrtPi = 1.7724538509055160273;

double lambda_max(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Eigen::VectorXd random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (auto& e : v) e = nd(rng);
  return v.normalized();
}

}  // namespace

TEST_CASE("schedule values") {
  CHECK(t_schedule(0, 5.0).T_N == doctest::Approx(5.0 / 6).epsilon(1e-15));
  CHECK(t_schedule(200, 5.0).T_N == doctest::Approx(2.5 / (2 + std::sqrt(401.0))).epsilon(1e-15));
  for (int N : {1000000, 100000000}) {
    auto s = t_schedule(N, 5.0);
    double r = std::sqrt(2.0 * N + 1);
    CHECK(1 - s.T_N * r / 2.5 == doctest::Approx(2 / (2 + r)).epsilon(1e-9));
  }
  CHECK(std::abs(t_schedule(100000000, 5.0).T_N * std::sqrt(2e8 + 1) / 2.5 - 1) < 1e-3);
  CHECK(t_schedule(3, 5.0, 0.25).T_N == doctest::Approx(t_schedule(3, 5.0).T_N + 0.25));
  CHECK_THROWS_AS(t_schedule(-1, 5.0), InvalidArgument);
  CHECK_THROWS_AS(t_schedule(1, 0.0), DomainError);
  CHECK_THROWS_AS(t_schedule(1, 5.0, -1.0), DomainError);
  auto c = schedule_config(2.0, 5.0, 0.5);
  CHECK(c.omega == 1.0);
  CHECK(c.ell == 10.0);
}

TEST_CASE("tail mass is dominated by the top mode and decays with N") {
  // N = 0 tail of a unit Gaussian beyond x0 = 3 is erfc(3)
  auto t0 = tail_integral(0, 5.0);
  CHECK(t0.value == doctest::Approx(std::erfc(3.0)).epsilon(1e-10));
  std::vector<double> x, y;
  for (int N : {0, 25, 50, 100, 200}) {
    auto t = tail_integral(N, 5.0);
    CHECK(t.argmax == N);
    CHECK(t.value < 1);
    x.push_back(N);
    y.push_back(std::log(t.value));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / x.size(), my += y[i] / y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  CHECK(sxy / sxx < 0);
  for (std::size_t i = 1; i < y.size(); ++i) CHECK(y[i] < y[i - 1]);
}

TEST_CASE("basis signalling ratio decays with N") {
  double prev = 0;
  for (int N : {0, 10, 25, 50}) {
    auto r = basis_signalling_ratio(N, 5.0);
    CHECK(std::isfinite(r.log10_ratio));
    if (N > 0) CHECK(r.log10_ratio < prev);
    prev = r.log10_ratio;
  }
  // N = 0 in closed form: Delta/H = -e^{-l^2/4} / erfi-part; compare with the probes directly
  auto s = t_schedule(0, 5.0);
  auto M = build(schedule_config(0.0, 5.0, s.T_N), 0);
  auto r = basis_signalling_ratio(0, 5.0);
  CHECK(r.ratio == doctest::Approx((M.Delta(0, 0) / M.H(0, 0)).real()).epsilon(1e-12));
}

TEST_CASE("spacelike optimum beats random vectors and is stationary") {
  const int N = 12;
  auto s = t_schedule(N, 5.0);
  auto M = build(schedule_config(3.0, 5.0, s.T_N), N);
  auto r = optimize_spacelike(M);
  CHECK(r.c_star.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(harvested_negativity(r.c_star, M, false) == doctest::Approx(r.value).epsilon(1e-9));
  CHECK(r.value == doctest::Approx(kSqrtPi * lambda_max(m_plus(M, r.theta_star))).epsilon(1e-12));
  std::mt19937_64 rng(11);
  const double tol = 1e-9 * std::max(1.0, std::abs(r.value));
  for (int t = 0; t < 1000; ++t) CHECK(harvested_negativity(random_unit(N + 1, rng), M, false) <= r.value + tol);
  for (double d : {-1e-3, 1e-3}) CHECK(kSqrtPi * lambda_max(m_plus(M, r.theta_star + d)) <= r.value + tol);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd p = random_unit(N + 1, rng);
    p -= r.c_star * r.c_star.dot(p);
    Eigen::VectorXd c = (r.c_star + 1e-4 * p.normalized()).normalized();
    CHECK(harvested_negativity(c, M, false) <= r.value + tol);
  }
}

TEST_CASE("no harvesting at zero gap") {
  for (int N : {0, 10, 30}) CHECK(optimize_spacelike(N, 0.0, 5.0).value <= 0);
}

TEST_CASE("rescaled schedule") {
  const int N = 10;
  const double w = 3.0;
  auto a = optimize_spacelike(N, w, 5.0);
  auto b = optimize_rescaled(N, 5.0, 0.0, w, 1.0);
  CHECK(a.value == b.value);
  CHECK(a.report.ser == b.report.ser);
  double TN = t_schedule(N, 5.0).T_N;
  double prev = a.report.ser;
  CHECK(prev > 0);
  for (double q : default_delta_ratios()) {
    auto r = optimize_rescaled(N, 5.0, q * TN, w, 1.0);
    CHECK(r.report.ser > prev);
    prev = r.report.ser;
  }
  auto f = optimize_rescaled(N, 5.0, 0.04 * TN, w, 1e-30);
  CHECK(f.flagged);
  auto scan = rescaled_scan(4, 5.0, {0.0, 0.1}, {2.0, 3.0}, 0.05);
  REQUIRE(scan.size() == 2);
  CHECK(scan[0].curve.size() == 2);
  CHECK(scan[0].peak.value == std::max(scan[0].curve[0].value, scan[0].curve[1].value));
}

TEST_CASE("sweep is deterministic across thread counts") {
  std::vector<double> w{1.0, 2.0, 3.0, 4.0};
  auto a = sweep_gap(8, 5.0, w, 0.0, PrecisionMode::Auto, 1);
  auto b = sweep_gap(8, 5.0, w, 0.0, PrecisionMode::Auto, 3);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(a[i].value == b[i].value);
}

TEST_CASE("constrained objective gradient matches finite differences") {
  const int N = 8;
  auto M = build(schedule_config(0.5, 5.0, 10.0), N);
  ConstrainedObjective obj(M, alpha_support(N, 10.0, 5.0));
  obj.multipliers = Eigen::Vector2d(0.3, -0.7);
  obj.penalty = 25;
  obj.f_scale = 2.0;
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = random_unit(N + 1, rng) * 1.3;
    Eigen::VectorXd g;
    obj.merit(x, &g);
    Eigen::VectorXd fd(N + 1);
    for (int i = 0; i <= N; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += 1e-6;
      xm(i) -= 1e-6;
      fd(i) = (obj.merit(xp) - obj.merit(xm)) / 2e-6;
    }
    CHECK((g - fd).norm() <= 1e-5 * g.norm());
  }
}

TEST_CASE("constrained optimum satisfies the constraint") {
  auto r = optimize_constrained(10, 10.0, 5.0, 0.3);
  CHECK(r.converged);
  CHECK(r.constraint_residual <= 1e-8);
  CHECK(r.alpha == doctest::Approx(10.0 * std::sqrt(21.0) / 2.5));
  auto M = build(schedule_config(0.3, 5.0, 10.0), 10);
  CHECK(r.value == doctest::Approx(rescaled_negativity_alpha(r.c_star, M, r.alpha, false)).epsilon(1e-12));
}

TEST_CASE("inactive constraint recovers the eigen optimum") {
  const int N = 10;
  auto M = build(schedule_config(2.0, 5.0, 1.0), N);
  M.Delta.setZero();
  M.G = 0.5 * M.H;
  auto r = optimize_constrained(M, 1.0);
  auto e = optimize_spacelike(M);
  CHECK(r.converged);
  CHECK(r.constraint_residual == 0);
  CHECK(r.value == doctest::Approx(e.value).epsilon(1e-9));
}

TEST_CASE("zero-signalling bisection") {
  const int N = 10;
  auto r = optimize_constrained(N, 10.0, 5.0, 0.3);
  // a point where the real part changes sign exists somewhere on a coarse grid; search it
  std::vector<double> grid;
  for (double w = 0.05; w <= 1.5; w += 0.05) grid.push_back(w);
  bool found = false;
  for (std::size_t i = 1; i < grid.size() && !found; ++i) {
    cd a = signalling_form(r.c_star, N, 10.0, 5.0, grid[i - 1]);
    cd b = signalling_form(r.c_star, N, 10.0, 5.0, grid[i]);
    if ((a.real() < 0) != (b.real() < 0)) {
      double z = find_zero_signalling_gap(r.c_star, N, 10.0, 5.0, grid[i - 1], grid[i], 1e-6);
      CHECK(z >= grid[i - 1]);
      CHECK(z <= grid[i]);
      double scale = std::max(std::abs(a), std::abs(b));
      CHECK(std::abs(signalling_form(r.c_star, N, 10.0, 5.0, z).real()) < 1e-2 * scale);
      found = true;
    }
  }
  CHECK(found);
  CHECK_THROWS_AS(find_zero_signalling_gap(r.c_star, N, 10.0, 5.0, 0.3, 0.3), InvalidArgument);
}

TEST_CASE("bisection requires a sign change") {
  // single mode at large gap: c^T Delta c keeps its sign on a short window
  Eigen::VectorXd c = Eigen::VectorXd::Unit(1, 0);
  cd a = signalling_form(c, 0, 1.0, 5.0, 0.1), b = signalling_form(c, 0, 1.0, 5.0, 0.2);
  REQUIRE((a.real() < 0) == (b.real() < 0));
  REQUIRE((a.imag() < 0) == (b.imag() < 0));
  CHECK_THROWS_AS(find_zero_signalling_gap(c, 0, 1.0, 5.0, 0.1, 0.2), PreconditionError);
}

TEST_CASE("max signalling bounds every unit vector") {
  const int N = 8;
  auto M = build(schedule_config(1.0, 5.0, 0.6), N);
  double s = max_signalling(M);
  std::mt19937_64 rng(9);
  double best = 0;
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXcd c = random_unit(N + 1, rng).cast<cd>();
    double v = std::abs(c.dot(M.Delta * c));
    CHECK(v <= s * (1 + 1e-12));
    best = std::max(best, v);
  }
  CHECK(best > 0.5 * s);
  // N = 0: the single element
  auto M0 = build(schedule_config(1.0, 5.0, 0.6), 0);
  CHECK(max_signalling(M0) == doctest::Approx(std::abs(M0.Delta(0, 0))).epsilon(1e-12));
}
