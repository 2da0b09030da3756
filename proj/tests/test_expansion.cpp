#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "harvestkit/errors.hpp"
#include "harvestkit/expansion.hpp"
#include "harvestkit/optimize.hpp"
#include "harvestkit/specfun.hpp"

using namespace hk;

TEST_CASE("expression grammar") {
  CHECK(Expression::parse("1+2*3")(0) == 7);
  CHECK(Expression::parse("2^3^2")(0) == 512);
  CHECK(Expression::parse("-t^2")(3) == -9);
  CHECK(Expression::parse("(-t)^2")(3) == 9);
  CHECK(Expression::parse("2^-1")(0) == 0.5);
  CHECK(Expression::parse("8/4/2")(0) == 1);
  CHECK(Expression::parse("1.5e2 + .5")(0) == 150.5);
  CHECK(Expression::parse("exp(-t^2/2)")(1.0) == doctest::Approx(std::exp(-0.5)));
  CHECK(Expression::parse("sin(pi/2)*cos(0) + erf(0)")(0) == doctest::Approx(1.0));
  CHECK(Expression::parse("e")(0) == doctest::Approx(std::exp(1.0)));
  CHECK(Expression::parse(" t * 2 ")(1.25) == 2.5);
  for (const char* bad : {"", "1+", "(t", "foo(t)", "exp t", "1 2", "t)", ".", "sin()"}) {
    CHECK_THROWS_AS(Expression::parse(bad), ParseError);
  }
  try {
    Expression::parse("1 + $");
  } catch (const ParseError& e) {
    CHECK(e.position == 4);
  }
}

TEST_CASE("basis element expands to a unit vector") {
  const double T = 0.7;
  for (int k : {0, 3}) {
    auto chi = SwitchingProfile::from_function([&](double t) { return hermite_function(k, t, T); });
    auto e = expand(chi, 6, T);
    CHECK(e.converged);
    for (int n = 0; n <= 6; ++n) CHECK(std::abs(e.c(n) - (n == k ? 1.0 : 0.0)) < 1e-12);
    CHECK(residual(chi, e.c, T) <= 1e-12);
  }
}

TEST_CASE("same-shape Gaussian concentrates in n = 0 and odd profiles have no even part") {
  auto g = SwitchingProfile::from_expression("exp(-t^2/2)");
  auto e = expand(g, 10, 1.0);
  CHECK(e.c(0) == doctest::Approx(std::pow(3.14159265358979323846, 0.25)).epsilon(1e-12));
  CHECK(e.c(0) * e.c(0) / e.c.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
  auto odd = SwitchingProfile::from_expression("t*exp(-t^2/3) + sin(t)*exp(-t^2)");
  auto o = expand(odd, 20, 1.3);
  for (int n = 0; n <= 20; n += 2) CHECK(std::abs(o.c(n)) < 1e-12);
}

TEST_CASE("round trip through reconstruction") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int N : {5, 30, 60}) {
    Eigen::VectorXd c(N + 1);
    for (auto& x : c) x = nd(rng);
    const double T = 0.9;
    auto chi = SwitchingProfile::from_function([&](double t) { return reconstruct(c, T, t); });
    auto e = expand(chi, N, T);
    CHECK((e.c - c).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, c.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("residual and Parseval are monotone in N") {
  auto chi = SwitchingProfile::from_function([](double t) { return std::abs(t) <= 1 ? 1.0 : 0.0; }, 1.0);
  const double norm2 = 2.0;
  CHECK(l2_norm(chi, 0.4, 8) == doctest::Approx(std::sqrt(norm2)).epsilon(1e-12));
  double prev_res = 2, prev_sum = 0;
  const double T = 0.4;
  for (int N : {0, 4, 8, 16, 32}) {
    auto e = expand(chi, N, T);
    CHECK(e.method == "panels");
    double r = residual(chi, e.c, T);
    double s = e.c.squaredNorm();
    CHECK(s <= norm2 * (1 + 1e-9));
    CHECK(s >= prev_sum - 1e-9);
    CHECK(r <= prev_res + 1e-9);
    prev_res = r;
    prev_sum = s;
  }
}

TEST_CASE("square pulse on the schedule") {
  auto chi = SwitchingProfile::from_function([](double t) { return std::abs(t) <= 1 ? 1.0 : 0.0; }, 1.0);
  double T = t_schedule(50, 5.0).T_N;
  auto e = expand(chi, 50, T);
  double r = residual(chi, e.c, T);
  // orthogonal projection: r^2 = 1 - |c|^2 / |chi|^2
  CHECK(r * r == doctest::Approx(1 - e.c.squaredNorm() / 2.0).epsilon(1e-8));
  MESSAGE("square pulse residual N=50: " << r);
  WARN(r < 0.05);
}

TEST_CASE("sampled profiles") {
  std::vector<double> t, v;
  for (int i = -400; i <= 400; ++i) {
    t.push_back(i * 0.02);
    v.push_back(std::exp(-t.back() * t.back() / 2));
  }
  auto chi = SwitchingProfile::from_samples(t, v);
  CHECK(chi(0.013) == doctest::Approx(std::exp(-0.013 * 0.013 / 2)).epsilon(1e-8));
  CHECK(chi(9.0) == 0.0);
  auto e = expand(chi, 8, 1.0);
  CHECK(e.c(0) == doctest::Approx(std::pow(3.14159265358979323846, 0.25)).epsilon(1e-7));
  std::vector<double> ts, vs;
  for (int i = -10; i <= 10; ++i) ts.push_back(i * 0.5), vs.push_back(1.0);
  auto sparse = SwitchingProfile::from_samples(ts, vs);
  CHECK_THROWS_AS(expand(sparse, 60, 0.3), PreconditionError);
  CHECK_THROWS_AS(SwitchingProfile::from_samples({0, 1, 1, 2}, {0, 0, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(SwitchingProfile::from_samples({0, 1, 2}, {0, 0, 0}), InvalidArgument);
}

TEST_CASE("CSV samples") {
  std::istringstream ok("t,value\n# comment\n-1, 0\n-0.5,0.5\n0,1\n0.5,0.5\n1,0\n");
  auto p = read_csv_profile(ok);
  CHECK(p.sampled());
  CHECK(p.t_min() == -1);
  CHECK(p(0) == 1.0);
  std::istringstream bad("0,1\n1,x\n2,3\n3,4\n");
  CHECK_THROWS_AS(read_csv_profile(bad), ParseError);
  std::istringstream three("0,1,2\n");
  CHECK_THROWS_AS(read_csv_profile(three), ParseError);
  CHECK_THROWS_AS(read_csv_profile_file("/nonexistent/x.csv"), IoError);
}
