#include <cmath>
#include <random>

#include "doctest.h"
#include "harvestkit/errors.hpp"
#include "harvestkit/specfun.hpp"

using namespace hk;

namespace {
// Term-by-term Maclaurin series in long double, summed to convergence.
long double erf_series(long double x) {
  long double term = x, sum = x;
  for (int k = 1; k < 200; ++k) {
    term *= -x * x / k;
    sum += term / (2 * k + 1);
  }
  return 2 * sum / std::sqrt(3.14159265358979323846264338327950288L);
}
long double erfi_series(long double x) {
  long double term = x, sum = x;
  for (int k = 1; k < 200; ++k) {
    term *= x * x / k;
    sum += term / (2 * k + 1);
  }
  return 2 * sum / std::sqrt(3.14159265358979323846264338327950288L);
}
}  // namespace

TEST_CASE("hermite polynomial values") {
  CHECK(hermite_poly(0, 0.7) == 1.0);
  CHECK(hermite_poly(1, 0.7) == doctest::Approx(1.4));
  CHECK(hermite_poly(3, 2.0) == doctest::Approx(40.0));
  CHECK(std::abs(hermite_poly(3, cd(2.0, 0.0)) - cd(40.0)) < 1e-12);
  CHECK_THROWS_AS(hermite_poly(5000, 0.1), CapacityError);
}

TEST_CASE("hermite recurrence consistency up to n=200") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    cd x(ux(rng), ux(rng) * 0.3);
    for (int n = 1; n < 200; ++n) {
      cd a = hermite_poly(n + 1, x), b = 2.0 * x * hermite_poly(n, x), c = 2.0 * n * hermite_poly(n - 1, x);
      double scale = std::abs(a) + std::abs(b) + std::abs(c);
      CHECK(std::abs(a - b + c) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("hermite function basics") {
  CHECK(hermite_function(0, 0.0, 1.0) == doctest::Approx(std::pow(M_PI, -0.25)).epsilon(1e-15));
  CHECK(hermite_function(1, 0.0, 2.5) == 0.0);
  CHECK_THROWS_AS(hermite_function(0, 0.0, 0.0), DomainError);
  // log-scaled evaluation matches the direct formula where the latter is representable
  for (int n : {0, 3, 10, 40}) {
    double t = 0.8, T = 1.3, x = t / T;
    double direct = std::pow(M_PI, -0.25) / std::sqrt(std::pow(2.0, n) * std::tgamma(n + 1.0) * T) *
                    hermite_poly(n, x) * std::exp(-x * x / 2);
    CHECK(hermite_function(n, t, T) == doctest::Approx(direct).epsilon(1e-11));
  }
  // large order far in the tail stays finite and tiny
  double v = hermite_function(300, 40.0, 1.0);
  CHECK(std::isfinite(v));
  CHECK(std::abs(v) < 1e-100);
}

TEST_CASE("hermite orthonormality under Gauss-Hermite quadrature") {
  auto rule = gauss_hermite(80);
  std::vector<std::vector<double>> psi;
  for (double x : rule.nodes) psi.push_back(hermite_functions(60, x));
  double worst = 0;
  for (int n = 0; n <= 60; ++n)
    for (int m = 0; m <= 60; ++m) {
      double s = 0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.scaled_weights[i] * psi[i][n] * psi[i][m];
      worst = std::max(worst, std::abs(s - (n == m ? 1.0 : 0.0)));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("faddeeva and error functions") {
  CHECK(std::abs(faddeeva(cd(0, 0)) - cd(1, 0)) < 1e-15);
  CHECK(complex_erf(cd(1, 0)).real() == doctest::Approx(0.842700792949715).epsilon(1e-14));
  CHECK(complex_erfi(cd(1, 0)).real() == doctest::Approx(1.650425758797543).epsilon(1e-14));
  for (double x : {0.1, 0.5, 1.5, 2.5, 4.0}) {
    CHECK(complex_erf(cd(x, 0)).real() == doctest::Approx(static_cast<double>(erf_series(x))).epsilon(1e-14));
    CHECK(complex_erfi(cd(x, 0)).real() == doctest::Approx(static_cast<double>(erfi_series(x))).epsilon(1e-13));
  }
}

TEST_CASE("faddeeva symmetries and region agreement") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int i = 0; i < 200; ++i) {
    cd z(u(rng), u(rng) * 0.5);
    cd e = complex_erf(z);
    CHECK(std::abs(complex_erf(-z) + e) <= 1e-13 * std::max(1.0, std::abs(e)));
    CHECK(std::abs(complex_erf(std::conj(z)) - std::conj(e)) <= 1e-13 * std::max(1.0, std::abs(e)));
  }
  // double-precision continued fraction vs multiprecision series across the switch radius
  for (double r : {6.0, 7.5, 12.0, 30.0, 50.0})
    for (double th : {0.0, 0.05, 0.4, 1.2, 1.57, 2.5, 3.1}) {
      cd z = std::polar(r, th);
      cd w = faddeeva(z);
      cd ref;
      {
        PrecisionScope ps(120);
        ref = faddeeva(Cplx<mp_real>(mp_real(z.real()), mp_real(z.imag()))).to_std();
      }
      CHECK(std::abs(w - ref) <= 1e-13 * std::abs(ref));
    }
}
