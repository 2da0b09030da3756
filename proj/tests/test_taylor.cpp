#include <cmath>

#include "doctest.h"
#include "harvestkit/taylor.hpp"

using namespace hk;

namespace {
std::function<Cplx<mp_real>(const Cplx<mp_real>&)> isolated(FactorKind k, const DimensionlessConfig& c) {
  return [k, c](const Cplx<mp_real>& z) { return factor_value<mp_real>(k, z, mp_real(c.omega), mp_real(c.ell)); };
}

bool close(cd a, cd b, double rel, double abs_floor) { return std::abs(a - b) <= rel * std::abs(b) + abs_floor; }
}  // namespace

TEST_CASE("factor table examples") {
  auto g = factor_coeffs(FactorKind::G_Delta, 3, {0.4, 2.0, 1.0});
  REQUIRE(g.coeffs.size() == 4);
  CHECK(g.coeffs[0] == cd(1));
  CHECK(g.coeffs[1] == cd(1));
  CHECK(std::abs(g.coeffs[2] - 0.5) < 1e-16);
  CHECK(std::abs(g.coeffs[3] - 1.0 / 6) < 1e-16);
  auto fw = factor_coeffs(FactorKind::F_W, 4, {2.0, 3.0, 1.0});
  double expect[5] = {1 / (4 * M_PI), 0, 1 / (16 * M_PI), 0, 1 / (128 * M_PI)};
  for (int k = 0; k < 5; ++k) CHECK(std::abs(fw.coeffs[k] - expect[k]) <= 1e-16 * std::abs(expect[k]));
  CHECK(fw.coeffs[1] == cd(0));
  CHECK(fw.coeffs[3] == cd(0));
  // F_Delta = -e^{-l^2/4} e^{(x+2iw)^2/4}/(4 l sqrt(pi)); at x-order 1 the coefficient is i w times c_0
  auto fd = factor_coeffs(FactorKind::F_Delta, 2, {0.8, 3.0, 1.0});
  double c0 = -std::exp(-0.64) * std::exp(-9.0 / 4) / (4 * 3.0 * std::sqrt(M_PI));
  CHECK(std::abs(fd.coeffs[0] - c0) <= 1e-15 * std::abs(c0));
  CHECK(std::abs(fd.coeffs[1] - cd(0, 0.8) * c0) <= 1e-15 * std::abs(c0));
}

TEST_CASE("contour oracle trivial cases") {
  auto d = contour_derivatives([](cd) { return cd(2.5, -1); }, 6);
  CHECK(std::abs(d[0] - cd(2.5, -1)) < 1e-15);
  for (int k = 1; k <= 6; ++k) CHECK(std::abs(d[k]) < 1e-12);
  auto e = contour_derivatives([](cd z) { return std::exp(z); }, 8, 1.0, 64);
  for (int k = 0; k <= 8; ++k) CHECK(std::abs(e[k] - 1.0) < 1e-10);
  // higher orders need the multiprecision path: k! amplifies double round-off
  auto em = contour_taylor_adaptive([](const Cplx<mp_real>& z) { return exp(z); }, 40, 1.0, 1e-14);
  double fact = 1;
  for (int k = 0; k <= 40; ++k) {
    if (k > 0) fact *= k;
    CHECK(std::abs(em.coeffs[k] * fact - 1.0) < 1e-10);
  }
}

TEST_CASE("factor tables match the contour oracle up to order 60") {
  for (double om : {0.0, 1.0, 3.0})
    for (double ell : {1.0, 4.0, 10.0}) {
      DimensionlessConfig cfg{om, ell, 1.0};
      for (auto kind : {FactorKind::F_H, FactorKind::G_H, FactorKind::F_Delta, FactorKind::G_Delta, FactorKind::F_W,
                        FactorKind::G_W}) {
        auto tab = factor_coeffs(kind, 60, cfg);
        auto ref = contour_taylor_adaptive(isolated(kind, cfg), 60, 1.0, 1e-12, 1e-200);
        int bad = 0;
        for (int k = 0; k <= 60; ++k)
          if (!close(tab.coeffs[k], ref.coeffs[k], 1e-9, 1e-190)) ++bad;
        INFO(to_string(kind), " omega=", om, " ell=", ell);
        CHECK(bad == 0);
      }
    }
}

TEST_CASE("contour radius independence") {
  DimensionlessConfig cfg{1.0, 6.0, 1.0};
  for (auto kind : {FactorKind::G_H, FactorKind::G_W, FactorKind::F_H}) {
    auto a = contour_taylor_adaptive(isolated(kind, cfg), 40, 0.5, 1e-12, 1e-200).coeffs;
    auto b = contour_taylor_adaptive(isolated(kind, cfg), 40, 1.0, 1e-12, 1e-200).coeffs;
    auto c = contour_taylor_adaptive(isolated(kind, cfg), 40, 2.0, 1e-12, 1e-200).coeffs;
    for (int k = 0; k <= 40; ++k) {
      CHECK(close(a[k], b[k], 1e-9, 1e-190));
      CHECK(close(c[k], b[k], 1e-9, 1e-190));
    }
  }
}

TEST_CASE("generator derivatives equal the product of factor tables") {
  for (double ell : {2.0, 5.0}) {
    DimensionlessConfig cfg{0.9, ell, 1.0};
    auto d = contour_derivatives(GeneratorKind::Delta, TiltVariable::alpha, 40, 1.0, cfg);
    auto f = factor_coeffs(FactorKind::F_Delta, 40, cfg).coeffs;
    auto g = factor_coeffs(FactorKind::G_Delta, 40, cfg).coeffs;
    // P(a, 0) = F(a) [G(a) + G(-a)]
    double fact = 1;
    for (int k = 0; k <= 40; ++k) {
      if (k > 0) fact *= k;
      cd s = 0;
      for (int j = 0; j <= k; ++j) s += f[k - j] * g[j] * (j % 2 == 0 ? 2.0 : 0.0);
      CHECK(close(s * fact, d[k], 1e-9, 0));
    }
    // beta derivatives agree by symmetry of H and Delta
    auto db = contour_derivatives(GeneratorKind::Delta, TiltVariable::beta, 40, 1.0, cfg);
    for (int k = 0; k <= 40; ++k) CHECK(close(db[k], d[k], 1e-9, 0));
  }
}

TEST_CASE("tables are real where the closed forms are real") {
  DimensionlessConfig cfg{0.0, 4.0, 1.0};
  for (auto kind : {FactorKind::F_W, FactorKind::F_H, FactorKind::F_Delta, FactorKind::G_H, FactorKind::G_Delta})
    for (auto c : factor_coeffs(kind, 50, cfg).coeffs) CHECK(c.imag() == 0.0);
}
