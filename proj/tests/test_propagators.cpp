#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>

#include "doctest.h"
#include "harvestkit/errors.hpp"
#include "harvestkit/propagators.hpp"

using namespace hk;
using boost::math::quadrature::gauss_kronrod;

namespace {
const cd I(0, 1);

cd integrate(const std::function<cd(double)>& f, double a, double b) {
  auto re = [&](double t) { return f(t).real(); };
  auto im = [&](double t) { return f(t).imag(); };
  double e;
  return {gauss_kronrod<double, 61>::integrate(re, a, b, 15, 1e-13, &e),
          gauss_kronrod<double, 61>::integrate(im, a, b, 15, 1e-13, &e)};
}

cd chi(const GaussianPulse& p, double t) {
  double s = (t - p.t_center) / p.T;
  return std::exp(-0.5 * s * s + I * p.Omega * t);
}

// time Fourier transform  int chi(t) e^{-ikt} dt, by quadrature
cd chi_hat(const GaussianPulse& p, double k) {
  double a = p.t_center - 12 * p.T, b = p.t_center + 12 * p.T;
  return integrate([&](double t) { return chi(p, t) * std::exp(-I * k * t); }, a, b);
}

double sep(const GaussianPulse& a, const GaussianPulse& b) {
  double s = 0;
  for (int k = 0; k < 3; ++k) s += (a.x[k] - b.x[k]) * (a.x[k] - b.x[k]);
  return std::sqrt(s);
}

// W(f,g) = 1/(4 pi^2 L) int_0^inf sin(kL) e^{-k^2 s^2/2} f^(k) g^(-k) dk
cd wightman_quad(const GaussianPulse& p1, const GaussianPulse& p2) {
  double L = sep(p1, p2);
  double s2 = p1.sigma * p1.sigma + p2.sigma * p2.sigma;
  double kmax = 40.0 / std::min(p1.T, p2.T);
  auto f = [&](double k) {
    cd g = chi_hat(p1, k) * chi_hat(p2, -k) * std::exp(-0.5 * k * k * s2);
    return L > 0 ? std::sin(k * L) / (4 * M_PI * M_PI * L) * g : k / (4 * M_PI * M_PI) * g;
  };
  return integrate(f, 0.0, kmax);
}

// pointlike Delta(f,g) = -(1/4 pi L) [int f(t) g(t-L) dt + int g(t) f(t-L) dt]
cd delta_quad(const GaussianPulse& p1, const GaussianPulse& p2) {
  double L = sep(p1, p2);
  double lo = std::min(p1.t_center - 12 * p1.T, p2.t_center - 12 * p2.T);
  double hi = std::max(p1.t_center + 12 * p1.T, p2.t_center + 12 * p2.T) + L;
  cd a = integrate([&](double t) { return chi(p1, t) * chi(p2, t - L); }, lo, hi);
  cd b = integrate([&](double t) { return chi(p2, t) * chi(p1, t - L); }, lo, hi);
  return -(a + b) / (4 * M_PI * L);
}

// time-ordered kernel: (1/4pi^2)[PV int C(tau)/(L^2 - tau^2) dtau - i pi (C(L) + C(-L))/(2L)]
cd feynman_quad(const GaussianPulse& f, const GaussianPulse& g) {
  double L = sep(f, g);
  double span = 12 * std::max(f.T, g.T) + std::abs(f.t_center) + std::abs(g.t_center);
  auto C = [&](double tau) {
    return integrate([&](double t) { return chi(f, t + tau) * chi(g, t); }, -span - std::abs(tau), span + std::abs(tau));
  };
  // 1/(L^2 - tau^2) = (1/2L)[1/(L - tau) + 1/(L + tau)]; each simple pole folded symmetrically
  auto pv_pole = [&](double p) {
    double R = 2 * span;
    cd near = integrate([&](double s) { return (C(p - s) - C(p + s)) / s; }, 0.0, R);
    // 1/(p - tau) for tau far from p
    cd left = integrate([&](double tau) { return C(tau) / (p - tau); }, p - 4 * R, p - R);
    cd right = integrate([&](double tau) { return C(tau) / (p - tau); }, p + R, p + 4 * R);
    return near + left + right;
  };
  cd pv = (pv_pole(L) + pv_pole(-L) * -1.0) / (2 * L);
  return (pv - I * M_PI * (C(L) + C(-L)) / (2 * L)) / (4 * M_PI * M_PI);
}

GaussianPulse pulse(double tc, double T, double x, cd Om, double sigma = 0) {
  GaussianPulse p;
  p.t_center = tc;
  p.T = T;
  p.x = {x, 0, 0};
  p.Omega = Om;
  p.sigma = sigma;
  return p;
}
}  // namespace

TEST_CASE("Gaussian closed forms against Fourier and time-domain quadrature") {
  auto p1 = pulse(0.3, 1.0, 0.0, cd(1.2, 0.0));
  auto p2 = pulse(-0.4, 1.4, 2.5, cd(0.7, 0.0));
  cd w12 = wightman_quad(p1, p2), w21 = wightman_quad(p2, p1);
  CHECK(std::abs(wightman_gaussian(p1, p2) - w12) <= 1e-9 * std::abs(w12));
  CHECK(std::abs(hadamard_gaussian(p1, p2) - (w12 + w21)) <= 1e-9 * std::abs(w12 + w21));
  cd dq = delta_quad(p1, p2);
  CHECK(std::abs(symmetric_gaussian(p1, p2) - dq) <= 1e-9 * std::abs(dq));
  // local Wightman with a complex gap
  auto q1 = pulse(0.0, 1.0, 0.0, cd(-0.8, -0.3));
  auto q2 = pulse(0.0, 1.0, 0.0, cd(0.8, 0.2));
  cd wq = wightman_quad(q1, q2);
  CHECK(std::abs(wightman_gaussian(q1, q2) - wq) <= 1e-9 * std::abs(wq));
}

TEST_CASE("Gaussian closed forms with spatial smearing") {
  auto p1 = pulse(0.2, 1.0, 0.0, cd(0.9, 0.0), 0.4);
  auto p2 = pulse(-0.1, 1.1, 3.0, cd(0.9, 0.0), 0.3);
  cd w12 = wightman_quad(p1, p2), w21 = wightman_quad(p2, p1);
  CHECK(std::abs(hadamard_gaussian(p1, p2) - (w12 + w21)) <= 1e-9 * std::abs(w12 + w21));
  // smeared Delta is continuous into the pointlike branch
  auto s1 = p1, s2 = p2;
  s1.sigma = s2.sigma = 1e-6;
  auto z1 = p1, z2 = p2;
  z1.sigma = z2.sigma = 0.0;
  cd a = symmetric_gaussian(s1, s2), b = symmetric_gaussian(z1, z2);
  CHECK(std::abs(a - b) <= 1e-8 * std::abs(b));
}

TEST_CASE("Gaussian closed-form examples") {
  double T = 1.3, L = 4.0, Om = 0.6;
  auto p1 = pulse(0.0, T, 0.0, cd(Om, 0)), p2 = pulse(0.0, T, L, cd(Om, 0));
  CHECK(std::abs(hadamard_gaussian(p1, p2).imag()) < 1e-15);
  cd expect = -T * std::exp(-Om * Om * T * T) * std::exp(-L * L / (4 * T * T)) / (2 * std::sqrt(M_PI) * L);
  CHECK(std::abs(symmetric_gaussian(p1, p2) - expect) <= 1e-14 * std::abs(expect));
  auto far1 = pulse(0, 1, 0, 0.0), far2 = pulse(0, 1, 60, 0.0);
  CHECK(std::abs(symmetric_gaussian(far1, far2)) < 1e-300);
  CHECK_THROWS_AS(hadamard_gaussian(p1, p1), DomainError);
  CHECK_THROWS_AS(symmetric_gaussian(p1, p1), DomainError);
}

TEST_CASE("Feynman decomposition against the time-ordered kernel") {
  auto f = pulse(0.0, 1.0, 0.0, cd(1.1, 0)), g = pulse(0.5, 1.0, 3.0, cd(1.1, 0));
  cd assembled = 0.5 * hadamard_gaussian(f, g) + 0.5 * I * symmetric_gaussian(f, g);
  cd q = feynman_quad(f, g);
  CHECK(std::abs(assembled - q) <= 1e-6 * std::abs(q));
}

TEST_CASE("generator examples") {
  DimensionlessConfig c{0.0, 5.0, 1.0};
  cd d = generator(GeneratorKind::Delta, 0.0, 0.0, c);
  CHECK(d.real() == doctest::Approx(-std::exp(-25.0 / 4) / (2 * 5 * std::sqrt(M_PI))).epsilon(1e-14));
  CHECK(d.real() == doctest::Approx(-1.089e-4).epsilon(1e-3));
  cd w = generator(GeneratorKind::W_local, 0.0, 0.0, c);
  CHECK(std::abs(w - 1.0 / (4 * M_PI)) < 1e-16);
  DimensionlessConfig c2{1.3, 2.2, 1.0};
  cd a(0.3, -0.2), b(-0.7, 0.4);
  cd h1 = generator(GeneratorKind::H, a, b, c2), h2 = generator(GeneratorKind::H, b, a, c2);
  CHECK(std::abs(h1 - h2) <= 1e-14 * std::abs(h1));
  CHECK_THROWS_AS(generator(GeneratorKind::H, 0.0, 0.0, DimensionlessConfig{1.0, 0.0, 1.0}), DomainError);
  for (double om : {0.0, 0.7, 2.5})
    for (double ell : {0.5, 3.0, 9.0}) {
      cd v = generator(GeneratorKind::Delta, 0.0, 0.0, DimensionlessConfig{om, ell, 1.0});
      double expect = std::exp(-om * om) * std::exp(-ell * ell / 4) / (2 * ell * std::sqrt(M_PI));
      CHECK(std::abs(std::abs(v) - expect) <= 1e-14 * expect);
    }
}

TEST_CASE("generators agree with tilted Gaussian closed forms") {
  for (double T : {1.0, 0.7, 2.0})
    for (double om : {0.0, 1.1, 3.0})
      for (double ell : {0.8, 4.0}) {
        double Om = om / T, L = ell * T;
        DimensionlessConfig cfg{om, ell, T};
        for (auto [a, b] : {std::pair{0.0, 0.0}, std::pair{0.4, -0.9}, std::pair{-1.3, 0.2}}) {
          double alpha = a / T, beta = b / T;
          auto p1 = pulse(0, T, 0, cd(Om, -alpha)), p2 = pulse(0, T, L, cd(Om, -beta));
          cd h = hadamard_gaussian(p1, p2), hg = generator(GeneratorKind::H, a, b, cfg);
          CHECK(std::abs(h - hg) <= 1e-10 * std::abs(h));
          cd d = symmetric_gaussian(p1, p2), dg = generator(GeneratorKind::Delta, a, b, cfg);
          CHECK(std::abs(d - dg) <= 1e-10 * std::abs(d));
          auto m1 = pulse(0, T, 0, cd(-Om, -alpha)), m2 = pulse(0, T, 0, cd(Om, -beta));
          cd w = wightman_gaussian(m1, m2), wg = generator(GeneratorKind::W_local, a, b, cfg);
          CHECK(std::abs(w - wg) <= 1e-10 * std::abs(w));
          auto n2 = pulse(0, T, L, cd(Om, -beta));
          cd wn = wightman_gaussian(m1, n2), wng = generator(GeneratorKind::W_nonlocal, a, b, cfg);
          CHECK(std::abs(wn - wng) <= 1e-10 * std::abs(wn));
        }
      }
}

TEST_CASE("generator multiprecision evaluation matches double") {
  PrecisionScope ps(160);
  for (auto kind : {GeneratorKind::H, GeneratorKind::Delta, GeneratorKind::W_local, GeneratorKind::W_nonlocal}) {
    cd a(0.3, 0.5), b(-0.2, 0.1);
    DimensionlessConfig cfg{1.7, 3.0, 1.0};
    cd d = generator(kind, a, b, cfg);
    cd m = generator_value<mp_real>(kind, from_std<mp_real>(a), from_std<mp_real>(b), mp_real(1.7), mp_real(3.0)).to_std();
    CHECK(std::abs(d - m) <= 1e-13 * std::abs(m));
  }
}
