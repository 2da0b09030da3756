#include "harvestkit/taylor.hpp"

#include <algorithm>
#include <cmath>

#include "harvestkit/errors.hpp"
#include "harvestkit/specfun.hpp"

namespace hk {

namespace {

unsigned table_guard_bits(double ell) { return static_cast<unsigned>(1.4426950408889634 * ell * ell / 4 + 48); }

std::vector<Cplx<mp_real>> coeffs_impl(FactorKind kind, int order, const mp_real& omega, const mp_real& ell) {
  using boost::multiprecision::exp;
  using boost::multiprecision::sqrt;
  using C = Cplx<mp_real>;
  std::vector<C> c(order + 1);
  const mp_real pi = real_pi<mp_real>();
  switch (kind) {
    case FactorKind::F_H:
    case FactorKind::F_Delta: {
      c[0] = C(exp(-omega * omega) / (4 * sqrt(pi) * ell));
      if (kind == FactorKind::F_Delta) c[0].re *= -exp(-ell * ell / 4);
      C iw(mp_real(0), omega);
      for (int k = 0; k < order; ++k) {
        C next = iw * c[k];
        if (k > 0) next += c[k - 1] / mp_real(2);
        c[k + 1] = next / mp_real(k + 1);
      }
      break;
    }
    case FactorKind::G_H: {
      c[0] = factor_value<mp_real>(FactorKind::G_H, C(0), omega, ell);
      c[0].im = 0;  // exactly real at the origin
      const mp_real isp = 1 / sqrt(pi);
      mp_real gauss = isp;  // [e^{x^2/4}]_{2j} / sqrt(pi)
      for (int k = 0; k < order; ++k) {
        C next = c[k] * (-ell / 2);
        if (k % 2 == 0) {
          next.re += gauss;
          gauss /= mp_real(4 * (k / 2 + 1));
        }
        c[k + 1] = next / mp_real(k + 1);
      }
      break;
    }
    case FactorKind::G_Delta: {
      c[0] = C(mp_real(1));
      for (int k = 0; k < order; ++k) c[k + 1] = c[k] * (ell / 2) / mp_real(k + 1);
      break;
    }
    case FactorKind::F_W: {
      mp_real v = 1 / (4 * pi);
      for (int k = 0; k <= order; k += 2) {
        c[k] = C(v);
        v /= mp_real(4 * (k / 2 + 1));
      }
      break;
    }
    case FactorKind::G_W: {
      c[0] = factor_value<mp_real>(FactorKind::G_W, C(0), omega, ell);
      c[0].im = 0;
      if (order >= 1) c[1] = C(mp_real(0), -sqrt(pi) * erfc(omega) / 2);
      // c_k = 2 (-1)^k H_{k-2}(omega) e^{-omega^2} (i/2)^k / k!
      mp_real eg = exp(-omega * omega);
      mp_real h0 = 1, h1 = 2 * omega;  // H_{j}, H_{j+1}
      mp_real scale = 2 * eg / 4 / 2;   // 2 e^{-w^2} (1/2)^2 / 2!
      for (int k = 2; k <= order; ++k) {
        int j = k - 2;
        mp_real hj = h0;
        mp_real mag = scale * hj;  // 2 e^{-w^2} H_j (1/2)^k / k!
        // (-1)^k i^k = (-i)^k
        switch (k % 4) {
          case 0: c[k] = C(mag, mp_real(0)); break;
          case 1: c[k] = C(mp_real(0), -mag); break;
          case 2: c[k] = C(-mag, mp_real(0)); break;
          case 3: c[k] = C(mp_real(0), mag); break;
        }
        mp_real h2 = 2 * omega * h1 - 2 * (j + 1) * h0;
        h0 = h1;
        h1 = h2;
        scale /= mp_real(2 * (k + 1));
      }
      break;
    }
  }
  return c;
}

mp_real round_here(const mp_real& x) {
  mp_real r;
  mpfr_set(r.backend().data(), x.backend().data(), MPFR_RNDN);
  return r;
}

}  // namespace

std::vector<Cplx<mp_real>> factor_coeffs_mp(FactorKind kind, int order, const mp_real& omega, const mp_real& ell) {
  if (order < 0) throw DomainError("order must be nonnegative");
  unsigned p = mp_precision_bits();
  std::vector<Cplx<mp_real>> c;
  {
    PrecisionScope scope(p + table_guard_bits(to_double(ell)) + static_cast<unsigned>(2 * order / 3));
    c = coeffs_impl(kind, order, round_here(omega), round_here(ell));
  }
  for (auto& z : c) z = Cplx<mp_real>(round_here(z.re), round_here(z.im));
  return c;
}

TaylorTable factor_coeffs(FactorKind kind, int order, const DimensionlessConfig& cfg) {
  if (order < 0) throw DomainError("order must be nonnegative");
  TaylorTable t;
  t.kind = kind;
  t.order = order;
  t.config = cfg;
  PrecisionScope scope(64);
  auto c = factor_coeffs_mp(kind, order, mp_real(cfg.omega), mp_real(cfg.ell));
  t.coeffs.reserve(c.size());
  for (auto& z : c) t.coeffs.push_back(z.to_std());
  return t;
}

template <class R>
std::vector<Cplx<R>> contour_taylor(const std::function<Cplx<R>(const Cplx<R>&)>& f, int order, double radius, int M) {
  using std::cos;
  using std::sin;
  if (order < 0) throw DomainError("order must be nonnegative");
  if (!(radius > 0)) throw DomainError("contour radius must be positive");
  M = std::max({M, 64, 4 * order});
  const R two_pi = 2 * real_pi<R>();
  const R r(radius);
  std::vector<Cplx<R>> roots(M);
  for (int j = 0; j < M; ++j) {
    R th = two_pi * R(j) / R(M);
    roots[j] = Cplx<R>(cos(th), sin(th));
  }
  std::vector<Cplx<R>> c(order + 1);
  for (int j = 0; j < M; ++j) {
    Cplx<R> val = f(roots[j] * r);
    if (!std::isfinite(to_double(val.re)) || !std::isfinite(to_double(val.im)))
      throw NumericalError("non-finite generator sample on the contour");
    // accumulate val * e^{-ik theta_j}; e^{-ik theta_j} = conj(roots[(k j) mod M])
    for (int k = 0; k <= order; ++k) c[k] += val * conj(roots[(static_cast<long>(k) * j) % M]);
  }
  R rk(1);
  for (int k = 0; k <= order; ++k) {
    c[k] /= R(M);
    c[k] /= rk;
    rk *= r;
  }
  return c;
}

template std::vector<Cplx<double>> contour_taylor<double>(const std::function<Cplx<double>(const Cplx<double>&)>&,
                                                          int, double, int);
template std::vector<Cplx<mp_real>> contour_taylor<mp_real>(
    const std::function<Cplx<mp_real>(const Cplx<mp_real>&)>&, int, double, int);

ContourResult contour_taylor_adaptive(const std::function<Cplx<mp_real>(const Cplx<mp_real>&)>& f, int order,
                                      double radius, double rel_tol, double abs_floor, unsigned max_bits) {
  unsigned bits = 128;
  const int M = std::max(64, 4 * order);
  for (;;) {
    std::vector<cd> c(order + 1);
    double fmax = 0;
    {
      PrecisionScope scope(bits);
      auto tracked = [&](const Cplx<mp_real>& z) {
        auto v = f(z);
        fmax = std::max(fmax, std::abs(v.to_std()));
        return v;
      };
      auto cm = contour_taylor<mp_real>(tracked, order, radius, M);
      for (int k = 0; k <= order; ++k) c[k] = cm[k].to_std();
    }
    // Round-off of the trapezoid sum is ~ 2^{-p} fmax / r^k; compare against the target.
    double need = 0;
    for (int k = 0; k <= order; ++k) {
      double target = std::max(rel_tol * std::abs(c[k]), abs_floor);
      if (target <= 0) continue;
      double lg = std::log2(fmax) - k * std::log2(radius) - std::log2(target);
      need = std::max(need, lg + 8 + std::log2(static_cast<double>(M)));
    }
    if (need <= bits) return {c, bits};
    if (bits >= max_bits) throw NumericalError("contour oracle exhausted its precision budget");
    bits = std::min<unsigned>(max_bits, std::max<unsigned>(bits * 3 / 2, static_cast<unsigned>(need) + 32));
  }
}

std::vector<cd> contour_derivatives(GeneratorKind kind, TiltVariable which, int order, double radius,
                                    const DimensionlessConfig& cfg) {
  auto f = [&](const Cplx<mp_real>& z) {
    Cplx<mp_real> zero(mp_real(0));
    mp_real om(cfg.omega), ell(cfg.ell);
    return which == TiltVariable::alpha ? generator_value<mp_real>(kind, z, zero, om, ell)
                                        : generator_value<mp_real>(kind, zero, z, om, ell);
  };
  auto res = contour_taylor_adaptive(f, order, radius, 1e-13);
  double fact = 1;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) fact *= k;
    res.coeffs[k] *= fact;
  }
  return res.coeffs;
}

std::vector<cd> contour_derivatives(const std::function<cd(cd)>& f, int order, double radius, int M) {
  auto g = [&](const Cplx<double>& z) { return Cplx<double>(f(z.to_std())); };
  auto c = contour_taylor<double>(g, order, radius, M);
  std::vector<cd> out(order + 1);
  double fact = 1;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) fact *= k;
    out[k] = c[k].to_std() * fact;
  }
  return out;
}

}  // namespace hk
