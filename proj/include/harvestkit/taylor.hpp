#pragma once

#include <functional>
#include <vector>

#include "harvestkit/mp.hpp"
#include "harvestkit/propagators.hpp"

namespace hk {

// coeffs[k] = X^{(k)}(0) / k!
struct TaylorTable {
  FactorKind kind;
  int order = 0;
  std::vector<cd> coeffs;
  DimensionlessConfig config;
};

// Coefficients from the linear ODE each factor satisfies (T = 1 units):
//   F_H:     f' = ((x + 2i omega)/2) f            -> (k+1) f_{k+1} = i omega f_k + f_{k-1}/2
//   G_H:     g' = -(ell/2) g + pi^{-1/2} e^{x^2/4} -> (k+1) g_{k+1} = -(ell/2) g_k + [e^{x^2/4}]_k / sqrt(pi)
//   F_Delta: -e^{-ell^2/4} F_H
//   G_Delta: (ell/2)^k / k!
//   F_W:     e^{x^2/4}/(4 pi), odd coefficients zero
//   G_W:     phi(omega + i x/2), phi = e^{-z^2} - sqrt(pi) z erfc(z), phi' = -sqrt(pi) erfc,
//            phi^{(k)} = 2 (-1)^k H_{k-2}(z) e^{-z^2} for k >= 2
// The G_H recurrence amplifies seed errors by up to e^{ell^2/4}, so every table is
// accumulated in multiprecision with matching guard bits and rounded at the end.
TaylorTable factor_coeffs(FactorKind kind, int order, const DimensionlessConfig& cfg);

// Same coefficients at the current mp precision (guard bits added internally).
std::vector<Cplx<mp_real>> factor_coeffs_mp(FactorKind kind, int order, const mp_real& omega, const mp_real& ell);

// Trapezoid Cauchy integral on |z| = radius with M >= max(64, 4 order) points:
// Taylor coefficients c_0..c_order at the current precision of R.
template <class R>
std::vector<Cplx<R>> contour_taylor(const std::function<Cplx<R>(const Cplx<R>&)>& f, int order, double radius, int M = 0);

struct ContourResult {
  std::vector<cd> coeffs;  // Taylor coefficients
  unsigned bits = 0;       // working precision that met the tolerance
};

// Multiprecision contour with precision raised until the round-off bound
// 2^{-p} max|f| / r^k is below rel_tol |c_k| (or abs_floor).
ContourResult contour_taylor_adaptive(const std::function<Cplx<mp_real>(const Cplx<mp_real>&)>& f, int order,
                                      double radius = 1.0, double rel_tol = 1e-13, double abs_floor = 0.0,
                                      unsigned max_bits = 16384);

enum class TiltVariable { alpha, beta };

// k-th derivatives (k = 0..order) of the generator in one tilt with the other at 0.
std::vector<cd> contour_derivatives(GeneratorKind kind, TiltVariable which, int order, double radius,
                                    const DimensionlessConfig& cfg);

// Derivatives of an arbitrary double-precision function, plain trapezoid in double.
std::vector<cd> contour_derivatives(const std::function<cd(cd)>& f, int order, double radius = 1.0, int M = 0);

}  // namespace hk
