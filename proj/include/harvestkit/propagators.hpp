#pragma once

#include <array>
#include <complex>

#include "harvestkit/mp.hpp"
#include "harvestkit/specfun.hpp"

namespace hk {

// Gaussian switching e^{-(t-t_c)^2/2T^2} e^{i Omega t} times a normalized Gaussian
// spatial profile of width sigma centred at x. A complex Omega implements the e^{alpha t} tilt.
struct GaussianPulse {
  double t_center = 0.0;
  double T = 1.0;
  double sigma = 0.0;
  std::array<double, 3> x{0.0, 0.0, 0.0};
  cd Omega{0.0, 0.0};
};

// omega = Omega T, ell = L / T; T carried for unit restoration.
struct DimensionlessConfig {
  double omega = 0.0;
  double ell = 1.0;
  double T = 1.0;
};

cd hadamard_gaussian(const GaussianPulse& p1, const GaussianPulse& p2);
cd symmetric_gaussian(const GaussianPulse& p1, const GaussianPulse& p2);
cd wightman_gaussian(const GaussianPulse& p1, const GaussianPulse& p2);

enum class GeneratorKind { H, Delta, W_local, W_nonlocal };

const char* to_string(GeneratorKind k);

// Factor functions in dimensionless tilts. P(a,b) = F(u) [G(v) + G(-v)] for H and
// Delta, F(u) G(v) for W_local, with u = a + b, v = a - b. For W the first tilt a
// belongs to the negative-frequency (Lambda^-) argument.
enum class FactorKind { F_H, G_H, F_Delta, G_Delta, F_W, G_W };

const char* to_string(FactorKind k);

template <class R>
Cplx<R> factor_value(FactorKind kind, const Cplx<R>& x, const R& omega, const R& ell);

// Generating function P(a, b) with a = alpha T, b = beta T (dimensionless tilts).
// The values carry no units; the matrix prefactor supplies the 1/T.
template <class R>
Cplx<R> generator_value(GeneratorKind kind, const Cplx<R>& a, const Cplx<R>& b, const R& omega, const R& ell);

cd generator(GeneratorKind kind, cd a, cd b, const DimensionlessConfig& cfg);

}  // namespace hk
