#include "harvestkit/propagators.hpp"

#include <cmath>

#include "harvestkit/errors.hpp"

namespace hk {

namespace {

const cd I(0.0, 1.0);

double distance(const GaussianPulse& a, const GaussianPulse& b) {
  double s = 0;
  for (int k = 0; k < 3; ++k) s += (a.x[k] - b.x[k]) * (a.x[k] - b.x[k]);
  return std::sqrt(s);
}

// e^{-x^2} erfi(x) written through w so that neither factor overflows.
cd scaled_erfi(cd x) { return I * (faddeeva(-x) - std::exp(-x * x)); }

struct PairData {
  double L, t0;
  cd dOmega;  // Omega_1 T_1^2 - Omega_2 T_2^2
  cd phase;   // T1 T2 e^{i(Omega_1 t_1 + Omega_2 t_2)} e^{-(Omega_1^2 T_1^2 + Omega_2^2 T_2^2)/2}
};

PairData pair_data(const GaussianPulse& p1, const GaussianPulse& p2) {
  if (!(p1.T > 0) || !(p2.T > 0)) throw DomainError("pulse widths must be positive");
  if (p1.sigma < 0 || p2.sigma < 0) throw DomainError("spatial widths must be nonnegative");
  PairData d;
  d.L = distance(p1, p2);
  d.t0 = p1.t_center - p2.t_center;
  d.dOmega = p1.Omega * p1.T * p1.T - p2.Omega * p2.T * p2.T;
  d.phase = p1.T * p2.T *
            std::exp(I * (p1.Omega * p1.t_center + p2.Omega * p2.t_center) -
                     0.5 * (p1.Omega * p1.Omega * p1.T * p1.T + p2.Omega * p2.Omega * p2.T * p2.T));
  return d;
}

}  // namespace

const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::H: return "H";
    case GeneratorKind::Delta: return "Delta";
    case GeneratorKind::W_local: return "W";
    case GeneratorKind::W_nonlocal: return "W_ab";
  }
  return "?";
}

const char* to_string(FactorKind k) {
  switch (k) {
    case FactorKind::F_H: return "F_H";
    case FactorKind::G_H: return "G_H";
    case FactorKind::F_Delta: return "F_Delta";
    case FactorKind::G_Delta: return "G_Delta";
    case FactorKind::F_W: return "F_W";
    case FactorKind::G_W: return "G_W";
  }
  return "?";
}

cd hadamard_gaussian(const GaussianPulse& p1, const GaussianPulse& p2) {
  PairData d = pair_data(p1, p2);
  if (!(d.L > 0)) throw DomainError("Hadamard smearing needs nonzero separation");
  double S = std::sqrt(p1.T * p1.T + p2.T * p2.T + p1.sigma * p1.sigma + p2.sigma * p2.sigma);
  cd y = (d.t0 - d.L + I * d.dOmega) / (std::sqrt(2.0) * S);
  cd x = (d.t0 + d.L + I * d.dOmega) / (std::sqrt(2.0) * S);
  cd bracket = -scaled_erfi(y) + scaled_erfi(x);
  return d.phase / (2.0 * std::sqrt(2.0 * M_PI) * d.L * S) * bracket;
}

cd symmetric_gaussian(const GaussianPulse& p1, const GaussianPulse& p2) {
  PairData d = pair_data(p1, p2);
  if (!(d.L > 0)) throw DomainError("symmetric propagator smearing needs nonzero separation");
  double T2 = p1.T * p1.T + p2.T * p2.T;
  double two_sigma2 = p1.sigma * p1.sigma + p2.sigma * p2.sigma;
  double S = std::sqrt(T2 + two_sigma2);
  cd a = d.t0 + I * d.dOmega;
  cd e1 = std::exp(-(a - d.L) * (a - d.L) / (2.0 * S * S));
  cd e2 = std::exp(-(a + d.L) * (a + d.L) / (2.0 * S * S));
  cd bracket;
  if (two_sigma2 == 0.0) {
    bracket = e1 + e2;
  } else {
    double sigma = std::sqrt(two_sigma2 / 2.0);
    double den = 2.0 * sigma * std::sqrt(T2) * S;
    bracket = e1 * complex_erf((d.L * T2 + two_sigma2 * a) / den) + e2 * complex_erf((d.L * T2 - two_sigma2 * a) / den);
  }
  return -d.phase / (2.0 * std::sqrt(2.0 * M_PI) * d.L * S) * bracket;
}

cd wightman_gaussian(const GaussianPulse& p1, const GaussianPulse& p2) {
  PairData d = pair_data(p1, p2);
  double S = std::sqrt(p1.T * p1.T + p2.T * p2.T + p1.sigma * p1.sigma + p2.sigma * p2.sigma);
  cd c = d.dOmega - I * d.t0;
  double r2 = std::sqrt(2.0);
  if (d.L == 0.0) {
    // analytic coincidence limit of the sin(kL)/L kernel
    cd w = faddeeva(-I * c / (r2 * S));
    return d.phase / (2.0 * M_PI) * (1.0 / (S * S) + c / (S * S) * std::sqrt(2.0 * M_PI) / (2.0 * S) * w);
  }
  cd yp = (c + I * d.L) / (r2 * S), ym = (c - I * d.L) / (r2 * S);
  cd J = std::sqrt(2.0 * M_PI) / (4.0 * I * S) * (faddeeva(-I * yp) - faddeeva(-I * ym));
  return d.phase / (2.0 * M_PI * d.L) * J;
}

template <class R>
Cplx<R> factor_value(FactorKind kind, const Cplx<R>& x, const R& omega, const R& ell) {
  using std::exp;
  using std::sqrt;
  const R pi = real_pi<R>();
  const R sqpi = sqrt(pi);
  const Cplx<R> i(R(0), R(1));
  switch (kind) {
    case FactorKind::F_H:
    case FactorKind::F_Delta: {
      Cplx<R> s = x + Cplx<R>(R(0), 2 * omega);
      Cplx<R> f = exp(s * s / R(4)) / (4 * sqpi * ell);
      if (kind == FactorKind::F_Delta) f = -(f * R(exp(-ell * ell / 4)));
      return f;
    }
    case FactorKind::G_H: {
      // e^{-l^2/4 - l v/2} erfi((l+v)/2) = -i e^{-l^2/4 - l v/2} + i e^{v^2/4} w(-(l+v)/2)
      Cplx<R> zeta = (Cplx<R>(ell) + x) / R(2);
      Cplx<R> a = exp(Cplx<R>(-ell * ell / 4) - x * (ell / 2));
      Cplx<R> b = exp(x * x / R(4)) * faddeeva(-zeta);
      return times_i(b - a);
    }
    case FactorKind::G_Delta:
      return exp(x * (ell / 2));
    case FactorKind::F_W:
      return exp(x * x / R(4)) / (4 * pi);
    case FactorKind::G_W: {
      Cplx<R> z = Cplx<R>(omega) + times_i(x) / R(2);
      return exp(-(z * z)) - z * complex_erfc(z) * sqpi;
    }
  }
  throw InvalidArgument("unknown factor kind");
}

template <class R>
Cplx<R> generator_value(GeneratorKind kind, const Cplx<R>& a, const Cplx<R>& b, const R& omega, const R& ell) {
  using std::exp;
  using std::sqrt;
  Cplx<R> u = a + b, v = a - b;
  switch (kind) {
    case GeneratorKind::H:
    case GeneratorKind::Delta: {
      if (!(ell > 0)) throw DomainError("nonlocal generators need ell > 0");
      FactorKind fk = kind == GeneratorKind::H ? FactorKind::F_H : FactorKind::F_Delta;
      FactorKind gk = kind == GeneratorKind::H ? FactorKind::G_H : FactorKind::G_Delta;
      return factor_value<R>(fk, u, omega, ell) * (factor_value<R>(gk, v, omega, ell) + factor_value<R>(gk, -v, omega, ell));
    }
    case GeneratorKind::W_local:
      return factor_value<R>(FactorKind::F_W, u, omega, ell) * factor_value<R>(FactorKind::G_W, v, omega, ell);
    case GeneratorKind::W_nonlocal: {
      // Appendix-form W(f1, f2) with Omega_1 = -Omega - i alpha, Omega_2 = Omega - i beta, T = 1:
      // (sqrt(pi) / (8 pi i l)) e^{u^2/4} e^{-z^2} [w(iz + l/2) - w(iz - l/2)], z = omega + i v/2.
      if (!(ell > 0)) throw DomainError("nonlocal generators need ell > 0");
      const R pi = real_pi<R>();
      Cplx<R> z = Cplx<R>(omega) + times_i(v) / R(2);
      Cplx<R> iz = times_i(z);
      Cplx<R> diff = faddeeva(iz + Cplx<R>(ell / 2)) - faddeeva(iz - Cplx<R>(ell / 2));
      Cplx<R> pref = exp(u * u / R(4) - z * z) * (sqrt(pi) / (8 * pi * ell));
      return Cplx<R>(R(0), R(-1)) * pref * diff;
    }
  }
  throw InvalidArgument("unknown generator kind");
}

template Cplx<double> factor_value<double>(FactorKind, const Cplx<double>&, const double&, const double&);
template Cplx<mp_real> factor_value<mp_real>(FactorKind, const Cplx<mp_real>&, const mp_real&, const mp_real&);
template Cplx<double> generator_value<double>(GeneratorKind, const Cplx<double>&, const Cplx<double>&, const double&,
                                              const double&);
template Cplx<mp_real> generator_value<mp_real>(GeneratorKind, const Cplx<mp_real>&, const Cplx<mp_real>&,
                                                const mp_real&, const mp_real&);

cd generator(GeneratorKind kind, cd a, cd b, const DimensionlessConfig& cfg) {
  return generator_value<double>(kind, Cplx<double>(a), Cplx<double>(b), cfg.omega, cfg.ell).to_std();
}

}  // namespace hk
