#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "harvestkit/mp.hpp"

namespace hk {

using cd = std::complex<double>;

class CombinatorialTables {
 public:
  explicit CombinatorialTables(int max_order);

  int max_order() const { return max_order_; }
  double log_factorial(int n) const;
  double log_binomial(int n, int k) const;
  // Exact binomial coefficient, available for n < 60.
  std::uint64_t binomial(int n, int k) const;

 private:
  int max_order_;
  std::vector<double> log_factorials_;
  std::vector<std::vector<std::uint64_t>> pascal_;
};

// Shared tables with max_order 4096, built once on first use.
const CombinatorialTables& combinatorial_tables();

// Physicists' Hermite polynomial H_n(x).
cd hermite_poly(int n, cd x);
double hermite_poly(int n, double x);

// Orthonormal Hermite function h_n(t, T) = pi^{-1/4} (2^n n! T)^{-1/2} H_n(t/T) e^{-t^2/2T^2}.
double hermite_function(int n, double t, double T);

// psi_k(x) = h_k(x, 1) for k = 0..N written to out[0..N]; stable for large N and |x|.
void hermite_functions(int N, double x, double* out);
std::vector<double> hermite_functions(int N, double x);

// w(z) = e^{-z^2} erfc(-iz).
cd faddeeva(cd z);
cd complex_erf(cd z);
cd complex_erfc(cd z);
cd complex_erfi(cd z);

// Multiprecision versions at the current working precision.
Cplx<mp_real> faddeeva(const Cplx<mp_real>& z);
Cplx<mp_real> complex_erf(const Cplx<mp_real>& z);
Cplx<mp_real> complex_erfc(const Cplx<mp_real>& z);
Cplx<mp_real> complex_erfi(const Cplx<mp_real>& z);

inline Cplx<double> faddeeva(const Cplx<double>& z) { return Cplx<double>(faddeeva(z.to_std())); }
inline Cplx<double> complex_erf(const Cplx<double>& z) { return Cplx<double>(complex_erf(z.to_std())); }
inline Cplx<double> complex_erfc(const Cplx<double>& z) { return Cplx<double>(complex_erfc(z.to_std())); }
inline Cplx<double> complex_erfi(const Cplx<double>& z) { return Cplx<double>(complex_erfi(z.to_std())); }

}  // namespace hk

namespace hk {

// K-point Gauss-Hermite rule for the weight e^{-x^2}. Weights are returned
// pre-multiplied by e^{x_i^2}, so sum_i w_i f(x_i) approximates the plain integral
// of f when f already carries its Gaussian decay (e.g. products of Hermite functions).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> scaled_weights;
};

GaussHermiteRule gauss_hermite(int K);

}  // namespace hk
