#include "harvestkit/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "harvestkit/errors.hpp"

namespace hk {

CombinatorialTables::CombinatorialTables(int max_order) : max_order_(max_order) {
  if (max_order < 0) throw DomainError("max_order must be nonnegative");
  log_factorials_.resize(max_order + 1);
  log_factorials_[0] = 0.0;
  for (int n = 1; n <= max_order; ++n) log_factorials_[n] = std::lgamma(n + 1.0);
  int rows = std::min(max_order + 1, 60);
  pascal_.resize(rows);
  for (int n = 0; n < rows; ++n) {
    pascal_[n].assign(n + 1, 1);
    for (int k = 1; k < n; ++k) pascal_[n][k] = pascal_[n - 1][k - 1] + pascal_[n - 1][k];
  }
}

double CombinatorialTables::log_factorial(int n) const {
  if (n < 0 || n > max_order_) throw CapacityError("factorial order exceeds table capacity");
  return log_factorials_[n];
}

double CombinatorialTables::log_binomial(int n, int k) const {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

std::uint64_t CombinatorialTables::binomial(int n, int k) const {
  if (n < 0 || n >= static_cast<int>(pascal_.size()))
    throw CapacityError("exact binomials are tabulated below order 60");
  if (k < 0 || k > n) return 0;
  return pascal_[n][k];
}

const CombinatorialTables& combinatorial_tables() {
  static const CombinatorialTables tables(4096);
  return tables;
}

namespace {
constexpr int kMaxHermite = 4096;

template <class X>
X hermite_rec(int n, X x) {
  if (n < 0) throw DomainError("Hermite order must be nonnegative");
  if (n > kMaxHermite) throw CapacityError("Hermite order exceeds table capacity");
  X h0 = 1.0, h1 = 2.0 * x;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    X h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}
}  // namespace

cd hermite_poly(int n, cd x) { return hermite_rec<cd>(n, x); }
double hermite_poly(int n, double x) { return hermite_rec<double>(n, x); }

void hermite_functions(int N, double x, double* out) {
  if (N < 0) return;
  if (N > kMaxHermite) throw CapacityError("Hermite order exceeds table capacity");
  // Normalized recurrence carried with a separate log scale so that
  // e^{-x^2/2} never underflows before the polynomial growth compensates.
  const double big = 1e150;
  double log_scale = -0.5 * x * x;
  double p0 = 0.0;
  double p1 = std::pow(M_PI, -0.25);
  out[0] = p1 * std::exp(log_scale);
  for (int k = 0; k < N; ++k) {
    double p2 = std::sqrt(2.0 / (k + 1)) * x * p1 - std::sqrt(static_cast<double>(k) / (k + 1)) * p0;
    p0 = p1;
    p1 = p2;
    if (std::abs(p1) > big) {
      p0 /= big;
      p1 /= big;
      log_scale += std::log(big);
    }
    out[k + 1] = p1 * std::exp(log_scale);
  }
}

std::vector<double> hermite_functions(int N, double x) {
  std::vector<double> v(N + 1);
  hermite_functions(N, x, v.data());
  return v;
}

double hermite_function(int n, double t, double T) {
  if (!(T > 0)) throw DomainError("hermite_function requires T > 0");
  if (n < 0) throw DomainError("Hermite order must be nonnegative");
  std::vector<double> v(n + 1);
  hermite_functions(n, t / T, v.data());
  return v[n] / std::sqrt(T);
}

namespace {

mp_real round_here(const mp_real& x) {
  mp_real r;
  mpfr_set(r.backend().data(), x.backend().data(), MPFR_RNDN);
  return r;
}

Cplx<mp_real> round_here(const Cplx<mp_real>& z) { return {round_here(z.re), round_here(z.im)}; }

// The series for real-dominated arguments cancels by e^{|z|^2}, and erfc/w then
// cancel by another e^{|z|^2} against 1.
unsigned guard_bits(double abs2) { return static_cast<unsigned>(2 * abs2 * 1.4426950408889634 + 24); }

// erf(z) from its Maclaurin series, evaluated with enough guard bits to absorb
// the e^{|z|^2} growth of the partial sums; erfc/w derived inside the same scope.
enum class ErfKind { erf, erfc, erfi, w };

Cplx<mp_real> erf_family(const Cplx<mp_real>& zin, ErfKind kind) {
  unsigned p = mp_precision_bits();
  double ax2 = to_double(norm(zin));
  if (!std::isfinite(ax2)) throw NumericalError("non-finite argument to complex error function");
  Cplx<mp_real> result;
  {
    PrecisionScope scope(p + guard_bits(ax2));
    Cplx<mp_real> z = zin;
    z.re = round_here(zin.re);
    z.im = round_here(zin.im);
    if (kind == ErfKind::erfi) z = times_i(z);
    if (kind == ErfKind::w) z = Cplx<mp_real>(z.im, -z.re);  // -iz
    Cplx<mp_real> mz2 = -(z * z);
    Cplx<mp_real> term = z;
    Cplx<mp_real> sum = z;
    mp_real eps = ldexp(mp_real(1), -static_cast<int>(p + guard_bits(ax2)));
    for (long k = 1;; ++k) {
      term *= mz2;
      term /= mp_real(k);
      Cplx<mp_real> t = term / mp_real(2 * k + 1);
      sum += t;
      if (k > ax2 && norm(t) <= eps * eps * norm(sum)) break;
      if (k > 1000000) throw ConvergenceError("erf series did not converge");
    }
    Cplx<mp_real> erf = sum * (2 / boost::multiprecision::sqrt(real_pi<mp_real>()));
    switch (kind) {
      case ErfKind::erf:
        result = erf;
        break;
      case ErfKind::erfc:
        result = Cplx<mp_real>(mp_real(1)) - erf;
        break;
      case ErfKind::erfi:
        result = Cplx<mp_real>(erf.im, -erf.re);  // -i erf(iz)
        break;
      case ErfKind::w: {
        Cplx<mp_real> zz(zin.re, zin.im);
        result = exp(-(zz * zz)) * (Cplx<mp_real>(mp_real(1)) - erf);
        break;
      }
    }
  }
  return round_here(result);
}

template <class F>
cd via_mp(cd z, F f) {
  PrecisionScope scope(80);
  Cplx<mp_real> zz(mp_real(z.real()), mp_real(z.imag()));
  return f(zz).to_std();
}

constexpr double kSeriesRadius = 6.0;

// Laplace continued fraction for w(z), Im z >= 0, |z| large.
cd faddeeva_cf(cd z) {
  const double tiny = 1e-300;
  cd f = z;
  cd C = f, D = 0.0;
  for (int k = 1; k < 200000; ++k) {
    double a = -0.5 * k;
    D = z + a * D;
    if (D == 0.0) D = tiny;
    C = z + a / C;
    if (C == 0.0) C = tiny;
    D = 1.0 / D;
    cd delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) return cd(0.0, 1.0 / std::sqrt(M_PI)) / f;
  }
  throw ConvergenceError("Faddeeva continued fraction did not converge");
}

}  // namespace

Cplx<mp_real> faddeeva(const Cplx<mp_real>& z) { return erf_family(z, ErfKind::w); }
Cplx<mp_real> complex_erf(const Cplx<mp_real>& z) { return erf_family(z, ErfKind::erf); }
Cplx<mp_real> complex_erfc(const Cplx<mp_real>& z) { return erf_family(z, ErfKind::erfc); }
Cplx<mp_real> complex_erfi(const Cplx<mp_real>& z) { return erf_family(z, ErfKind::erfi); }

cd faddeeva(cd z) {
  if (std::abs(z) < kSeriesRadius)
    return via_mp(z, [](const Cplx<mp_real>& x) { return erf_family(x, ErfKind::w); });
  if (z.imag() >= 0) return faddeeva_cf(z);
  return 2.0 * std::exp(-z * z) - faddeeva_cf(-z);
}

cd complex_erf(cd z) {
  if (std::abs(z) < kSeriesRadius)
    return via_mp(z, [](const Cplx<mp_real>& x) { return erf_family(x, ErfKind::erf); });
  // erf(z) = 1 - e^{-z^2} w(iz); for Re z < 0 use oddness to keep w in its stable half-plane.
  if (z.real() < 0) return -complex_erf(-z);
  return 1.0 - std::exp(-z * z) * faddeeva(cd(-z.imag(), z.real()));
}

cd complex_erfc(cd z) {
  if (std::abs(z) < kSeriesRadius)
    return via_mp(z, [](const Cplx<mp_real>& x) { return erf_family(x, ErfKind::erfc); });
  if (z.real() >= 0) return std::exp(-z * z) * faddeeva(cd(-z.imag(), z.real()));
  return 2.0 - complex_erfc(-z);
}

cd complex_erfi(cd z) {
  cd e = complex_erf(cd(-z.imag(), z.real()));
  return cd(e.imag(), -e.real());
}

}  // namespace hk

#include <Eigen/Eigenvalues>

namespace hk {

GaussHermiteRule gauss_hermite(int K) {
  if (K < 1) throw DomainError("Gauss-Hermite rule needs at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd sub(K > 1 ? K - 1 : 0);
  for (int k = 1; k < K; ++k) sub[k - 1] = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigensolve failed");
  GaussHermiteRule rule;
  rule.nodes.resize(K);
  rule.scaled_weights.resize(K);
  std::vector<double> psi(K + 1);
  for (int i = 0; i < K; ++i) {
    double x = es.eigenvalues()[i];
    for (int it = 0; it < 4; ++it) {
      hermite_functions(K, x, psi.data());
      double d = std::sqrt(2.0 * K) * psi[K - 1] - x * psi[K];
      if (d == 0.0) break;
      double step = psi[K] / d;
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    hermite_functions(K, x, psi.data());
    rule.nodes[i] = x;
    rule.scaled_weights[i] = 1.0 / (K * psi[K - 1] * psi[K - 1]);
  }
  return rule;
}

}  // namespace hk
