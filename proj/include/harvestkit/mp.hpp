#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <complex>
#include <mutex>
#include <type_traits>

namespace hk {

using mp_real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                              boost::multiprecision::et_off>;

// Working precision of newly created mp_real values, in bits.
unsigned mp_precision_bits();

// Sets the mp_real working precision for the lifetime of the scope. The default
// precision is process-global in MPFR-backed Boost numbers, so scopes also hold a
// process-wide recursive lock; nested scopes on one thread are fine.
class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  std::unique_lock<std::recursive_mutex> lock_;
  unsigned saved_;
};

template <class R>
inline constexpr bool is_mp_v = std::is_same_v<R, mp_real>;

template <class R>
R real_pi() {
  if constexpr (is_mp_v<R>) {
    mp_real r;
    mpfr_const_pi(r.backend().data(), MPFR_RNDN);
    return r;
  } else {
    return R(3.14159265358979323846264338327950288L);
  }
}

template <class R>
double to_double(const R& x) {
  if constexpr (is_mp_v<R>)
    return x.template convert_to<double>();
  else
    return static_cast<double>(x);
}

// Minimal complex number over an arbitrary real scalar (double or mp_real).
template <class R>
struct Cplx {
  R re, im;

  Cplx() : re(0), im(0) {}
  Cplx(const R& r) : re(r), im(0) {}
  Cplx(const R& r, const R& i) : re(r), im(i) {}
  Cplx(double r)
    requires(!std::is_same_v<R, double>)
      : re(r), im(0) {}
  Cplx(double r, double i)
    requires(!std::is_same_v<R, double>)
      : re(r), im(i) {}
  Cplx(int r) : re(r), im(0) {}
  explicit Cplx(std::complex<double> z) : re(z.real()), im(z.imag()) {}

  Cplx& operator+=(const Cplx& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  Cplx& operator-=(const Cplx& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  Cplx& operator*=(const Cplx& o) {
    R r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = r;
    return *this;
  }
  Cplx& operator*=(const R& s) {
    re *= s;
    im *= s;
    return *this;
  }
  Cplx& operator/=(const R& s) {
    re /= s;
    im /= s;
    return *this;
  }
  Cplx& operator/=(const Cplx& o) {
    R d = o.re * o.re + o.im * o.im;
    R r = (re * o.re + im * o.im) / d;
    im = (im * o.re - re * o.im) / d;
    re = r;
    return *this;
  }

  std::complex<double> to_std() const { return {to_double(re), to_double(im)}; }
};

template <class R>
Cplx<R> operator+(Cplx<R> a, const Cplx<R>& b) { return a += b; }
template <class R>
Cplx<R> operator-(Cplx<R> a, const Cplx<R>& b) { return a -= b; }
template <class R>
Cplx<R> operator*(Cplx<R> a, const Cplx<R>& b) { return a *= b; }
template <class R>
Cplx<R> operator/(Cplx<R> a, const Cplx<R>& b) { return a /= b; }
template <class R>
Cplx<R> operator*(Cplx<R> a, const R& s) { return a *= s; }
template <class R>
Cplx<R> operator*(const R& s, Cplx<R> a) { return a *= s; }
template <class R>
Cplx<R> operator/(Cplx<R> a, const R& s) { return a /= s; }
template <class R>
Cplx<R> operator-(const Cplx<R>& a) { return {-a.re, -a.im}; }

template <class R>
Cplx<R> conj(const Cplx<R>& a) { return {a.re, -a.im}; }
template <class R>
R norm(const Cplx<R>& a) { return a.re * a.re + a.im * a.im; }
template <class R>
R abs(const Cplx<R>& a) {
  using std::hypot;
  using std::sqrt;
  if constexpr (is_mp_v<R>)
    return sqrt(norm(a));
  else
    return hypot(a.re, a.im);
}
template <class R>
Cplx<R> exp(const Cplx<R>& a) {
  using std::cos;
  using std::exp;
  using std::sin;
  R m = exp(a.re);
  return {m * cos(a.im), m * sin(a.im)};
}
template <class R>
Cplx<R> times_i(const Cplx<R>& a) { return {-a.im, a.re}; }

template <class R>
Cplx<R> from_std(std::complex<double> z) { return Cplx<R>(R(z.real()), R(z.imag())); }

}  // namespace hk
