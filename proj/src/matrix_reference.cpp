#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "harvestkit/errors.hpp"
#include "harvestkit/matrices.hpp"
#include "harvestkit/specfun.hpp"
#include "harvestkit/taylor.hpp"

namespace hk {

namespace {

using C = Cplx<mp_real>;

constexpr double kLog10_2 = 0.30102999566398120;

double lg2(const mp_real& x) {
  if (x == 0) return -1e300;
  long e;
  double m = mpfr_get_d_2exp(&e, x.backend().data(), MPFR_RNDN);
  return std::log2(std::fabs(m)) + static_cast<double>(e);
}

int kind_index(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::H: return 0;
    case GeneratorKind::Delta: return 1;
    case GeneratorKind::W_local: return 2;
    default: throw InvalidArgument("literal sums cover H, Delta and W_local");
  }
}

}  // namespace

struct LeibnizEvaluator::Impl {
  DimensionlessConfig cfg;
  int max_n = 0;
  unsigned bits = 0;
  bool auto_bits = false;
  std::array<std::vector<C>, 3> f, g;  // F and G Taylor coefficients to order 2 max_n
  std::vector<std::vector<mp_real>> binom;
  std::vector<mp_real> inv_fact;
  // memoised inner sums T_IJ and their absolute sums
  std::array<std::map<std::pair<int, int>, std::pair<C, mp_real>>, 3> memo;
  double last_cancel = 0;
  std::array<double, 3> lg_ref{};  // log2 |P_00| per kind, scale for the relative floor

  void init() {
    PrecisionScope ps(bits);
    const mp_real w(cfg.omega), l(cfg.ell);
    const int order = 2 * max_n;
    const FactorKind fk[3] = {FactorKind::F_H, FactorKind::F_Delta, FactorKind::F_W};
    const FactorKind gk[3] = {FactorKind::G_H, FactorKind::G_Delta, FactorKind::G_W};
    for (int k = 0; k < 3; ++k) {
      f[k] = factor_coeffs_mp(fk[k], order, w, l);
      g[k] = factor_coeffs_mp(gk[k], order, w, l);
      memo[k].clear();
    }
    binom.assign(order + 1, {});
    for (int n = 0; n <= order; ++n) {
      binom[n].assign(n + 1, mp_real(1));
      for (int k = 1; k < n; ++k) binom[n][k] = binom[n - 1][k - 1] + binom[n - 1][k];
    }
    inv_fact.assign(max_n + 1, mp_real(1));
    for (int n = 1; n <= max_n; ++n) inv_fact[n] = inv_fact[n - 1] / n;
    for (int k = 0; k < 3; ++k) lg_ref[k] = std::log2(std::abs(evaluate(k, 0, 0).first));
  }

  // T_IJ = sum_{i,j} C(I+J-i-j, I-i) C(i+j, i) (-1)^j par(i+j) f_{I+J-i-j} g_{i+j}
  const std::pair<C, mp_real>& inner(int k, int I, int J) {
    auto key = std::make_pair(I, J);
    auto it = memo[k].find(key);
    if (it != memo[k].end()) return it->second;
    C sum;
    mp_real abs_sum = 0;
    for (int i = 0; i <= I; ++i)
      for (int j = 0; j <= J; ++j) {
        int p = i + j;
        if (k != 2 && (p & 1)) continue;
        mp_real c = binom[I + J - p][I - i] * binom[p][i];
        if (k != 2) c *= 2;
        if (j & 1) c = -c;
        C term = f[k][I + J - p] * g[k][p] * c;
        sum += term;
        abs_sum += abs(term);
      }
    return memo[k].emplace(key, std::make_pair(sum, abs_sum)).first->second;
  }

  // returns value and log2 cancellation
  std::pair<cd, double> evaluate(int k, int n, int m) {
    PrecisionScope ps(bits);
    C sum;
    mp_real abs_sum = 0;
    for (int r = 0; 2 * r <= n; ++r)
      for (int s = 0; 2 * s <= m; ++s) {
        int I = n - 2 * r, J = m - 2 * s;
        mp_real c = inv_fact[r] * inv_fact[s];
        c = ldexp(c, I + J);
        if ((r + s) & 1) c = -c;
        const auto& t = inner(k, I, J);
        sum += t.first * c;
        abs_sum += t.second * abs(c);
      }
    // pi^{-1/2} sqrt(n! m! / 2^{n+m}) / T
    using boost::multiprecision::sqrt;
    mp_real pref = sqrt(1 / (inv_fact[n] * inv_fact[m])) / sqrt(real_pi<mp_real>());
    pref = ldexp(pref, -(n + m)) * sqrt(ldexp(mp_real(1), n + m)) / cfg.T;
    C v = sum * pref;
    double lg_floor = lg_ref[k] + std::log2(1e-20);
    double cancel = lg2(abs_sum * pref) - std::max(lg2(abs(v)), lg_floor);
    return {v.to_std(), std::max(0.0, cancel)};
  }
};

LeibnizEvaluator::LeibnizEvaluator(const DimensionlessConfig& cfg, int max_n, unsigned bits) : impl_(new Impl) {
  if (max_n < 0) throw InvalidArgument("max_n must be >= 0");
  impl_->cfg = cfg;
  impl_->max_n = max_n;
  impl_->auto_bits = bits == 0;
  impl_->bits = bits ? bits : 96 + 3 * static_cast<unsigned>(max_n);
  impl_->init();
}

LeibnizEvaluator::~LeibnizEvaluator() = default;

int LeibnizEvaluator::max_n() const { return impl_->max_n; }
unsigned LeibnizEvaluator::bits() const { return impl_->bits; }
double LeibnizEvaluator::last_cancellation_digits() const { return impl_->last_cancel * kLog10_2; }

cd LeibnizEvaluator::element(GeneratorKind kind, int n, int m) {
  if (n < 0 || m < 0) throw InvalidArgument("indices must be >= 0");
  if (n > impl_->max_n || m > impl_->max_n) throw PreconditionError("tables built to insufficient order");
  int k = kind_index(kind);
  for (;;) {
    auto [v, cancel] = impl_->evaluate(k, n, m);
    impl_->last_cancel = cancel;
    double need = cancel + 40 + std::log2(n + m + 2.0) * 2;
    if (!impl_->auto_bits || need <= impl_->bits) return v;
    if (impl_->bits >= 16384) throw NumericalError("literal sum precision exhausted");
    impl_->bits = std::max(impl_->bits + impl_->bits / 4, static_cast<unsigned>(need) + 32);
    impl_->init();
  }
}

cd element(GeneratorKind kind, int n, int m, const DimensionlessConfig& cfg) {
  LeibnizEvaluator ev(cfg, std::max(n, m));
  return ev.element(kind, n, m);
}

// ---------------------------------------------------------------------------
// Contour oracle. H_n(d/da) P |_{a=0} = n! [z^n] e^{-z^2} P(2z), so
//   P_nm = pi^{-1/2} sqrt(n! m! / 2^{n+m}) [z^n w^m] e^{-z^2-w^2} P(2z, 2w) / T,
// coefficients from a trapezoid rule on |z| = |w| = 1.

OracleResult oracle_matrix(GeneratorKind kind, int nmax, const DimensionlessConfig& cfg, double rel_tol,
                           double floor_rel, unsigned max_bits) {
  using boost::multiprecision::cos;
  using boost::multiprecision::exp;
  using boost::multiprecision::sin;
  using boost::multiprecision::sqrt;
  if (nmax < 0) throw InvalidArgument("nmax must be >= 0");
  if (nmax > 200) throw CapacityError("oracle limited to n, m <= 200");
  if (!(cfg.ell > 0) || !(cfg.T > 0)) throw DomainError("ell and T must be positive");
  const int M = std::max(64, 2 * nmax + 64);
  const auto& ct = combinatorial_tables();
  double lg_pref_max = (ct.log_factorial(nmax) / std::log(2.0)) - nmax;
  // bound: 2^{-p} max|Q| M 2^8 pref_max <= tol floor_rel |P_00|
  double lg_q = -1e300;
  for (int j = 0; j < M; j += 3)
    for (int k = 0; k < M; k += 3) {
      cd z = std::polar(1.0, 2 * M_PI * j / M), v = std::polar(1.0, 2 * M_PI * k / M);
      lg_q = std::max(lg_q, std::log2(std::abs(std::exp(-z * z - v * v) * generator(kind, 2.0 * z, 2.0 * v, cfg))));
    }
  double lg_p00 = std::log2(std::abs(generator(kind, 0.0, 0.0, cfg)) / std::sqrt(M_PI) / cfg.T);
  if (!std::isfinite(lg_q) || !std::isfinite(lg_p00))
    lg_q = 96 + 2 * nmax + 0.1 * cfg.ell * cfg.ell, lg_p00 = 0;
  double est = lg_q + 4 + std::log2(double(M)) + 8 + lg_pref_max - std::log2(rel_tol) - lg_p00 - std::log2(floor_rel);
  unsigned bits = static_cast<unsigned>(std::max(64.0, est));
  if (const char* e = std::getenv("HK_ORACLE_BITS")) bits = std::atoi(e);
  for (;;) {
    if (bits > max_bits) throw NumericalError("oracle precision exhausted");
    PrecisionScope ps(bits);
    const mp_real pi = real_pi<mp_real>();
    const mp_real w(cfg.omega), l(cfg.ell);
    std::vector<C> zs(M), tw(M);
    for (int j = 0; j < M; ++j) {
      mp_real th = 2 * pi * j / M;
      zs[j] = C(cos(th), sin(th));
      tw[j] = conj(zs[j]);  // e^{-i theta_j}
    }
    // samples Q_jl. Factors with real Taylor coefficients give conjugate pairs:
    // H/Delta Q(-j,-k) = conj Q(j,k); W_local Q(-k,-j) = conj Q(j,k).
    auto neg = [M](int j) { return (M - j) % M; };
    std::vector<C> Q(static_cast<std::size_t>(M) * M);
    std::vector<char> done(static_cast<std::size_t>(M) * M, 0);
    if (kind == GeneratorKind::H || kind == GeneratorKind::Delta) {
      FactorKind fk = kind == GeneratorKind::H ? FactorKind::F_H : FactorKind::F_Delta;
      FactorKind gk = kind == GeneratorKind::H ? FactorKind::G_H : FactorKind::G_Delta;
      std::vector<C> Gv(static_cast<std::size_t>(M) * M);
      for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) {
          if (done[j * M + k]) continue;
          Gv[j * M + k] = factor_value<mp_real>(gk, (zs[j] - zs[k]) * mp_real(2), w, l);
          Gv[neg(j) * M + neg(k)] = conj(Gv[j * M + k]);
          done[j * M + k] = done[neg(j) * M + neg(k)] = 1;
        }
      for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) {
          C e = exp(-(zs[j] * zs[j] + zs[k] * zs[k]));
          C F = factor_value<mp_real>(fk, (zs[j] + zs[k]) * mp_real(2), w, l);
          Q[j * M + k] = e * F * (Gv[j * M + k] + Gv[k * M + j]);
        }
    } else {
      const bool sym = kind == GeneratorKind::W_local;
      for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) {
          if (done[j * M + k]) continue;
          C e = exp(-(zs[j] * zs[j] + zs[k] * zs[k]));
          Q[j * M + k] = e * generator_value<mp_real>(kind, zs[j] * mp_real(2), zs[k] * mp_real(2), w, l);
          done[j * M + k] = 1;
          if (sym) {
            Q[neg(k) * M + neg(j)] = conj(Q[j * M + k]);
            done[neg(k) * M + neg(j)] = 1;
          }
        }
    }
    double lg_qmax = -1e300;
    for (const auto& q : Q) lg_qmax = std::max(lg_qmax, lg2(abs(q)));
    // B_j(m) = sum_l Q_jl e^{-i m theta_l}
    std::vector<C> B(static_cast<std::size_t>(M) * (nmax + 1));
    for (int j = 0; j < M; ++j)
      for (int m = 0; m <= nmax; ++m) {
        C acc;
        for (int k = 0; k < M; ++k) acc += Q[j * M + k] * tw[(static_cast<long>(m) * k) % M];
        B[j * (nmax + 1) + m] = acc;
      }
    Eigen::MatrixXcd P(nmax + 1, nmax + 1);
    Eigen::MatrixXd lgP(nmax + 1, nmax + 1), lgpref(nmax + 1, nmax + 1);
    const mp_real inv = mp_real(1) / (mp_real(M) * M);
    std::vector<mp_real> sqf(nmax + 1);
    for (int n = 0; n <= nmax; ++n) {
      mp_real fct = 1;
      for (int i = 2; i <= n; ++i) fct *= i;
      sqf[n] = sqrt(ldexp(fct, -n));
    }
    const mp_real isp = 1 / sqrt(pi);
    double lgmax = -1e300;
    for (int n = 0; n <= nmax; ++n)
      for (int m = 0; m <= nmax; ++m) {
        C acc;
        for (int j = 0; j < M; ++j) acc += B[j * (nmax + 1) + m] * tw[(static_cast<long>(n) * j) % M];
        mp_real pref = sqf[n] * sqf[m] * isp / cfg.T;
        C v = acc * (inv * pref);
        P(n, m) = v.to_std();
        lgP(n, m) = lg2(abs(v));
        lgpref(n, m) = lg2(pref);
        lgmax = std::max(lgmax, lgP(n, m));
      }
    // round-off bound ~ 2^{-p} max|Q| M pref; compare with rel_tol * max(|P|, floor)
    double lg_tol = std::log2(rel_tol);
    double lg_floor = lgmax + std::log2(floor_rel);
    double worst = -1e300;
    for (int n = 0; n <= nmax; ++n)
      for (int m = 0; m <= nmax; ++m) {
        double err = -static_cast<double>(bits) + lg_qmax + std::log2(double(M)) + 8 + lgpref(n, m);
        worst = std::max(worst, err - lg_tol - std::max(lgP(n, m), lg_floor));
      }
    if (std::getenv("HK_ORACLE_DEBUG")) std::fprintf(stderr, "oracle bits=%u worst=%g\n", bits, worst);
    if (worst <= 0) return {P, bits};
    bits += static_cast<unsigned>(std::ceil(worst)) + 32;
  }
}

cd element_oracle(GeneratorKind kind, int n, int m, const DimensionlessConfig& cfg) {
  if (n < 0 || m < 0) throw InvalidArgument("indices must be >= 0");
  if (n + m > 240) throw CapacityError("oracle order limit n + m <= 240");
  return oracle_matrix(kind, std::max(n, m), cfg).P(n, m);
}

Eigen::MatrixXcd nonlocal_wightman(const DimensionlessConfig& cfg, int N) {
  return oracle_matrix(GeneratorKind::W_nonlocal, N, cfg).P;
}

}  // namespace hk
