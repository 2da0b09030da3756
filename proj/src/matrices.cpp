#include "harvestkit/matrices.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "harvestkit/errors.hpp"
#include "harvestkit/specfun.hpp"

namespace hk {

namespace {

using C = Cplx<mp_real>;

// Flat array of raw MPFR values with a fixed precision; the inner contraction
// uses the C API directly to avoid temporaries.
class MpVec {
 public:
  MpVec() = default;
  MpVec(std::size_t n, mpfr_prec_t p) : v_(n) {
    for (auto& x : v_) {
      mpfr_init2(&x, p);
      mpfr_set_zero(&x, 1);
    }
  }
  MpVec(MpVec&& o) noexcept : v_(std::move(o.v_)) {}
  MpVec& operator=(MpVec&& o) noexcept {
    clear();
    v_ = std::move(o.v_);
    return *this;
  }
  ~MpVec() { clear(); }
  mpfr_ptr operator[](std::size_t i) { return &v_[i]; }
  mpfr_srcptr operator[](std::size_t i) const { return &v_[i]; }
  std::size_t size() const { return v_.size(); }

 private:
  void clear() {
    for (auto& x : v_) mpfr_clear(&x);
    v_.clear();
  }
  std::vector<__mpfr_struct> v_;
};

constexpr double kLog2e = 1.4426950408889634;
constexpr int kKinds = 3;  // H, Delta, W_local
constexpr double kTargetBits = 40;  // relative accuracy asked of every accepted entry
constexpr double kFloorRel = 1e-20;

GeneratorKind kind_of(int k) { return k == 0 ? GeneratorKind::H : k == 1 ? GeneratorKind::Delta : GeneratorKind::W_local; }

// Taylor coefficients of e^{-U^2/2} F(2U) and e^{-V^2/2} K(2V), K = G(v) + G(-v) for
// H/Delta and K = G_W for W. Computed from the ODEs these products satisfy:
//   F_H:  f' = (U + 2i omega) f
//   K_H:  y' = -(V + ell) y + (2/sqrt(pi)) e^{V^2/2},  y = e^{-V^2/2} G_H(2V)
//   K_D:  y = e^{-V^2/2 + ell V}
//   K_W:  y = E - sqrt(pi)(omega + iV) psi,  E = e^{-V^2/2} e^{-(omega+iV)^2},
//         psi = e^{-V^2/2} erfc(omega + iV),  psi' = -V psi - (2i/sqrt(pi)) E
void fold_series(GeneratorKind kind, int order, const mp_real& omega, const mp_real& ell, std::vector<C>& f,
                 std::vector<C>& k) {
  using boost::multiprecision::erfc;
  using boost::multiprecision::exp;
  using boost::multiprecision::sqrt;
  const mp_real pi = real_pi<mp_real>();
  const mp_real sqpi = sqrt(pi);
  f.assign(order + 1, C());
  k.assign(order + 1, C());
  std::vector<mp_real> halfgauss(order + 1, mp_real(0));  // [e^{x^2/2}]_k
  {
    mp_real v = 1;
    for (int j = 0; 2 * j <= order; ++j) {
      halfgauss[2 * j] = v;
      v /= mp_real(2 * (j + 1));
    }
  }
  if (kind == GeneratorKind::W_local) {
    for (int j = 0; j <= order; ++j) f[j] = C(halfgauss[j] / (4 * pi));
    std::vector<C> E(order + 1), psi(order + 1);
    E[0] = C(exp(-omega * omega));
    psi[0] = C(erfc(omega));
    C m2iw(mp_real(0), -2 * omega);
    C m2isp(mp_real(0), -2 / sqpi);
    for (int j = 0; j < order; ++j) {
      C e = m2iw * E[j];
      C p = m2isp * E[j];
      if (j > 0) {
        e += E[j - 1];
        p -= psi[j - 1];
      }
      E[j + 1] = e / mp_real(j + 1);
      psi[j + 1] = p / mp_real(j + 1);
    }
    for (int j = 0; j <= order; ++j) {
      C y = psi[j] * omega;
      if (j > 0) y += times_i(psi[j - 1]);
      k[j] = E[j] - y * sqpi;
    }
    return;
  }
  f[0] = C(exp(-omega * omega) / (4 * sqpi * ell));
  if (kind == GeneratorKind::Delta) f[0].re *= -exp(-ell * ell / 4);
  C tiw(mp_real(0), 2 * omega);
  for (int j = 0; j < order; ++j) {
    C next = tiw * f[j];
    if (j > 0) next += f[j - 1];
    f[j + 1] = next / mp_real(j + 1);
  }
  std::vector<mp_real> y(order + 1);
  if (kind == GeneratorKind::H) {
    y[0] = factor_value<mp_real>(FactorKind::G_H, C(0), omega, ell).re;
    const mp_real c = 2 / sqpi;
    for (int j = 0; j < order; ++j) {
      mp_real next = -ell * y[j] + c * halfgauss[j];
      if (j > 0) next -= y[j - 1];
      y[j + 1] = next / (j + 1);
    }
  } else {
    y[0] = 1;
    for (int j = 0; j < order; ++j) {
      mp_real next = ell * y[j];
      if (j > 0) next -= y[j - 1];
      y[j + 1] = next / (j + 1);
    }
  }
  for (int j = 0; j <= order; j += 2) k[j] = C(2 * y[j]);
}

unsigned fold_guard_bits(GeneratorKind kind, int order, double ell) {
  double g = 64 + order;
  if (kind == GeneratorKind::H) g += kLog2e * ell * ell / 2;
  return static_cast<unsigned>(g);
}

struct FoldTables {
  int order = 0;
  mpfr_prec_t prec = 53;
  std::array<bool, kKinds> active{true, true, true};
  std::array<MpVec, kKinds> fre, fim, kre, kim;
  MpVec sqf;  // sqrt(n! / 2^n) / sqrt(pi)^{1/2}
};

void build_tables(FoldTables& t, int order, int nmax, const DimensionlessConfig& cfg, mpfr_prec_t prec) {
  t.order = order;
  t.prec = prec;
  for (int kk = 0; kk < kKinds; ++kk) {
    if (!t.active[kk]) continue;
    GeneratorKind kind = kind_of(kk);
    std::vector<C> f, k;
    {
      PrecisionScope ps(static_cast<unsigned>(prec) + fold_guard_bits(kind, order, cfg.ell));
      fold_series(kind, order, mp_real(cfg.omega), mp_real(cfg.ell), f, k);
    }
    t.fre[kk] = MpVec(order + 1, prec);
    t.fim[kk] = MpVec(order + 1, prec);
    t.kre[kk] = MpVec(order + 1, prec);
    t.kim[kk] = MpVec(order + 1, prec);
    for (int j = 0; j <= order; ++j) {
      mpfr_set(t.fre[kk][j], f[j].re.backend().data(), MPFR_RNDN);
      mpfr_set(t.fim[kk][j], f[j].im.backend().data(), MPFR_RNDN);
      mpfr_set(t.kre[kk][j], k[j].re.backend().data(), MPFR_RNDN);
      mpfr_set(t.kim[kk][j], k[j].im.backend().data(), MPFR_RNDN);
    }
  }
  // per-index half of the prefactor: sqrt(n!/2^n) * pi^{-1/4}
  t.sqf = MpVec(nmax + 1, prec + 32);
  MpVec tmp(1, prec + 32);
  mpfr_const_pi(tmp[0], MPFR_RNDN);
  mpfr_rec_sqrt(tmp[0], tmp[0], MPFR_RNDN);
  mpfr_sqrt(tmp[0], tmp[0], MPFR_RNDN);  // pi^{-1/4}
  for (int n = 0; n <= nmax; ++n) {
    mpfr_fac_ui(t.sqf[n], n, MPFR_RNDN);
    mpfr_div_2si(t.sqf[n], t.sqf[n], n, MPFR_RNDN);
    mpfr_sqrt(t.sqf[n], t.sqf[n], MPFR_RNDN);
    mpfr_mul(t.sqf[n], t.sqf[n], tmp[0], MPFR_RNDN);
  }
}

// Output of one contraction: entry values and magnitudes (log2) for the precision check.
struct EntryOut {
  std::array<cd, kKinds> value{};
  std::array<double, kKinds> lg_sum{};  // log2(sum |terms| * prefactor)
  std::array<double, kKinds> lg_abs{};  // log2 |P|
};

double lg2_ld(long double x) { return x > 0 ? static_cast<double>(std::log2(x)) : -1e300; }

// Contract degree d = n + m for m in [mlo, mhi]:
//   q_nm = sum_s A(m, s) f_{d-s} k_s,  A(m, s) = [x^m] (1+x)^{d-s} (1-x)^s
// A is generated downward from m = d with
//   a_{m-1} = ((d - 2s) a_m - (m+1) a_{m+1}) / (d - m + 1)
// in exact integer arithmetic (precision >= d + 40 bits).
void contract_degree(const FoldTables& t, int d, int mlo, int mhi, double T, std::vector<EntryOut>& out) {
  const mpfr_prec_t prec = t.prec;
  const mpfr_prec_t pk = std::max<mpfr_prec_t>(prec, d + 40);
  const int nm = mhi - mlo + 1;
  MpVec tre(kKinds * (d + 1), prec), tim(kKinds * (d + 1), prec);
  std::vector<long double> tabs(kKinds * (d + 1), 0.0L);
  MpVec s1(2, prec);
  for (int kk = 0; kk < kKinds; ++kk) {
    if (!t.active[kk]) continue;
    for (int s = 0; s <= d; ++s) {
      if (kk != 2 && (s & 1)) continue;
      mpfr_srcptr fr = t.fre[kk][d - s], fi = t.fim[kk][d - s], kr = t.kre[kk][s], ki = t.kim[kk][s];
      std::size_t idx = kk * (d + 1) + s;
      mpfr_fmms(tre[idx], fr, kr, fi, ki, MPFR_RNDN);
      mpfr_fmma(tim[idx], fr, ki, fi, kr, MPFR_RNDN);
      long double a = mpfr_get_ld(tre[idx], MPFR_RNDN), b = mpfr_get_ld(tim[idx], MPFR_RNDN);
      tabs[idx] = std::hypot(a, b);
    }
  }
  MpVec qre(kKinds * nm, prec), qim(kKinds * nm, prec);
  std::vector<long double> qsum(kKinds * nm, 0.0L);
  MpVec a(3, pk);  // a_{m+1}, a_m, scratch
  for (int s = 0; s <= d; ++s) {
    mpfr_set_zero(a[0], 1);
    mpfr_set_si(a[1], (s & 1) ? -1 : 1, MPFR_RNDN);
    for (int m = d; m >= mlo; --m) {
      if (m <= mhi) {
        long double A = std::fabs(mpfr_get_ld(a[1], MPFR_RNDN));
        int im = m - mlo;
        for (int kk = 0; kk < kKinds; ++kk) {
          std::size_t idx = kk * (d + 1) + s;
          if (!t.active[kk] || tabs[idx] == 0.0L) continue;
          std::size_t q = kk * nm + im;
          mpfr_fma(qre[q], a[1], tre[idx], qre[q], MPFR_RNDN);
          mpfr_fma(qim[q], a[1], tim[idx], qim[q], MPFR_RNDN);
          qsum[q] += A * tabs[idx];
        }
      }
      if (m == mlo) break;
      mpfr_mul_si(a[2], a[1], d - 2 * s, MPFR_RNDN);
      mpfr_mul_ui(a[0], a[0], m + 1, MPFR_RNDN);
      mpfr_sub(a[2], a[2], a[0], MPFR_RNDN);
      mpfr_div_ui(a[2], a[2], d - m + 1, MPFR_RNDN);
      mpfr_swap(a[0], a[1]);
      mpfr_swap(a[1], a[2]);
    }
  }
  MpVec pref(1, prec + 32);
  for (int m = mlo; m <= mhi; ++m) {
    int n = d - m;
    mpfr_mul(pref[0], t.sqf[n], t.sqf[m], MPFR_RNDN);
    mpfr_div_d(pref[0], pref[0], T, MPFR_RNDN);
    double lgp = static_cast<double>(std::log2(mpfr_get_ld(pref[0], MPFR_RNDN)));
    if (!std::isfinite(lgp)) {
      long e;
      double mant = mpfr_get_d_2exp(&e, pref[0], MPFR_RNDN);
      lgp = std::log2(std::fabs(mant)) + static_cast<double>(e);
    }
    EntryOut& o = out[m - mlo];
    for (int kk = 0; kk < kKinds; ++kk) {
      if (!t.active[kk]) continue;
      std::size_t q = kk * nm + (m - mlo);
      mpfr_mul(s1[0], qre[q], pref[0], MPFR_RNDN);
      mpfr_mul(s1[1], qim[q], pref[0], MPFR_RNDN);
      o.value[kk] = cd(mpfr_get_d(s1[0], MPFR_RNDN), mpfr_get_d(s1[1], MPFR_RNDN));
      long double ar = mpfr_get_ld(s1[0], MPFR_RNDN), ai = mpfr_get_ld(s1[1], MPFR_RNDN);
      o.lg_abs[kk] = lg2_ld(std::hypot(ar, ai));
      o.lg_sum[kk] = lg2_ld(qsum[q]) + lgp;
    }
  }
}

struct PassResult {
  std::array<Eigen::MatrixXcd, kKinds> P;
  std::array<Eigen::MatrixXd, kKinds> lg_sum, lg_abs;
};

PassResult folded_pass(const DimensionlessConfig& cfg, int N, mpfr_prec_t prec, const BuildOptions& opt,
                       const std::array<bool, kKinds>& active) {
  FoldTables t;
  t.active = active;
  build_tables(t, 2 * N, N, cfg, prec);
  PassResult r;
  for (int kk = 0; kk < kKinds; ++kk) {
    r.P[kk] = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    r.lg_sum[kk] = Eigen::MatrixXd::Constant(N + 1, N + 1, -1e300);
    r.lg_abs[kk] = Eigen::MatrixXd::Constant(N + 1, N + 1, -1e300);
  }
  std::atomic<int> next{2 * N};
  auto worker = [&]() {
    std::vector<EntryOut> out;
    for (;;) {
      int d = next.fetch_sub(1);
      if (d < 0) break;
      int mlo = opt.full_square ? std::max(0, d - N) : std::max((d + 1) / 2, d - N);
      int mhi = std::min(d, N);
      if (mlo > mhi) continue;
      out.assign(mhi - mlo + 1, EntryOut{});
      contract_degree(t, d, mlo, mhi, cfg.T, out);
      for (int m = mlo; m <= mhi; ++m) {
        int n = d - m;
        for (int kk = 0; kk < kKinds; ++kk) {
          r.P[kk](n, m) = out[m - mlo].value[kk];
          r.lg_sum[kk](n, m) = out[m - mlo].lg_sum[kk];
          r.lg_abs[kk](n, m) = out[m - mlo].lg_abs[kk];
        }
      }
    }
  };
  int nt = std::min(thread_count(opt.threads), 2 * N + 1);
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return r;
}

unsigned initial_bits(int N, double ell) { return static_cast<unsigned>(64 + 2.0 * N + 0.2 * ell * ell); }

}  // namespace

const char* to_string(PrecisionMode m) {
  switch (m) {
    case PrecisionMode::Double: return "double";
    case PrecisionMode::Extended: return "extended";
    case PrecisionMode::Auto: return "auto";
  }
  return "?";
}

PrecisionMode precision_mode_from_string(const std::string& s) {
  if (s == "double") return PrecisionMode::Double;
  if (s == "extended") return PrecisionMode::Extended;
  if (s == "auto" || s == "mp") return PrecisionMode::Auto;
  throw InvalidArgument("unknown precision mode '" + s + "' (double, extended, auto)");
}

const Eigen::MatrixXcd& PropagatorMatrices::get(GeneratorKind k) const {
  switch (k) {
    case GeneratorKind::H: return H;
    case GeneratorKind::Delta: return Delta;
    case GeneratorKind::W_local: return W;
    default: throw InvalidArgument("nonlocal W is not stored in PropagatorMatrices");
  }
}

int thread_count(int requested) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int n = requested > 0 ? requested : hw;
  if (const char* env = std::getenv("HARVESTKIT_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

PropagatorMatrices build(const DimensionlessConfig& cfg, int N, PrecisionMode mode, const BuildOptions& opt) {
  if (N < 0) throw InvalidArgument("N must be >= 0");
  if (N > 2000) throw CapacityError("N above 2000 is not supported");
  if (!(cfg.ell > 0) || !std::isfinite(cfg.ell)) throw DomainError("ell must be positive and finite");
  if (!(cfg.T > 0) || !std::isfinite(cfg.T)) throw DomainError("T must be positive");
  if (!std::isfinite(cfg.omega)) throw DomainError("omega must be finite");

  std::array<bool, kKinds> active{!opt.skip_H, true, !opt.skip_W};
  unsigned bits = mode == PrecisionMode::Double ? 53 : mode == PrecisionMode::Extended ? 106 : 0;
  if (bits == 0) bits = std::min(opt.max_bits, initial_bits(N, cfg.ell));

  PropagatorMatrices out;
  out.N = N;
  out.cfg = cfg;
  out.precision_mode = mode;
  MatrixDiagnostics diag;
  PassResult r;
  for (;;) {
    r = folded_pass(cfg, N, bits, opt, active);
    ++diag.passes;
    double need = 0;
    diag.cancellation_digits = {0, 0, 0};
    for (int kk = 0; kk < kKinds; ++kk) {
      if (!active[kk]) continue;
      double lgmax = -1e300;
      for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j) lgmax = std::max(lgmax, r.lg_abs[kk](i, j));
      double lgfloor = lgmax + std::log2(kFloorRel);
      for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j) {
          double ls = r.lg_sum[kk](i, j);
          if (ls < -1e299) continue;  // structurally zero
          double la = r.lg_abs[kk](i, j);
          double c = ls - std::max(la, lgfloor);
          need = std::max(need, c + kTargetBits + std::log2(i + j + 2.0));
          if (la >= lgfloor) diag.cancellation_digits[kk] = std::max(diag.cancellation_digits[kk], (ls - la) * 0.30102999566398120);
        }
    }
    diag.bits = bits;
    diag.required_bits = static_cast<unsigned>(std::ceil(need));
    if (need <= bits) break;
    unsigned cap = mode == PrecisionMode::Auto ? opt.max_bits : 106;
    if (bits >= cap) {
      diag.flagged = true;
      diag.note = "cancellation exceeds precision budget (" + std::to_string(diag.required_bits) + " bits needed, " +
                  std::to_string(bits) + " used)";
      break;
    }
    unsigned nb = mode == PrecisionMode::Auto ? static_cast<unsigned>(std::ceil(need)) + 24 : cap;
    bits = std::min(cap, std::max(nb, bits + bits / 4));
  }
  out.diagnostics = diag;

  auto mirror = [&](Eigen::MatrixXcd& M, bool hermitian) {
    if (opt.full_square) return;
    for (int n = 0; n <= N; ++n)
      for (int m = n + 1; m <= N; ++m) M(m, n) = hermitian ? std::conj(M(n, m)) : M(n, m);
  };
  out.H = std::move(r.P[0]);
  out.Delta = std::move(r.P[1]);
  out.W = std::move(r.P[2]);
  mirror(out.H, false);
  mirror(out.Delta, false);
  mirror(out.W, true);
  out.G = 0.5 * out.H + cd(0, 0.5) * out.Delta;
  for (const auto* M : {&out.H, &out.Delta, &out.W})
    if (!M->allFinite()) throw NumericalError("non-finite matrix entry");
  return out;
}

ElementProbe element_folded(GeneratorKind kind, int n, int m, const DimensionlessConfig& cfg, unsigned max_bits) {
  if (n < 0 || m < 0) throw InvalidArgument("indices must be >= 0");
  if (kind == GeneratorKind::W_nonlocal) throw InvalidArgument("nonlocal W has no folded form");
  int kk = kind == GeneratorKind::H ? 0 : kind == GeneratorKind::Delta ? 1 : 2;
  int d = n + m;
  unsigned bits = initial_bits(std::max(n, m), cfg.ell);
  for (;;) {
    FoldTables t;
    t.active = {kk == 0, kk == 1, kk == 2};
    build_tables(t, d, std::max(n, m), cfg, bits);
    std::vector<EntryOut> out(1);
    contract_degree(t, d, m, m, cfg.T, out);
    double c = out[0].lg_sum[kk] - out[0].lg_abs[kk];
    double need = c + kTargetBits + std::log2(d + 2.0);
    if (out[0].lg_sum[kk] < -1e299 || need <= bits) {
      ElementProbe p;
      p.value = out[0].value[kk];
      p.log10_abs = out[0].lg_abs[kk] * 0.30102999566398120;
      p.bits = bits;
      return p;
    }
    if (bits >= max_bits) throw NumericalError("element precision exhausted");
    bits = std::min(max_bits, std::max(bits + bits / 4, static_cast<unsigned>(need) + 24));
  }
}

}  // namespace hk
