#include "harvestkit/harvestkit.h"

#include <cmath>
#include <limits>
#include <new>
#include <string>

#include "harvestkit/errors.hpp"
#include "harvestkit/expansion.hpp"
#include "harvestkit/harvesting.hpp"
#include "harvestkit/matrices.hpp"
#include "harvestkit/optimize.hpp"
#include "harvestkit/specfun.hpp"

struct hk_matrices {
  hk::PropagatorMatrices m;
};

struct hk_profile {
  hk::SwitchingProfile p;
};

namespace {

thread_local std::string g_error;

hk_status fail(hk_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <class F>
hk_status guard(F&& f) {
  try {
    f();
    g_error.clear();
    return HK_OK;
  } catch (const hk::Error& e) {
    return fail(static_cast<hk_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(HK_ERR_CAPACITY, "out of memory");
  } catch (const std::exception& e) {
    return fail(HK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(HK_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (!p) throw hk::InvalidArgument(std::string("null pointer: ") + what);
}

hk::PrecisionMode mode_of(hk_precision p) {
  switch (p) {
    case HK_PRECISION_DOUBLE: return hk::PrecisionMode::Double;
    case HK_PRECISION_EXTENDED: return hk::PrecisionMode::Extended;
    case HK_PRECISION_AUTO: return hk::PrecisionMode::Auto;
  }
  throw hk::InvalidArgument("unknown precision mode");
}

const Eigen::MatrixXcd& pick(const hk::PropagatorMatrices& m, hk_kind k) {
  switch (k) {
    case HK_KIND_H: return m.H;
    case HK_KIND_DELTA: return m.Delta;
    case HK_KIND_W: return m.W;
    case HK_KIND_G: return m.G;
  }
  throw hk::InvalidArgument("unknown matrix kind");
}

Eigen::VectorXd vec(const double* c, std::size_t len) {
  need(c, "c");
  Eigen::VectorXd v(len);
  for (std::size_t i = 0; i < len; ++i) v(i) = c[i];
  return v;
}

hk_report to_c(const hk::HarvestReport& r) {
  return hk_report{r.negativity, r.negativity_unclamped, r.harvested_negativity, r.harvested_unclamped, r.ser,
                   r.abs_cGc,    r.cWc,                  r.abs_cDc,             r.abs_cHc,            r.norm2};
}

hk_opt_result to_c(const hk::OptimizationResult& r) {
  hk_opt_result o{};
  o.value = r.value;
  o.theta = r.theta_star;
  o.omega_T0 = r.omega_T0;
  o.T = r.T;
  o.alpha = r.alpha;
  o.constraint_residual = r.constraint_residual;
  o.converged = r.converged ? 1 : 0;
  o.flagged = r.flagged ? 1 : 0;
  o.report = to_c(r.report);
  return o;
}

void copy_c(const Eigen::VectorXd& c, double* out) {
  if (!out) return;
  for (Eigen::Index i = 0; i < c.size(); ++i) out[i] = c(i);
}

hk::ConstrainedOptions constrained_opts(std::uint64_t seed, int starts) {
  hk::ConstrainedOptions o;
  o.seed = seed;
  if (starts < 0) throw hk::InvalidArgument("random_starts must be >= 0");
  o.random_starts = starts;
  return o;
}

}  // namespace

extern "C" {

const char* hk_version(void) { return "0.1.0"; }

const char* hk_last_error(void) { return g_error.c_str(); }

const char* hk_status_string(hk_status s) {
  switch (s) {
    case HK_OK: return "ok";
    case HK_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HK_ERR_DOMAIN: return "domain";
    case HK_ERR_CAPACITY: return "capacity";
    case HK_ERR_PRECONDITION: return "precondition";
    case HK_ERR_NUMERICAL: return "numerical";
    case HK_ERR_NOT_CONVERGED: return "not_converged";
    case HK_ERR_IO: return "io";
    case HK_ERR_PARSE: return "parse";
    case HK_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

int hk_thread_count(int requested) { return hk::thread_count(requested); }

hk_status hk_precision_from_string(const char* name, hk_precision* out) {
  return guard([&] {
    need(name, "name");
    need(out, "out");
    switch (hk::precision_mode_from_string(name)) {
      case hk::PrecisionMode::Double: *out = HK_PRECISION_DOUBLE; break;
      case hk::PrecisionMode::Extended: *out = HK_PRECISION_EXTENDED; break;
      case hk::PrecisionMode::Auto: *out = HK_PRECISION_AUTO; break;
    }
  });
}

hk_status hk_hermite_function(int n, double t, double T, double* out) {
  return guard([&] {
    need(out, "out");
    if (n < 0) throw hk::InvalidArgument("n must be >= 0");
    if (!(T > 0)) throw hk::DomainError("T must be positive");
    *out = hk::hermite_function(n, t, T);
  });
}

hk_status hk_matrices_build(int N, double omega, double ell, double T, hk_precision mode, hk_matrices** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    auto m = hk::build(hk::DimensionlessConfig{omega, ell, T}, N, mode_of(mode));
    *out = new hk_matrices{std::move(m)};
  });
}

void hk_matrices_free(hk_matrices* m) { delete m; }

int hk_matrices_order(const hk_matrices* m) { return m ? m->m.N : -1; }

hk_status hk_matrices_get(const hk_matrices* m, hk_kind kind, double* re, double* im) {
  return guard([&] {
    need(m, "matrices");
    const auto& P = pick(m->m, kind);
    for (int r = 0; r < P.rows(); ++r)
      for (int c = 0; c < P.cols(); ++c) {
        if (re) re[r * P.cols() + c] = P(r, c).real();
        if (im) im[r * P.cols() + c] = P(r, c).imag();
      }
  });
}

hk_status hk_matrices_diagnostics(const hk_matrices* m, int* bits, int* required_bits, int* flagged) {
  return guard([&] {
    need(m, "matrices");
    if (bits) *bits = static_cast<int>(m->m.diagnostics.bits);
    if (required_bits) *required_bits = static_cast<int>(m->m.diagnostics.required_bits);
    if (flagged) *flagged = m->m.diagnostics.flagged ? 1 : 0;
  });
}

hk_status hk_matrices_export(const hk_matrices* m, hk_kind kind, const char* path, hk_format format) {
  return guard([&] {
    need(m, "matrices");
    need(path, "path");
    hk::GeneratorKind k;
    switch (kind) {
      case HK_KIND_H: k = hk::GeneratorKind::H; break;
      case HK_KIND_DELTA: k = hk::GeneratorKind::Delta; break;
      case HK_KIND_W: k = hk::GeneratorKind::W_local; break;
      default: throw hk::InvalidArgument("only H, Delta and W can be exported");
    }
    if (format == HK_FORMAT_JSON)
      hk::export_json(m->m, k, path);
    else if (format == HK_FORMAT_BINARY)
      hk::export_binary(m->m, k, path);
    else
      throw hk::InvalidArgument("unknown export format");
  });
}

hk_status hk_matrices_max_signalling(const hk_matrices* m, double* out) {
  return guard([&] {
    need(m, "matrices");
    need(out, "out");
    *out = hk::max_signalling(m->m);
  });
}

hk_status hk_report_compute(const hk_matrices* m, const double* c, size_t len, hk_report* out) {
  return guard([&] {
    need(m, "matrices");
    need(out, "out");
    if (len != static_cast<size_t>(m->m.N + 1)) throw hk::InvalidArgument("coefficient vector length must be N+1");
    *out = to_c(hk::harvest_report(vec(c, len), m->m));
  });
}

hk_status hk_t_schedule(int N, double L, double delta_T, double* T_N) {
  return guard([&] {
    need(T_N, "T_N");
    *T_N = hk::t_schedule(N, L, delta_T).T_N;
  });
}

hk_status hk_tail_integral(int N, double L, double* value, int* argmax) {
  return guard([&] {
    auto t = hk::tail_integral(N, L);
    if (value) *value = t.value;
    if (argmax) *argmax = t.argmax;
  });
}

hk_status hk_signalling_ratio(int N, double L, double* log10_ratio) {
  return guard([&] {
    need(log10_ratio, "log10_ratio");
    *log10_ratio = hk::basis_signalling_ratio(N, L).log10_ratio;
  });
}

hk_status hk_optimize_spacelike(int N, double omega_T0, double L, double delta_T, hk_precision mode, double* c_out,
                                hk_opt_result* out) {
  return guard([&] {
    need(out, "out");
    auto r = hk::optimize_spacelike(N, omega_T0, L, delta_T, mode_of(mode));
    copy_c(r.c_star, c_out);
    *out = to_c(r);
  });
}

hk_status hk_optimize_spacelike_matrices(const hk_matrices* m, double* c_out, hk_opt_result* out) {
  return guard([&] {
    need(m, "matrices");
    need(out, "out");
    auto r = hk::optimize_spacelike(m->m);
    copy_c(r.c_star, c_out);
    *out = to_c(r);
  });
}

hk_status hk_sweep_gap(int N, double L, const double* omegas_T0, size_t count, double delta_T, hk_precision mode,
                       int threads, hk_curve_point* out) {
  return guard([&] {
    need(omegas_T0, "omegas_T0");
    need(out, "out");
    std::vector<double> w(omegas_T0, omegas_T0 + count);
    auto curve = hk::sweep_gap(N, L, w, delta_T, mode_of(mode), threads);
    for (std::size_t i = 0; i < count; ++i)
      out[i] = hk_curve_point{curve[i].omega_T0, curve[i].value, curve[i].negativity, curve[i].ser, curve[i].theta};
  });
}

hk_status hk_optimize_constrained(int N, double T, double L, double omega_T0, uint64_t seed, int random_starts,
                                  hk_precision mode, double* c_out, hk_opt_result* out) {
  hk_status s = guard([&] {
    need(out, "out");
    auto r = hk::optimize_constrained(N, T, L, omega_T0, constrained_opts(seed, random_starts), mode_of(mode));
    copy_c(r.c_star, c_out);
    *out = to_c(r);
    if (!r.converged) throw hk::ConvergenceError(r.note);
  });
  return s;
}

hk_status hk_constrained_scan(int N, double T, double L, const double* omegas_T0, size_t count, uint64_t seed,
                              int random_starts, hk_precision mode, int threads, hk_opt_result* per_omega,
                              hk_opt_result* best, double* best_c, double* zero_gap_T0) {
  return guard([&] {
    need(omegas_T0, "omegas_T0");
    need(best, "best");
    std::vector<double> w(omegas_T0, omegas_T0 + count);
    auto s = hk::constrained_scan(N, T, L, w, constrained_opts(seed, random_starts), mode_of(mode), threads);
    if (per_omega)
      for (std::size_t i = 0; i < count; ++i) per_omega[i] = to_c(s.results[i]);
    *best = to_c(s.best);
    copy_c(s.best.c_star, best_c);
    if (zero_gap_T0) *zero_gap_T0 = s.zero_gap_found ? s.zero_gap_T0 : std::numeric_limits<double>::quiet_NaN();
    if (!s.best.converged) throw hk::ConvergenceError("no omega reached the constraint tolerance");
  });
}

hk_status hk_find_zero_signalling_gap(const double* c, int N, double T, double L, double lo, double hi, double tol,
                                      double* out) {
  return guard([&] {
    need(out, "out");
    if (N < 0) throw hk::InvalidArgument("N must be >= 0");
    *out = hk::find_zero_signalling_gap(vec(c, N + 1), N, T, L, lo, hi, tol);
  });
}

hk_status hk_signalling_form(const double* c, int N, double T, double L, double omega_T0, double* re, double* im) {
  return guard([&] {
    if (N < 0) throw hk::InvalidArgument("N must be >= 0");
    auto z = hk::signalling_form(vec(c, N + 1), N, T, L, omega_T0);
    if (re) *re = z.real();
    if (im) *im = z.imag();
  });
}

hk_status hk_profile_from_expression(const char* text, double support_half_width, hk_profile** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    *out = new hk_profile{hk::SwitchingProfile::from_expression(text, support_half_width)};
  });
}

hk_status hk_profile_from_samples(const double* t, const double* v, size_t count, hk_profile** out) {
  return guard([&] {
    need(t, "t");
    need(v, "v");
    need(out, "out");
    *out = nullptr;
    *out = new hk_profile{
        hk::SwitchingProfile::from_samples(std::vector<double>(t, t + count), std::vector<double>(v, v + count))};
  });
}

hk_status hk_profile_from_csv(const char* path, hk_profile** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new hk_profile{hk::read_csv_profile_file(path)};
  });
}

void hk_profile_free(hk_profile* p) { delete p; }

hk_status hk_profile_eval(const hk_profile* p, double t, double* out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    *out = p->p(t);
  });
}

hk_status hk_expand(const hk_profile* p, int N, double T, double* c_out, hk_expand_info* info) {
  return guard([&] {
    need(p, "profile");
    need(c_out, "c_out");
    auto e = hk::expand(p->p, N, T);
    copy_c(e.c, c_out);
    if (info) *info = hk_expand_info{e.nodes, e.refinement_delta, e.converged ? 1 : 0, e.method == "panels" ? 1 : 0};
  });
}

hk_status hk_reconstruct(const double* c, int N, double T, const double* t, size_t count, double* out) {
  return guard([&] {
    need(t, "t");
    need(out, "out");
    if (N < 0) throw hk::InvalidArgument("N must be >= 0");
    auto cv = vec(c, N + 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = hk::reconstruct(cv, T, t[i]);
  });
}

hk_status hk_residual(const hk_profile* p, const double* c, int N, double T, double* out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    if (N < 0) throw hk::InvalidArgument("N must be >= 0");
    *out = hk::residual(p->p, vec(c, N + 1), T);
  });
}

}  // extern "C"
