#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "harvestkit/harvestkit.h"

namespace {

const double kSqrtPi = 1.7724538509055160273;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(hk_status s) {
  switch (s) {
    case HK_OK: return 0;
    case HK_ERR_NUMERICAL:
    case HK_ERR_NOT_CONVERGED: return 3;
    case HK_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

void check(hk_status s, const char* what) {
  if (s != HK_OK)
    throw Failure{exit_code_for(s), std::string(what) + ": " + hk_status_string(s) + ": " + hk_last_error()};
}

void config_error(const std::string& m) { throw Failure{2, m}; }

std::string quote(const std::string& s) {
  if (s.find_first_of(" \t\"=") == std::string::npos && !s.empty()) return s;
  std::string o = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    o += c;
  }
  return o + "\"";
}

// structured stderr line: key=value ...
class Diag {
 public:
  explicit Diag(const std::string& event) { os_ << "event=" << event; }
  template <class T>
  Diag& kv(const std::string& k, const T& v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    os_ << ' ' << k << '=' << quote(s.str());
    return *this;
  }
  ~Diag() { std::cerr << os_.str() << '\n'; }

 private:
  std::ostringstream os_;
};

std::vector<double> parse_range(const std::string& spec, const char* flag) {
  double a, b, h;
  char c1, c2;
  std::istringstream is(spec);
  if (!(is >> a >> c1 >> b >> c2 >> h) || c1 != ':' || c2 != ':' || !is.eof())
    config_error(std::string(flag) + " expects start:stop:step, got '" + spec + "'");
  if (!(h > 0) || !(b >= a) || !std::isfinite(a) || !std::isfinite(b))
    config_error(std::string(flag) + " needs step > 0 and stop >= start");
  long n = static_cast<long>(std::floor((b - a) / h + 1e-9)) + 1;
  if (n > 1000000) config_error(std::string(flag) + " has too many points");
  std::vector<double> v(n);
  for (long i = 0; i < n; ++i) v[i] = a + i * h;
  return v;
}

std::vector<double> parse_list(const std::string& spec, const char* flag) {
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    char* end = nullptr;
    double x = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0' || !std::isfinite(x)) config_error(std::string(flag) + ": bad number '" + tok + "'");
    v.push_back(x);
  }
  if (v.empty()) config_error(std::string(flag) + " is empty");
  return v;
}

std::vector<int> parse_int_list(const std::string& spec, const char* flag) {
  std::vector<int> out;
  for (double x : parse_list(spec, flag)) {
    if (x != std::floor(x) || x < 0 || x > 100000) config_error(std::string(flag) + ": expected non-negative integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  void add(std::vector<double> r) { rows.push_back(std::move(r)); }
};

std::string fmt17(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

std::string render(const Table& t, const std::string& format) {
  std::ostringstream os;
  if (format == "csv") {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& r : t.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt17(r[i]);
      os << '\n';
    }
  } else {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : t.rows) {
      nlohmann::json o = nlohmann::json::object();
      for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = r[i];
      j.push_back(std::move(o));
    }
    os << j.dump(1) << '\n';
  }
  return os.str();
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Failure{2, "cannot open output " + out};
  f << text;
  if (!f) throw Failure{2, "write failed: " + out};
}

struct Common {
  std::string out;
  std::string format = "csv";
  std::string precision = "auto";
  int threads = 0;
  hk_precision mode() const {
    hk_precision p;
    check(hk_precision_from_string(precision.c_str(), &p), "precision");
    return p;
  }
};

void add_common(CLI::App* sc, Common& c, std::vector<std::string> formats = {"csv", "json"}) {
  sc->add_option("-o,--out", c.out, "output file (default stdout)");
  sc->add_option("--format", c.format)->check(CLI::IsMember(formats));
  sc->add_option("--precision", c.precision, "double, extended or auto")
      ->check(CLI::IsMember({"double", "extended", "auto", "mp"}));
  sc->add_option("--threads", c.threads, "worker cap (HARVESTKIT_THREADS also applies)")->check(CLI::NonNegativeNumber);
}

double schedule_T(int N, double L, double dT) {
  double T;
  check(hk_t_schedule(N, L, dT, &T), "schedule");
  return T;
}

struct Matrices {
  hk_matrices* m = nullptr;
  Matrices(int N, double omega_T0, double L, double T, hk_precision mode) {
    check(hk_matrices_build(N, omega_T0 * T, L / T, T, mode, &m), "build");
  }
  ~Matrices() { hk_matrices_free(m); }
  Matrices(const Matrices&) = delete;
  Matrices& operator=(const Matrices&) = delete;
};

// ---------------------------------------------------------------------------

struct CanonicalArgs {
  Common c;
  double L = 0, T = 1;
  std::string range = "0:6:0.05";
};

void run_canonical(const CanonicalArgs& a) {
  auto w = parse_range(a.range, "--omega-range");
  Table t{{"omega", "negativity", "half_abs_delta", "ser"}, {}};
  const double c0 = std::pow(3.14159265358979323846, 0.25);
  double best = -1, best_w = 0, best_ser = 0;
  for (double om : w) {
    Matrices m(0, om, a.L, a.T, a.c.mode());
    hk_report r;
    check(hk_report_compute(m.m, &c0, 1, &r), "report");
    double half = kSqrtPi * 0.5 * r.abs_cDc / r.norm2;
    t.add({om, r.negativity, half, r.ser});
    if (r.negativity > best) best = r.negativity, best_w = om, best_ser = r.ser;
  }
  Diag("peak").kv("omega", best_w).kv("negativity", best).kv("ser", best_ser);
  emit(render(t, a.c.format), a.c.out);
}

struct SweepArgs {
  Common c;
  int N = -1;
  double L = 0, dT = 0;
  std::string range = "0:6:0.05";
};

void run_sweep(const SweepArgs& a) {
  auto w = parse_range(a.range, "--omega-range");
  std::vector<hk_curve_point> pts(w.size());
  check(hk_sweep_gap(a.N, a.L, w.data(), w.size(), a.dT, a.c.mode(), a.c.threads, pts.data()), "sweep");
  Table t{{"omega", "value", "negativity", "ser", "theta"}, {}};
  std::size_t bi = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.add({pts[i].omega_T0, pts[i].value, pts[i].negativity, pts[i].ser, pts[i].theta});
    if (pts[i].value > pts[bi].value) bi = i;
  }
  Diag("peak").kv("N", a.N).kv("T_N", schedule_T(a.N, a.L, a.dT)).kv("omega", pts[bi].omega_T0).kv("value", pts[bi].value).kv("ser", pts[bi].ser);
  emit(render(t, a.c.format), a.c.out);
}

struct ProfilesArgs {
  Common c;
  int N = -1;
  double L = 0, dT = 0;
  std::string omegas, trange = "-4:4:0.01";
};

void run_profiles(const ProfilesArgs& a) {
  auto w = parse_list(a.omegas, "--omegas");
  auto ts = parse_range(a.trange, "--t-range");
  double T = schedule_T(a.N, a.L, a.dT);
  Table t{{"omega", "t", "chi"}, {}};
  std::vector<double> c(a.N + 1), chi(ts.size());
  for (double om : w) {
    hk_opt_result r;
    check(hk_optimize_spacelike(a.N, om, a.L, a.dT, a.c.mode(), c.data(), &r), "optimize");
    check(hk_reconstruct(c.data(), a.N, T, ts.data(), ts.size(), chi.data()), "reconstruct");
    for (std::size_t i = 0; i < ts.size(); ++i) t.add({om, ts[i], chi[i]});
    Diag("profile").kv("omega", om).kv("value", r.value).kv("theta", r.theta);
  }
  emit(render(t, a.c.format), a.c.out);
}

struct MaxcurveArgs {
  Common c;
  std::string Ns = "0,25,50,100,200";
  double L = 0;
  std::string range = "0:6:0.05";
};

void run_maxcurve(const MaxcurveArgs& a) {
  auto Ns = parse_int_list(a.Ns, "--Ns");
  auto w = parse_range(a.range, "--omega-range");
  Table t{{"N", "T_N", "omega_at_max", "value", "ser", "tail_integral", "log10_signalling_ratio"}, {}};
  std::vector<hk_curve_point> pts(w.size());
  for (int N : Ns) {
    check(hk_sweep_gap(N, a.L, w.data(), w.size(), 0.0, a.c.mode(), a.c.threads, pts.data()), "sweep");
    std::size_t bi = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (pts[i].value > pts[bi].value) bi = i;
    double tail, lr;
    int arg;
    check(hk_tail_integral(N, a.L, &tail, &arg), "tail");
    check(hk_signalling_ratio(N, a.L, &lr), "signalling ratio");
    t.add({double(N), schedule_T(N, a.L, 0), pts[bi].omega_T0, pts[bi].value, pts[bi].ser, tail, lr});
    Diag("maxcurve").kv("N", N).kv("value", pts[bi].value);
  }
  emit(render(t, a.c.format), a.c.out);
}

struct SigcurveArgs {
  Common c;
  std::string Ns = "0,25,50,100,200";
  std::string omegas = "0,1,2,3";
  double L = 0;
};

void run_sigcurve(const SigcurveArgs& a) {
  auto Ns = parse_int_list(a.Ns, "--Ns");
  auto w = parse_list(a.omegas, "--omegas");
  Table t{{"N", "omega", "max_eigenvalue_delta"}, {}};
  for (int N : Ns)
    for (double om : w) {
      Matrices m(N, om, a.L, schedule_T(N, a.L, 0), a.c.mode());
      double s;
      check(hk_matrices_max_signalling(m.m, &s), "max signalling");
      t.add({double(N), om, s});
    }
  emit(render(t, a.c.format), a.c.out);
}

struct RescaledArgs {
  Common c;
  int N = -1;
  double L = 0, budget = 0.05;
  std::string ratios = "0.005,0.01,0.02,0.024,0.03,0.04";
  std::string range = "0:6:0.05";
};

void run_rescaled(const RescaledArgs& a) {
  auto q = parse_list(a.ratios, "--ratios");
  auto w = parse_range(a.range, "--omega-range");
  double TN = schedule_T(a.N, a.L, 0);
  Table t{{"delta_ratio", "delta_T", "omega", "value", "negativity", "ser", "within_budget"}, {}};
  std::vector<hk_curve_point> pts(w.size());
  for (double r : q) {
    if (!(r >= 0)) config_error("--ratios must be non-negative");
    double dT = r * TN;
    check(hk_sweep_gap(a.N, a.L, w.data(), w.size(), dT, a.c.mode(), a.c.threads, pts.data()), "sweep");
    std::size_t bi = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t.add({r, dT, pts[i].omega_T0, pts[i].value, pts[i].negativity, pts[i].ser, pts[i].ser <= a.budget ? 1.0 : 0.0});
      if (pts[i].value > pts[bi].value) bi = i;
    }
    Diag("peak").kv("delta_ratio", r).kv("omega", pts[bi].omega_T0).kv("value", pts[bi].value).kv("ser", pts[bi].ser)
        .kv("within_budget", pts[bi].ser <= a.budget ? 1 : 0);
  }
  emit(render(t, a.c.format), a.c.out);
}

struct ConstrainedArgs {
  Common c;
  int N = -1, starts = 8;
  double T = 0, L = 0;
  std::uint64_t seed = 20240607;
  std::string range = "0.05:0.8:0.05";
  std::string plot = "0:1.5:0.01";
};

void run_constrained(const ConstrainedArgs& a) {
  auto w = parse_range(a.range, "--omega-range");
  auto pw = parse_range(a.plot, "--plot-range");
  std::vector<hk_opt_result> per(w.size());
  hk_opt_result best;
  std::vector<double> c(a.N + 1);
  double zero = NAN;
  hk_status s = hk_constrained_scan(a.N, a.T, a.L, w.data(), w.size(), a.seed, a.starts, a.c.mode(), a.c.threads,
                                    per.data(), &best, c.data(), &zero);
  if (s != HK_OK && s != HK_ERR_NOT_CONVERGED) check(s, "constrained");
  Diag("optimum").kv("omega", best.omega_T0).kv("value", best.value).kv("alpha", best.alpha)
      .kv("constraint_residual", best.constraint_residual).kv("converged", best.converged).kv("zero_signalling_gap", zero);
  if (s != HK_OK) check(s, "constrained");
  // fixed-c curves over the gap
  Table t{{"omega", "negativity_alpha", "negativity", "half_abs_delta", "re_cDc", "im_cDc"}, {}};
  for (double om : pw) {
    Matrices m(a.N, om, a.L, a.T, a.c.mode());
    hk_report r;
    check(hk_report_compute(m.m, c.data(), c.size(), &r), "report");
    double re, im;
    check(hk_signalling_form(c.data(), a.N, a.T, a.L, om, &re, &im), "signalling");
    t.add({om, best.alpha * best.alpha * r.negativity_unclamped, r.negativity, kSqrtPi * 0.5 * r.abs_cDc / r.norm2, re, im});
  }
  emit(render(t, a.c.format), a.c.out);
}

struct ExpandArgs {
  Common c;
  int N = -1;
  double T = 0, L = 0, support = 0;
  std::string formula, csv;
};

void run_expand(const ExpandArgs& a) {
  if (a.formula.empty() == a.csv.empty()) config_error("exactly one of --formula and --csv is required");
  if ((a.T > 0) == (a.L > 0)) config_error("exactly one of --T and --L (schedule) is required");
  double T = a.T > 0 ? a.T : schedule_T(a.N, a.L, 0);
  hk_profile* p = nullptr;
  if (!a.formula.empty())
    check(hk_profile_from_expression(a.formula.c_str(), a.support, &p), "formula");
  else
    check(hk_profile_from_csv(a.csv.c_str(), &p), "csv");
  std::unique_ptr<hk_profile, void (*)(hk_profile*)> hold(p, hk_profile_free);
  std::vector<double> c(a.N + 1);
  hk_expand_info info;
  check(hk_expand(p, a.N, T, c.data(), &info), "expand");
  double res;
  check(hk_residual(p, c.data(), a.N, T, &res), "residual");
  Diag("expand").kv("N", a.N).kv("T", T).kv("residual", res).kv("refinement_delta", info.refinement_delta)
      .kv("method", info.panels ? "panels" : "gauss-hermite");
  Table t{{"n", "c"}, {}};
  for (int n = 0; n <= a.N; ++n) t.add({double(n), c[n]});
  emit(render(t, a.c.format), a.c.out);
}

struct MatricesArgs {
  Common c;
  int N = -1;
  double omega = 0, L = 0, T = 0;
  std::string kind = "H";
};

void run_matrices(const MatricesArgs& a) {
  if (a.c.out.empty() || a.c.out == "-") config_error("matrices requires --out");
  hk_kind k = a.kind == "H" ? HK_KIND_H : a.kind == "Delta" ? HK_KIND_DELTA : HK_KIND_W;
  double T = a.T > 0 ? a.T : schedule_T(a.N, a.L, 0);
  Matrices m(a.N, a.omega, a.L, T, a.c.mode());
  int bits, req, flagged;
  check(hk_matrices_diagnostics(m.m, &bits, &req, &flagged), "diagnostics");
  Diag("matrices").kv("N", a.N).kv("T", T).kv("bits", bits).kv("required_bits", req).kv("flagged", flagged);
  std::string tmp = a.c.out + ".partial";
  check(hk_matrices_export(m.m, k, tmp.c_str(), a.c.format == "json" ? HK_FORMAT_JSON : HK_FORMAT_BINARY), "export");
  if (std::rename(tmp.c_str(), a.c.out.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Failure{2, "cannot write " + a.c.out};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harvestkit: entanglement harvesting with Hermite-expanded switching functions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hk_version()));

  CanonicalArgs ca;
  auto* canonical = app.add_subcommand("canonical", "Gaussian switching: negativity and signalling vs gap");
  add_common(canonical, ca.c);
  canonical->add_option("--L", ca.L, "separation in T0")->required()->check(CLI::PositiveNumber);
  canonical->add_option("--T", ca.T, "Gaussian width in T0")->check(CLI::PositiveNumber);
  canonical->add_option("--omega-range", ca.range, "Omega T0 start:stop:step");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "spacelike optimum vs gap on the T_N schedule");
  add_common(sweep, sa.c);
  sweep->add_option("--N", sa.N)->required()->check(CLI::NonNegativeNumber);
  sweep->add_option("--L", sa.L)->required()->check(CLI::PositiveNumber);
  sweep->add_option("--delta-T", sa.dT)->check(CLI::NonNegativeNumber);
  sweep->add_option("--omega-range", sa.range);

  ProfilesArgs pa;
  auto* profiles = app.add_subcommand("profiles", "optimal switching functions in time");
  add_common(profiles, pa.c);
  profiles->add_option("--N", pa.N)->required()->check(CLI::NonNegativeNumber);
  profiles->add_option("--L", pa.L)->required()->check(CLI::PositiveNumber);
  profiles->add_option("--omegas", pa.omegas, "comma-separated Omega T0")->required();
  profiles->add_option("--delta-T", pa.dT)->check(CLI::NonNegativeNumber);
  profiles->add_option("--t-range", pa.trange);

  MaxcurveArgs ma;
  auto* maxcurve = app.add_subcommand("maxcurve", "maximum harvested negativity vs N");
  add_common(maxcurve, ma.c);
  maxcurve->add_option("--Ns", ma.Ns);
  maxcurve->add_option("--L", ma.L)->required()->check(CLI::PositiveNumber);
  maxcurve->add_option("--omega-range", ma.range);

  SigcurveArgs ga;
  auto* sigcurve = app.add_subcommand("sigcurve", "largest |c^T Delta c| vs N");
  add_common(sigcurve, ga.c);
  sigcurve->add_option("--Ns", ga.Ns);
  sigcurve->add_option("--omegas", ga.omegas);
  sigcurve->add_option("--L", ga.L)->required()->check(CLI::PositiveNumber);

  RescaledArgs ra;
  auto* rescaled = app.add_subcommand("rescaled", "delta_T-shifted schedule with an SER budget");
  add_common(rescaled, ra.c);
  rescaled->add_option("--N", ra.N)->required()->check(CLI::NonNegativeNumber);
  rescaled->add_option("--L", ra.L)->required()->check(CLI::PositiveNumber);
  rescaled->add_option("--ratios", ra.ratios, "delta_T / T_N list");
  rescaled->add_option("--ser-budget", ra.budget)->check(CLI::NonNegativeNumber);
  rescaled->add_option("--omega-range", ra.range);

  ConstrainedArgs cna;
  auto* constrained = app.add_subcommand("constrained", "zero-signalling constrained optimum");
  add_common(constrained, cna.c);
  constrained->add_option("--N", cna.N)->required()->check(CLI::NonNegativeNumber);
  constrained->add_option("--T", cna.T)->required()->check(CLI::PositiveNumber);
  constrained->add_option("--L", cna.L)->required()->check(CLI::PositiveNumber);
  constrained->add_option("--seed", cna.seed);
  constrained->add_option("--starts", cna.starts, "random starts")->check(CLI::NonNegativeNumber);
  constrained->add_option("--omega-range", cna.range, "optimization grid");
  constrained->add_option("--plot-range", cna.plot, "fixed-c output grid");

  ExpandArgs ea;
  auto* expand = app.add_subcommand("expand", "Hermite coefficients of a switching function");
  add_common(expand, ea.c);
  expand->add_option("--N", ea.N)->required()->check(CLI::NonNegativeNumber);
  expand->add_option("--T", ea.T, "basis width")->check(CLI::PositiveNumber);
  expand->add_option("--L", ea.L, "use the T_N schedule for this separation")->check(CLI::PositiveNumber);
  expand->add_option("--formula", ea.formula, "expression in t");
  expand->add_option("--csv", ea.csv, "two-column samples");
  expand->add_option("--support", ea.support, "support half-width of a formula")->check(CLI::NonNegativeNumber);

  MatricesArgs xa;
  auto* matrices = app.add_subcommand("matrices", "export a propagator matrix");
  add_common(matrices, xa.c, {"json", "binary"});
  matrices->add_option("--N", xa.N)->required()->check(CLI::NonNegativeNumber);
  matrices->add_option("--omega", xa.omega, "Omega T0")->check(CLI::NonNegativeNumber);
  matrices->add_option("--L", xa.L)->required()->check(CLI::PositiveNumber);
  matrices->add_option("--T", xa.T, "basis width (default T_N)")->check(CLI::PositiveNumber);
  matrices->add_option("--kind", xa.kind)->check(CLI::IsMember({"H", "Delta", "W"}));
  xa.c.format = "json";

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    Diag("error").kv("code", 2).kv("message", e.what());
    return 2;
  }

  auto t0 = std::chrono::steady_clock::now();
  std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "canonical") run_canonical(ca);
    else if (name == "sweep") run_sweep(sa);
    else if (name == "profiles") run_profiles(pa);
    else if (name == "maxcurve") run_maxcurve(ma);
    else if (name == "sigcurve") run_sigcurve(ga);
    else if (name == "rescaled") run_rescaled(ra);
    else if (name == "constrained") run_constrained(cna);
    else if (name == "expand") run_expand(ea);
    else if (name == "matrices") run_matrices(xa);
  } catch (const Failure& f) {
    Diag("error").kv("subcommand", name).kv("code", f.exit_code).kv("message", f.message);
    return f.exit_code;
  } catch (const std::exception& e) {
    Diag("error").kv("subcommand", name).kv("code", 1).kv("message", e.what());
    return 1;
  }
  double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Diag("done").kv("subcommand", name).kv("threads", hk_thread_count(0)).kv("elapsed_s", dt);
  return 0;
}
