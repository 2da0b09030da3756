#include "harvestkit/server.hpp"

#include <json.hpp>

#include <cmath>
#include <condition_variable>
#include <thread>
#include <vector>

#include "harvestkit/errors.hpp"
#include "harvestkit/expansion.hpp"
#include "harvestkit/harvesting.hpp"
#include "harvestkit/optimize.hpp"

namespace hk::server {

using nlohmann::json;

namespace {

constexpr double kQuantum = 1e-6;
constexpr std::size_t kMaxGridPoints = 2001;
constexpr std::size_t kMaxSamples = 1000000;
constexpr double kPi = 3.14159265358979323846;

struct HttpError {
  int status;
  std::string error;
  std::string detail;
};

[[noreturn]] void invalid(const std::string& detail) { throw HttpError{400, "invalid_request", detail}; }

json error_body(const std::string& error, const std::string& detail) {
  return {{"version", kSchemaVersion}, {"error", error}, {"detail", detail}};
}

Response reply(int status, json j) { return {status, j.dump()}; }

// Doubles that do not fit JSON become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) invalid(std::string("missing field '") + name + "'");
  return *it;
}

double get_double(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) invalid(std::string("field '") + name + "' must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) invalid(std::string("field '") + name + "' must be finite");
  return x;
}

double get_double(const json& j, const char* name, double fallback) {
  return j.contains(name) ? get_double(j, name) : fallback;
}

double get_positive(const json& j, const char* name) {
  double x = get_double(j, name);
  if (!(x > 0)) invalid(std::string("field '") + name + "' must be > 0");
  return x;
}

long long get_int(const json& j, const char* name) {
  const json& v = field(j, name);
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
  }
  invalid(std::string("field '") + name + "' must be an integer");
}

std::vector<double> get_array(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_array()) invalid(std::string("field '") + name + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number() || !std::isfinite(x.get<double>()))
      invalid(std::string("field '") + name + "' must be an array of finite numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

PrecisionMode get_mode(const json& j) {
  if (!j.contains("precision")) return PrecisionMode::Auto;
  const json& v = j["precision"];
  if (!v.is_string()) invalid("field 'precision' must be a string");
  try {
    return precision_mode_from_string(v.get<std::string>());
  } catch (const Error& e) {
    invalid(e.what());
  }
}

void check_object(const json& j) {
  if (!j.is_object()) invalid("request body must be a JSON object");
  auto it = j.find("version");
  if (it == j.end()) invalid("missing field 'version'");
  if (!it->is_number_integer() || it->get<long long>() != kSchemaVersion)
    invalid("unsupported version; expected " + std::to_string(kSchemaVersion));
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vec_json(const Eigen::VectorXd& c) {
  json a = json::array();
  for (double x : c) a.push_back(num(x));
  return a;
}

json report_json(const HarvestReport& r) {
  return {{"negativity", num(r.negativity)},
          {"negativity_unclamped", num(r.negativity_unclamped)},
          {"harvested_negativity", num(r.harvested_negativity)},
          {"harvested_unclamped", num(r.harvested_unclamped)},
          {"ser", num(r.ser)},
          {"abs_cGc", num(r.abs_cGc)},
          {"cWc", num(r.cWc)},
          {"abs_cDc", num(r.abs_cDc)},
          {"abs_cHc", num(r.abs_cHc)},
          {"norm2", num(r.norm2)}};
}

json diagnostics_json(const PropagatorMatrices& m) {
  return {{"bits", m.diagnostics.bits},
          {"required_bits", m.diagnostics.required_bits},
          {"flagged", m.diagnostics.flagged},
          {"note", m.diagnostics.note}};
}

json config_json(const PropagatorMatrices& m) {
  return {{"N", m.N}, {"omega", num(m.cfg.omega)}, {"ell", num(m.cfg.ell)}, {"T", num(m.cfg.T)},
          {"precision", to_string(m.precision_mode)}};
}

json result_json(const OptimizationResult& r, const std::string& mode) {
  return {{"mode", mode},
          {"value", num(r.value)},
          {"theta", num(r.theta_star)},
          {"omega_T0", num(r.omega_T0)},
          {"T", num(r.T)},
          {"alpha", num(r.alpha)},
          {"constraint_residual", num(r.constraint_residual)},
          {"converged", r.converged},
          {"flagged", r.flagged},
          {"note", r.note},
          {"c", vec_json(r.c_star)},
          {"report", report_json(r.report)}};
}

int check_N(const json& j, int max_n) {
  long long N = get_int(j, "N");
  if (N < 0) invalid("field 'N' must be >= 0");
  if (N > max_n) invalid("N = " + std::to_string(N) + " exceeds the server limit " + std::to_string(max_n));
  return static_cast<int>(N);
}

std::vector<double> omega_grid(const json& j) {
  const json& r = field(j, "omega_range");
  if (!r.is_object()) invalid("field 'omega_range' must be an object {start, stop, step}");
  double a = get_double(r, "start"), b = get_double(r, "stop"), s = get_positive(r, "step");
  if (b < a) invalid("omega_range: stop < start");
  double n = std::floor((b - a) / s + 1e-9) + 1;
  if (n > static_cast<double>(kMaxGridPoints))
    invalid("omega_range has more than " + std::to_string(kMaxGridPoints) + " points");
  std::vector<double> w;
  for (int i = 0; i < static_cast<int>(n); ++i) w.push_back(a + i * s);
  return w;
}

SwitchingProfile parse_profile(const json& j) {
  const json& p = field(j, "profile");
  if (!p.is_object()) invalid("field 'profile' must be an object");
  if (p.contains("formula")) {
    if (!p["formula"].is_string()) invalid("profile.formula must be a string");
    double support = get_double(p, "support", 0.0);
    if (support < 0) invalid("profile.support must be >= 0");
    try {
      return SwitchingProfile::from_expression(p["formula"].get<std::string>(), support);
    } catch (const ParseError& e) {
      throw HttpError{400, "invalid_formula", e.what()};
    }
  }
  if (p.contains("samples")) {
    const json& s = p["samples"];
    if (!s.is_object()) invalid("profile.samples must be an object {t, value}");
    auto t = get_array(s, "t");
    auto v = get_array(s, "value");
    if (t.size() > kMaxSamples) invalid("too many samples");
    try {
      return SwitchingProfile::from_samples(std::move(t), std::move(v));
    } catch (const InvalidArgument& e) {
      invalid(std::string("profile.samples: ") + e.what());
    }
  }
  invalid("profile needs 'formula' or 'samples'");
}

}  // namespace

// ---------------------------------------------------------------------------

std::int64_t quantize(double x) { return static_cast<std::int64_t>(std::llround(x / kQuantum)); }
double dequantize(std::int64_t q) { return static_cast<double>(q) * kQuantum; }

MatrixCacheKey make_key(int N, const DimensionlessConfig& cfg, PrecisionMode mode) {
  return MatrixCacheKey{N, quantize(cfg.omega), quantize(cfg.ell), quantize(cfg.T), mode};
}

MatrixCache::MatrixCache(std::size_t capacity) : capacity_(capacity) {}

std::shared_ptr<const PropagatorMatrices> MatrixCache::get(const MatrixCacheKey& key) {
  {
    std::shared_lock lk(mu_);
    auto it = index_.find(key);
    if (it != index_.end()) {
      auto hit = it->second->second;
      lk.unlock();
      std::unique_lock w(mu_);
      auto again = index_.find(key);
      if (again != index_.end()) lru_.splice(lru_.begin(), lru_, again->second);
      ++hits_;
      return hit;
    }
  }
  DimensionlessConfig cfg{dequantize(key.omega), dequantize(key.ell), dequantize(key.T)};
  auto built = std::make_shared<const PropagatorMatrices>(build(cfg, key.N, key.mode));
  std::unique_lock w(mu_);
  ++misses_;
  if (capacity_ == 0) return built;
  auto it = index_.find(key);
  if (it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
  }
  lru_.emplace_front(key, built);
  index_[key] = lru_.begin();
  while (lru_.size() > capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  return built;
}

std::size_t MatrixCache::size() const {
  std::shared_lock lk(mu_);
  return lru_.size();
}
std::uint64_t MatrixCache::hits() const {
  std::shared_lock lk(mu_);
  return hits_;
}
std::uint64_t MatrixCache::misses() const {
  std::shared_lock lk(mu_);
  return misses_;
}
void MatrixCache::clear() {
  std::unique_lock lk(mu_);
  lru_.clear();
  index_.clear();
}

// ---------------------------------------------------------------------------

struct Service::Jobs {
  struct Job {
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    Response response;
  };
  std::mutex mu;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::condition_variable idle;
  int active = 0;
  std::uint64_t next = 1;

  ~Jobs() {
    std::unique_lock lk(mu);
    idle.wait(lk, [&] { return active == 0; });
  }
};

Service::Service(ServiceOptions opt) : opt_(opt), cache_(opt.cache_size), jobs_(std::make_unique<Jobs>()) {}
Service::~Service() = default;

namespace {

struct Context {
  MatrixCache& cache;
  const ServiceOptions& opt;

  std::shared_ptr<const PropagatorMatrices> matrices(int N, const DimensionlessConfig& cfg, PrecisionMode mode) {
    return cache.get(make_key(N, cfg, mode));
  }

  OptimizationResult spacelike(int N, double omega_T0, double L, double delta_T, PrecisionMode mode) {
    auto s = t_schedule(N, L, delta_T);
    auto m = matrices(N, schedule_config(omega_T0, L, s.T_N), mode);
    auto r = optimize_spacelike(*m);
    if (m->diagnostics.flagged) {
      r.flagged = true;
      r.note = m->diagnostics.note;
    }
    return r;
  }
};

json do_expand(Context& ctx, const json& j) {
  int N = check_N(j, ctx.opt.max_n);
  double T = get_positive(j, "T");
  auto chi = parse_profile(j);
  auto e = expand(chi, N, T);
  json out{{"version", kSchemaVersion},
           {"N", N},
           {"T", T},
           {"coefficients", vec_json(e.c)},
           {"residual", num(residual(chi, e.c, T))},
           {"nodes", e.nodes},
           {"refinement_delta", num(e.refinement_delta)},
           {"converged", e.converged},
           {"method", e.method}};
  if (j.contains("preview")) {
    const json& p = j["preview"];
    if (!p.is_object()) invalid("field 'preview' must be an object {start, stop, count}");
    double a = get_double(p, "start"), b = get_double(p, "stop");
    long long n = get_int(p, "count");
    if (n < 2 || n > static_cast<long long>(kMaxGridPoints) || !(b > a)) invalid("preview: need stop > start and 2 <= count <= 2001");
    std::vector<double> t(static_cast<std::size_t>(n)), x(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
      x[i] = chi(t[i]);
    }
    auto r = reconstruct(e.c, T, t);
    json tj = json::array(), xj = json::array(), rj = json::array();
    for (std::size_t i = 0; i < t.size(); ++i) tj.push_back(num(t[i])), xj.push_back(num(x[i])), rj.push_back(num(r[i]));
    out["preview"] = {{"t", tj}, {"chi", xj}, {"reconstruction", rj}};
  }
  return out;
}

json do_report(Context& ctx, const json& j) {
  int N = check_N(j, ctx.opt.max_n);
  auto c = get_array(j, "c");
  if (c.size() != static_cast<std::size_t>(N + 1)) invalid("field 'c' must have N+1 entries");
  DimensionlessConfig cfg{get_double(j, "omega"), get_positive(j, "ell"), get_positive(j, "T")};
  auto mode = get_mode(j);
  auto m = ctx.matrices(N, cfg, mode);
  auto v = to_vec(c);
  if (v.squaredNorm() == 0) invalid("field 'c' must not be zero");
  auto r = harvest_report(v, *m);
  return {{"version", kSchemaVersion},
          {"report", report_json(r)},
          {"config", config_json(*m)},
          {"diagnostics", diagnostics_json(*m)}};
}

json do_sweep(Context& ctx, const json& j) {
  auto w = omega_grid(j);
  double L = get_positive(j, "L");
  auto mode = get_mode(j);
  const json& mj = field(j, "mode");
  if (!mj.is_string()) invalid("field 'mode' must be a string");
  std::string kind = mj.get<std::string>();
  json points = json::array();
  json out{{"version", kSchemaVersion}, {"mode", kind}, {"L", L}};

  if (kind == "canonical") {
    double T = get_double(j, "T", 1.0);
    if (!(T > 0)) invalid("field 'T' must be > 0");
    if (j.contains("N") && get_int(j, "N") != 0) invalid("canonical sweeps use N = 0");
    std::vector<HarvestReport> rs(w.size());
    parallel_for(static_cast<int>(w.size()), ctx.opt.threads, [&](int i) {
      auto m = ctx.matrices(0, schedule_config(w[i], L, T), mode);
      Eigen::VectorXd c(1);
      c(0) = std::pow(kPi, 0.25);
      rs[i] = harvest_report(c, *m);
    });
    for (std::size_t i = 0; i < w.size(); ++i) {
      double half = std::sqrt(kPi) * 0.5 * rs[i].abs_cDc / rs[i].norm2;
      points.push_back({{"omega", num(w[i])}, {"negativity", num(rs[i].negativity)},
                        {"half_abs_delta", num(half)}, {"ser", num(rs[i].ser)}});
    }
    out["T"] = T;
  } else if (kind == "spacelike" || kind == "rescaled") {
    int N = check_N(j, ctx.opt.max_n);
    double dT = 0;
    if (kind == "rescaled") {
      double ratio = get_double(j, "delta_ratio");
      if (ratio < 0) invalid("field 'delta_ratio' must be >= 0");
      dT = ratio * t_schedule(N, L).T_N;
      out["delta_ratio"] = ratio;
      out["delta_T"] = dT;
    }
    std::vector<OptimizationResult> rs(w.size());
    parallel_for(static_cast<int>(w.size()), ctx.opt.threads,
                 [&](int i) { rs[i] = ctx.spacelike(N, w[i], L, dT, mode); });
    for (std::size_t i = 0; i < w.size(); ++i)
      points.push_back({{"omega", num(w[i])}, {"value", num(rs[i].value)},
                        {"negativity", num(rs[i].report.negativity)}, {"ser", num(rs[i].report.ser)},
                        {"theta", num(rs[i].theta_star)}, {"flagged", rs[i].flagged}});
    out["N"] = N;
    out["T"] = t_schedule(N, L, dT).T_N;
  } else {
    invalid("field 'mode' must be canonical, spacelike or rescaled");
  }
  out["points"] = points;
  return out;
}

json do_optimize(Context& ctx, const json& j) {
  const json& mj = field(j, "mode");
  if (!mj.is_string()) invalid("field 'mode' must be a string");
  std::string kind = mj.get<std::string>();
  const json& p = field(j, "params");
  if (!p.is_object()) invalid("field 'params' must be an object");
  int N = check_N(p, ctx.opt.max_n);
  double L = get_positive(p, "L");
  double omega = get_double(p, "omega");
  auto mode = get_mode(p);
  OptimizationResult r;
  if (kind == "spacelike") {
    double dT = get_double(p, "delta_T", 0.0);
    if (dT < 0) invalid("params.delta_T must be >= 0");
    r = ctx.spacelike(N, omega, L, dT, mode);
  } else if (kind == "rescaled") {
    double dT = 0;
    if (p.contains("delta_T")) dT = get_double(p, "delta_T");
    else dT = get_double(p, "delta_ratio") * t_schedule(N, L).T_N;
    if (dT < 0) invalid("params.delta_T must be >= 0");
    double budget = get_double(p, "ser_budget", 0.05);
    r = ctx.spacelike(N, omega, L, dT, mode);
    if (r.report.ser > budget) {
      r.flagged = true;
      r.note = "SER " + std::to_string(r.report.ser) + " exceeds budget " + std::to_string(budget);
    }
  } else if (kind == "constrained") {
    double T = get_positive(p, "T");
    ConstrainedOptions co;
    if (p.contains("seed")) {
      long long s = get_int(p, "seed");
      if (s < 0) invalid("params.seed must be >= 0");
      co.seed = static_cast<std::uint64_t>(s);
    }
    if (p.contains("random_starts")) {
      long long k = get_int(p, "random_starts");
      if (k < 0 || k > 64) invalid("params.random_starts must be in [0, 64]");
      co.random_starts = static_cast<int>(k);
    }
    auto m = ctx.matrices(N, schedule_config(omega, L, T), mode);
    r = optimize_constrained(*m, alpha_support(N, T, L), co);
  } else {
    invalid("field 'mode' must be spacelike, rescaled or constrained");
  }
  if (r.omega_T0 == 0) r.omega_T0 = omega;
  return {{"version", kSchemaVersion}, {"result", result_json(r, kind)}};
}

Response run_guarded(const std::function<json()>& f) {
  try {
    return reply(200, f());
  } catch (const HttpError& e) {
    return reply(e.status, error_body(e.error, e.detail));
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::invalid_argument:
      case ErrorCode::domain:
        return reply(400, error_body("invalid_request", e.what()));
      case ErrorCode::parse:
        return reply(400, error_body("parse_error", e.what()));
      case ErrorCode::internal:
        return reply(500, error_body("internal", e.what()));
      default:
        return reply(422, error_body("numerical", e.what()));
    }
  } catch (const std::bad_alloc&) {
    return reply(422, error_body("numerical", "out of memory"));
  } catch (const std::exception& e) {
    return reply(500, error_body("internal", e.what()));
  }
}

}  // namespace

Response Service::handle(const std::string& method, const std::string& path, const std::string& body) {
  if (path == "/api/health") {
    if (method != "GET") return reply(405, error_body("method_not_allowed", "use GET"));
    return reply(200, {{"version", kSchemaVersion},
                       {"build", HARVESTKIT_VERSION},
                       {"max_N", opt_.max_n},
                       {"cache_size", cache_.capacity()}});
  }

  const std::string jobs_prefix = "/api/jobs/";
  if (path.rfind(jobs_prefix, 0) == 0) {
    if (method != "GET") return reply(405, error_body("method_not_allowed", "use GET"));
    std::string id = path.substr(jobs_prefix.size());
    std::shared_ptr<Jobs::Job> job;
    {
      std::lock_guard lk(jobs_->mu);
      auto it = jobs_->jobs.find(id);
      if (it != jobs_->jobs.end()) job = it->second;
    }
    if (!job) return reply(404, error_body("not_found", "unknown job '" + id + "'"));
    std::lock_guard lk(job->mu);
    if (!job->done) return reply(202, {{"version", kSchemaVersion}, {"job_id", id}, {"status", "running"}});
    return job->response;
  }

  using Handler = json (*)(Context&, const json&);
  Handler h = nullptr;
  bool long_running = false;
  if (path == "/api/expand") h = do_expand;
  else if (path == "/api/report") h = do_report;
  else if (path == "/api/sweep") h = do_sweep, long_running = true;
  else if (path == "/api/optimize") h = do_optimize, long_running = true;
  else return reply(404, error_body("not_found", "no endpoint " + path));
  if (method != "POST") return reply(405, error_body("method_not_allowed", "use POST"));

  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error& e) {
    json b = error_body("malformed_json", e.what());
    b["position"] = e.byte;
    return reply(400, b);
  }
  try {
    check_object(req);
  } catch (const HttpError& e) {
    return reply(e.status, error_body(e.error, e.detail));
  }

  auto compute = [this, h, req]() {
    Context ctx{cache_, opt_};
    return run_guarded([&] { return h(ctx, req); });
  };
  if (!long_running) return compute();

  auto job = std::make_shared<Jobs::Job>();
  std::string id;
  {
    std::lock_guard lk(jobs_->mu);
    id = "job-" + std::to_string(jobs_->next++);
    jobs_->jobs[id] = job;
    ++jobs_->active;
    std::thread([jobs = jobs_.get(), job, compute] {
      Response r = compute();
      {
        std::lock_guard jl(job->mu);
        job->response = std::move(r);
        job->done = true;
        job->cv.notify_all();
      }
      std::lock_guard lk(jobs->mu);
      --jobs->active;
      jobs->idle.notify_all();
    }).detach();
  }
  std::unique_lock lk(job->mu);
  if (job->cv.wait_for(lk, opt_.job_threshold, [&] { return job->done; })) {
    Response r = job->response;
    lk.unlock();
    std::lock_guard jl(jobs_->mu);
    jobs_->jobs.erase(id);
    return r;
  }
  return reply(202, {{"version", kSchemaVersion}, {"job_id", id}, {"status", "running"}});
}

}  // namespace hk::server
