#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "harvestkit/server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <thread>

using nlohmann::json;
using hk::server::Service;
using hk::server::ServiceOptions;

namespace {

json post(Service& s, const std::string& path, const json& body, int expect = 200) {
  auto r = s.handle("POST", path, body.dump());
  INFO(r.body);
  CHECK(r.status == expect);
  return json::parse(r.body);
}

const double kC0 = std::pow(3.14159265358979323846, 0.25);

json canonical_report() { return {{"version", 1}, {"c", {kC0}}, {"N", 0}, {"omega", 2.3}, {"ell", 5.0}, {"T", 1.0}}; }

}  // namespace

TEST_CASE("health") {
  Service s(ServiceOptions{8, 40});
  auto r = s.handle("GET", "/api/health", "");
  CHECK(r.status == 200);
  auto j = json::parse(r.body);
  CHECK(j["version"] == 1);
  CHECK(j["max_N"] == 40);
  CHECK(j["build"].is_string());
  CHECK(s.handle("POST", "/api/health", "").status == 405);
  CHECK(s.handle("GET", "/api/nothing", "").status == 404);
}

TEST_CASE("canonical report") {
  Service s;
  auto j = post(s, "/api/report", canonical_report());
  double neg = j["report"]["negativity"];
  double ser = j["report"]["ser"];
  MESSAGE("canonical negativity " << neg << " ser " << ser);
  CHECK(neg > 1e-7);
  CHECK(neg < 1e-5);
  CHECK(ser > 0.03);
  CHECK(ser < 0.07);
  CHECK(j["version"] == 1);
  CHECK(j["config"]["omega"] == doctest::Approx(2.3));
}

TEST_CASE("validation errors are 400 with error and detail") {
  Service s(ServiceOptions{4, 10});
  auto r = s.handle("POST", "/api/report", "{\"version\": 1, \"c\": [1,");
  CHECK(r.status == 400);
  auto j = json::parse(r.body);
  CHECK(j["error"] == "malformed_json");
  CHECK(j["position"].get<int>() > 0);
  CHECK(j["detail"].get<std::string>().find("parse error") != std::string::npos);

  json base = canonical_report();
  auto bad = [&](json b) {
    auto jj = post(s, "/api/report", b, 400);
    CHECK(jj.contains("error"));
    CHECK(jj.contains("detail"));
  };
  json b = base;
  b.erase("version");
  bad(b);
  b = base, b["version"] = 2, bad(b);
  b = base, b["N"] = 11, b["c"] = std::vector<double>(12, 1.0), bad(b);
  b = base, b["N"] = 1, bad(b);
  b = base, b["ell"] = -1, bad(b);
  b = base, b["omega"] = "x", bad(b);
  b = base, b["precision"] = "quad", bad(b);
  b = base, b["c"] = {0.0}, bad(b);
  bad(json::array({1, 2}));

  auto f = post(s, "/api/expand", {{"version", 1}, {"profile", {{"formula", "exp(-t^2"}}}, {"N", 4}, {"T", 1}}, 400);
  CHECK(f["error"] == "invalid_formula");
  post(s, "/api/optimize", {{"version", 1}, {"mode", "annealing"}, {"params", {{"N", 1}, {"L", 5}, {"omega", 1}}}},
       400);
  post(s, "/api/sweep", {{"version", 1}, {"mode", "spacelike"}, {"N", 2}, {"L", 5},
                         {"omega_range", {{"start", 0}, {"stop", 1e6}, {"step", 0.1}}}}, 400);
  CHECK(s.handle("GET", "/api/expand", "").status == 405);
}

TEST_CASE("numerical failures are 422") {
  Service s;
  std::vector<double> t, v;
  for (int i = -10; i <= 10; ++i) t.push_back(i * 0.5), v.push_back(1.0);
  auto j = post(s, "/api/expand",
                {{"version", 1}, {"profile", {{"samples", {{"t", t}, {"value", v}}}}}, {"N", 60}, {"T", 0.3}}, 422);
  CHECK(j["error"] == "numerical");
  CHECK(!j["detail"].get<std::string>().empty());
}

TEST_CASE("expand") {
  Service s;
  json req{{"version", 1},
           {"profile", {{"formula", "exp(-t^2/2)"}}},
           {"N", 6},
           {"T", 1.0},
           {"preview", {{"start", -3}, {"stop", 3}, {"count", 7}}}};
  auto j = post(s, "/api/expand", req);
  CHECK(j["coefficients"].size() == 7);
  CHECK(j["coefficients"][0].get<double>() == doctest::Approx(kC0).epsilon(1e-12));
  CHECK(j["residual"].get<double>() < 1e-10);
  CHECK(j["preview"]["t"].size() == 7);
  CHECK(j["preview"]["reconstruction"][3].get<double>() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("idempotence and cache transparency") {
  Service s(ServiceOptions{32, 120});
  const std::vector<std::pair<std::string, json>> reqs{
      {"/api/report", canonical_report()},
      {"/api/report", {{"version", 1}, {"c", {0.3, -0.2, 0.9, 0.1}}, {"N", 3}, {"omega", 1.7}, {"ell", 4.0}, {"T", 0.8}}},
      {"/api/sweep",
       {{"version", 1}, {"mode", "spacelike"}, {"N", 4}, {"L", 5}, {"omega_range", {{"start", 1}, {"stop", 2}, {"step", 0.5}}}}},
      {"/api/sweep",
       {{"version", 1}, {"mode", "canonical"}, {"L", 5}, {"omega_range", {{"start", 2}, {"stop", 2.6}, {"step", 0.3}}}}},
      {"/api/optimize", {{"version", 1}, {"mode", "spacelike"}, {"params", {{"N", 6}, {"L", 5}, {"omega", 2}}}}},
      {"/api/optimize",
       {{"version", 1}, {"mode", "rescaled"}, {"params", {{"N", 6}, {"L", 5}, {"omega", 2}, {"delta_ratio", 0.02}}}}},
      {"/api/optimize",
       {{"version", 1},
        {"mode", "constrained"},
        {"params", {{"N", 4}, {"T", 2}, {"L", 5}, {"omega", 0.5}, {"seed", 3}, {"random_starts", 2}}}}},
      {"/api/expand", {{"version", 1}, {"profile", {{"formula", "cos(pi*t/2)^2"}, {"support", 1}}}, {"N", 10}, {"T", 0.5}}},
  };
  std::vector<std::string> cold;
  for (auto& [p, b] : reqs) cold.push_back(s.handle("POST", p, b.dump()).body);
  CHECK(s.cache().size() > 0);
  auto misses = s.cache().misses();
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    auto warm = s.handle("POST", reqs[i].first, reqs[i].second.dump());
    CHECK(warm.status == 200);
    CHECK(warm.body == cold[i]);
  }
  CHECK(s.cache().misses() == misses);
  CHECK(s.cache().hits() > 0);

  Service nocache(ServiceOptions{0, 120});
  for (std::size_t i = 0; i < reqs.size(); ++i) CHECK(nocache.handle("POST", reqs[i].first, reqs[i].second.dump()).body == cold[i]);

  // keys quantize: formatting noise below 1e-6 hits the same entry
  json a = canonical_report(), b = canonical_report();
  b["omega"] = 2.3 + 1e-9;
  CHECK(s.handle("POST", "/api/report", a.dump()).body == s.handle("POST", "/api/report", b.dump()).body);
}

TEST_CASE("optimize results") {
  Service s;
  auto j = post(s, "/api/optimize", {{"version", 1}, {"mode", "spacelike"}, {"params", {{"N", 3}, {"L", 5}, {"omega", 2.5}}}});
  auto& r = j["result"];
  CHECK(r["c"].size() == 4);
  double n2 = 0;
  for (double x : r["c"]) n2 += x * x;
  CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r["value"].get<double>() == doctest::Approx(r["report"]["harvested_unclamped"].get<double>()).epsilon(1e-9));
  auto f = post(s, "/api/optimize",
                {{"version", 1}, {"mode", "rescaled"}, {"params", {{"N", 3}, {"L", 5}, {"omega", 2.5}, {"delta_T", 0.3}, {"ser_budget", 0}}}});
  CHECK(f["result"]["flagged"] == true);
}

TEST_CASE("LRU eviction") {
  hk::server::MatrixCache c(2);
  auto key = [](double w) { return hk::server::make_key(1, {w, 3.0, 1.0}, hk::PrecisionMode::Double); };
  auto a = c.get(key(1));
  c.get(key(2));
  c.get(key(1));
  c.get(key(3));  // evicts 2
  CHECK(c.size() == 2);
  auto m = c.misses();
  c.get(key(1));
  CHECK(c.misses() == m);
  c.get(key(2));
  CHECK(c.misses() == m + 1);
  CHECK(a->cfg.omega == 1.0);
}

TEST_CASE("long requests become jobs") {
  ServiceOptions o;
  o.job_threshold = std::chrono::milliseconds(0);
  Service s(o);
  json req{{"version", 1}, {"mode", "spacelike"}, {"N", 20}, {"L", 5},
           {"omega_range", {{"start", 0}, {"stop", 3}, {"step", 0.5}}}};
  auto r = s.handle("POST", "/api/sweep", req.dump());
  REQUIRE(r.status == 202);
  auto j = json::parse(r.body);
  std::string id = j["job_id"];
  CHECK(j["status"] == "running");
  hk::server::Response done;
  for (int i = 0; i < 6000; ++i) {
    done = s.handle("GET", "/api/jobs/" + id, "");
    if (done.status != 202) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  CHECK(done.status == 200);
  CHECK(json::parse(done.body)["points"].size() == 7);
  CHECK(s.handle("GET", "/api/jobs/job-999", "").status == 404);

  Service direct;
  CHECK(direct.handle("POST", "/api/sweep", req.dump()).body == done.body);
}

TEST_CASE("loopback HTTP") {
  Service service(ServiceOptions{8, 50});
  httplib::Server srv;
  auto dispatch = [&](const httplib::Request& req, httplib::Response& res) {
    auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  srv.Get(R"(/api/.*)", dispatch);
  srv.Post(R"(/api/.*)", dispatch);
  int port = srv.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto h = cli.Get("/api/health");
  REQUIRE(h);
  CHECK(h->status == 200);
  CHECK(json::parse(h->body)["max_N"] == 50);
  auto r = cli.Post("/api/report", canonical_report().dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->get_header_value("Content-Type") == "application/json");
  CHECK(r->body == service.handle("POST", "/api/report", canonical_report().dump()).body);
  auto bad = cli.Post("/api/report", "{oops", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  srv.stop();
  t.join();
}
