#include "harvestkit/server.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdio>
#include <string>

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

bool split_bind(const std::string& bind, std::string& host, int& port) {
  auto colon = bind.rfind(':');
  if (colon == std::string::npos) return false;
  host = bind.substr(0, colon);
  try {
    std::size_t used = 0;
    port = std::stoi(bind.substr(colon + 1), &used);
    if (used != bind.size() - colon - 1) return false;
  } catch (...) {
    return false;
  }
  return port >= 0 && port <= 65535 && !host.empty();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harvestkit JSON API server"};
  std::string bind = "127.0.0.1:8080";
  hk::server::ServiceOptions opt;
  int threshold_s = 30;
  app.add_option("--bind", bind, "host:port (port 0 picks a free port)");
  app.add_option("--cache-size", opt.cache_size, "matrix cache entries")->check(CLI::NonNegativeNumber);
  app.add_option("--max-n", opt.max_n, "largest accepted N")->check(CLI::NonNegativeNumber);
  app.add_option("--job-threshold", threshold_s, "seconds before a request becomes a job")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--threads", opt.threads, "workers per sweep (0: automatic)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  std::string host;
  int port = 0;
  if (!split_bind(bind, host, port)) {
    std::fprintf(stderr, "event=error kind=config message=\"--bind expects host:port\"\n");
    return 2;
  }
  opt.job_threshold = std::chrono::seconds(threshold_s);

  hk::server::Service service(opt);
  httplib::Server srv;
  auto dispatch = [&](const httplib::Request& req, httplib::Response& res) {
    auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  srv.Get(R"(/api/.*)", dispatch);
  srv.Post(R"(/api/.*)", dispatch);
  srv.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    std::fprintf(stderr, "event=request method=%s path=%s status=%d\n", req.method.c_str(), req.path.c_str(),
                 res.status);
  });

  if (port == 0) {
    port = srv.bind_to_any_port(host);
    if (port < 0) {
      std::fprintf(stderr, "event=error kind=bind host=%s\n", host.c_str());
      return 1;
    }
  } else if (!srv.bind_to_port(host, port)) {
    std::fprintf(stderr, "event=error kind=bind host=%s port=%d\n", host.c_str(), port);
    return 1;
  }
  g_server = &srv;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::fprintf(stderr, "event=listening host=%s port=%d cache_size=%zu max_n=%d\n", host.c_str(), port,
               opt.cache_size, opt.max_n);
  std::fflush(stderr);
  srv.listen_after_bind();
  std::fprintf(stderr, "event=stopped\n");
  return 0;
}
