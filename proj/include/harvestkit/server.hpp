#pragma once

#include <chrono>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <unordered_map>

#include "harvestkit/matrices.hpp"

namespace hk::server {

inline constexpr int kSchemaVersion = 1;

// omega, ell, T quantized to 1e-6
struct MatrixCacheKey {
  int N = 0;
  std::int64_t omega = 0, ell = 0, T = 0;
  PrecisionMode mode = PrecisionMode::Auto;
  auto tie() const { return std::tie(N, omega, ell, T, mode); }
  bool operator<(const MatrixCacheKey& o) const { return tie() < o.tie(); }
  bool operator==(const MatrixCacheKey& o) const { return tie() == o.tie(); }
};

std::int64_t quantize(double x);
double dequantize(std::int64_t q);
MatrixCacheKey make_key(int N, const DimensionlessConfig& cfg, PrecisionMode mode);

class MatrixCache {
 public:
  explicit MatrixCache(std::size_t capacity);
  // builds at the quantized configuration on a miss
  std::shared_ptr<const PropagatorMatrices> get(const MatrixCacheKey& key);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t hits() const;
  std::uint64_t misses() const;
  void clear();

 private:
  using Entry = std::pair<MatrixCacheKey, std::shared_ptr<const PropagatorMatrices>>;
  std::size_t capacity_;
  mutable std::shared_mutex mu_;
  std::list<Entry> lru_;  // front = most recent
  std::map<MatrixCacheKey, std::list<Entry>::iterator> index_;
  std::uint64_t hits_ = 0, misses_ = 0;
};

struct ServiceOptions {
  std::size_t cache_size = 32;
  int max_n = 120;
  std::chrono::milliseconds job_threshold{30000};
  int threads = 0;
};

struct Response {
  int status = 200;
  std::string body;
};

class Service {
 public:
  explicit Service(ServiceOptions opt = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle(const std::string& method, const std::string& path, const std::string& body);

  MatrixCache& cache() { return cache_; }
  const ServiceOptions& options() const { return opt_; }

 private:
  struct Jobs;
  ServiceOptions opt_;
  MatrixCache cache_;
  std::unique_ptr<Jobs> jobs_;
};

}  // namespace hk::server
