#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "harvestkit/errors.hpp"
#include "harvestkit/matrices.hpp"

namespace hk {

namespace {

// binary layout: "mcab" | u32 version | i32 N | f64 omega | f64 ell | f64 T | char kind[16] | (N+1)^2 complex (row-major)
constexpr char kMagic[4] = {'m', 'c', 'a', 'b'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw IoError("truncated matrix file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void export_json(const PropagatorMatrices& m, GeneratorKind kind, const std::string& path) {
  const Eigen::MatrixXcd& P = m.get(kind);
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["N"] = m.N;
  j["omega"] = m.cfg.omega;
  j["ell"] = m.cfg.ell;
  j["T"] = m.cfg.T;
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < P.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < P.cols(); ++c) row.push_back({P(r, c).real(), P(r, c).imag()});
    rows.push_back(std::move(row));
  }
  j["matrix"] = std::move(rows);
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path);
  os << j.dump() << '\n';
  if (!os) throw IoError("write failed: " + path);
}

void export_binary(const PropagatorMatrices& m, GeneratorKind kind, const std::string& path) {
  const Eigen::MatrixXcd& P = m.get(kind);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path);
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::int32_t>(os, m.N);
  put<double>(os, m.cfg.omega);
  put<double>(os, m.cfg.ell);
  put<double>(os, m.cfg.T);
  char name[16] = {};
  std::strncpy(name, to_string(kind), sizeof(name) - 1);
  os.write(name, sizeof(name));
  for (int r = 0; r < P.rows(); ++r)
    for (int c = 0; c < P.cols(); ++c) {
      put<double>(os, P(r, c).real());
      put<double>(os, P(r, c).imag());
    }
  if (!os) throw IoError("write failed: " + path);
}

BinaryMatrix import_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("not an mcab matrix file", 0);
  if (get<std::uint32_t>(is) != kVersion) throw ParseError("unsupported mcab version", 4);
  BinaryMatrix b;
  b.N = get<std::int32_t>(is);
  if (b.N < 0 || b.N > 100000) throw ParseError("bad matrix size", 8);
  b.omega = get<double>(is);
  b.ell = get<double>(is);
  b.T = get<double>(is);
  char name[16];
  if (!is.read(name, 16)) throw IoError("truncated matrix file");
  b.kind.assign(name, strnlen(name, 16));
  b.P.resize(b.N + 1, b.N + 1);
  for (int r = 0; r <= b.N; ++r)
    for (int c = 0; c <= b.N; ++c) {
      double re = get<double>(is);
      double im = get<double>(is);
      b.P(r, c) = cd(re, im);
    }
  return b;
}

}  // namespace hk
