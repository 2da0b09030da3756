#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "harvestkit/mp.hpp"
#include "harvestkit/propagators.hpp"

namespace hk {

// double: 53-bit accumulation; extended: 106-bit (double-double equivalent);
// auto: MPFR with the working precision raised until the measured cancellation is covered.
enum class PrecisionMode { Double, Extended, Auto };

const char* to_string(PrecisionMode m);
PrecisionMode precision_mode_from_string(const std::string& s);

struct MatrixDiagnostics {
  unsigned bits = 0;                         // accumulation precision of the accepted pass
  unsigned required_bits = 0;                // precision the cancellation estimate asked for
  std::array<double, 3> cancellation_digits{};  // H, Delta, W: max log10(sum|terms| / |sum|)
  int passes = 0;
  bool flagged = false;  // precision budget exceeded; entries may be inaccurate
  std::string note;
};

struct PropagatorMatrices {
  int N = 0;
  DimensionlessConfig cfg;
  Eigen::MatrixXcd H, Delta, W, G;  // T0 = 1 units
  PrecisionMode precision_mode = PrecisionMode::Auto;
  MatrixDiagnostics diagnostics;

  const Eigen::MatrixXcd& get(GeneratorKind k) const;
};

struct BuildOptions {
  bool full_square = false;  // compute both triangles instead of mirroring
  unsigned max_bits = 8192;
  int threads = 0;           // 0: HARVESTKIT_THREADS or hardware concurrency
  bool skip_W = false;       // Delta/H only (signalling scans)
  bool skip_H = false;
};

PropagatorMatrices build(const DimensionlessConfig& cfg, int N, PrecisionMode mode = PrecisionMode::Auto,
                         const BuildOptions& opt = {});

// Single element via the same folded contraction (used for high-order diagonal probes).
// Returns log10|P_nm| and the value when representable.
struct ElementProbe {
  cd value;
  double log10_abs = 0;
  unsigned bits = 0;
};
ElementProbe element_folded(GeneratorKind kind, int n, int m, const DimensionlessConfig& cfg, unsigned max_bits = 16384);

// Literal Leibniz/Hermite quadruple sum over the stored derivative stacks.
class LeibnizEvaluator {
 public:
  LeibnizEvaluator(const DimensionlessConfig& cfg, int max_n, unsigned bits = 0);
  ~LeibnizEvaluator();
  LeibnizEvaluator(const LeibnizEvaluator&) = delete;
  LeibnizEvaluator& operator=(const LeibnizEvaluator&) = delete;

  int max_n() const;
  unsigned bits() const;
  cd element(GeneratorKind kind, int n, int m);
  // log10(sum |terms| / |sum|) of the last element() call
  double last_cancellation_digits() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

cd element(GeneratorKind kind, int n, int m, const DimensionlessConfig& cfg);

// Cauchy-contour oracle: [z^n w^m] e^{-z^2-w^2} P(2z, 2w) on a 2D trapezoid grid,
// precision raised until the round-off bound meets rel_tol. Returns all n, m <= nmax.
struct OracleResult {
  Eigen::MatrixXcd P;
  unsigned bits = 0;
};
OracleResult oracle_matrix(GeneratorKind kind, int nmax, const DimensionlessConfig& cfg, double rel_tol = 1e-12,
                           double floor_rel = 1e-20, unsigned max_bits = 4096);
cd element_oracle(GeneratorKind kind, int n, int m, const DimensionlessConfig& cfg);

// Nonlocal Wightman matrix W(Lambda_a^-, Lambda_b^+) via the oracle path.
Eigen::MatrixXcd nonlocal_wightman(const DimensionlessConfig& cfg, int N);

// Export: JSON nested [re, im] pairs; binary "mcab" header then little-endian float64 pairs.
void export_json(const PropagatorMatrices& m, GeneratorKind kind, const std::string& path);
void export_binary(const PropagatorMatrices& m, GeneratorKind kind, const std::string& path);
struct BinaryMatrix {
  int N = 0;
  double omega = 0, ell = 0, T = 0;
  std::string kind;
  Eigen::MatrixXcd P;
};
BinaryMatrix import_binary(const std::string& path);

int thread_count(int requested = 0);

}  // namespace hk
