#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "harvestkit/harvesting.hpp"
#include "harvestkit/matrices.hpp"

namespace hk {

// Lengths and times in T0 units throughout this module; omega_T0 = Omega T0.

struct ScheduleParams {
  int N = 0;
  double L = 0;
  double T_N = 0;  // includes delta_T
  double f_N = 0;
  double delta_T = 0;
};

// T_N = (L/2)/sqrt(2N+1) f(N) + delta_T,  f(N) = sqrt(2N+1)/(2 + sqrt(2N+1))
ScheduleParams t_schedule(int N, double L, double delta_T = 0);

// Dimensionless configuration for basis width T: omega = Omega T, ell = L / T.
DimensionlessConfig schedule_config(double omega_T0, double L, double T);

struct TailResult {
  double value = 0;           // max_n of the tail mass
  int argmax = 0;
  double abs_error = 0;       // quadrature error estimate at argmax
  std::vector<double> per_n;  // tail mass of every n <= N
};

// max over n <= N of int_{|t| > L/2} h_n(t, T_N)^2 dt
TailResult tail_integral(int N, double L);

struct SignallingRatio {
  double log10_ratio = 0;
  double ratio = 0;         // 0 when below the double range (see underflow)
  bool underflow = false;
  double log10_delta = 0;   // log10 |Delta_NN|
  double log10_hadamard = 0;
};

// Delta_NN / H_NN for the gapless basis element n = N at the schedule T_N.
SignallingRatio basis_signalling_ratio(int N, double L);

struct OptimizationResult {
  Eigen::VectorXd c_star;  // unit norm
  double value = 0;        // optimized objective (lambda^2 units)
  double theta_star = 0;   // spacelike path
  double omega_T0 = 0;
  double T = 0;            // basis width used
  double alpha = 1;        // constrained path
  double constraint_residual = 0;  // |c^T Delta c| / ||Delta||_2
  HarvestReport report;
  bool converged = true;
  bool flagged = false;
  std::string note;
};

struct SpacelikeOptions {
  int theta_grid = 256;
  double theta_tol = 1e-6;
};

// M+(theta) = (Re H cos theta + Im H sin theta)/2 - Re W; value = sqrt(pi) max_theta lambda_max.
Eigen::MatrixXd m_plus(const PropagatorMatrices& m, double theta);
OptimizationResult optimize_spacelike(const PropagatorMatrices& m, const SpacelikeOptions& opt = {});
OptimizationResult optimize_spacelike(int N, double omega_T0, double L, double delta_T = 0,
                                      PrecisionMode mode = PrecisionMode::Auto);

// max over unit real c of |c^T Delta c| = max_theta lambda_max(Re(e^{-i theta} Delta))
double max_signalling(const PropagatorMatrices& m, const SpacelikeOptions& opt = {});

struct CurvePoint {
  double omega_T0 = 0;
  double value = 0;       // optimized harvested negativity (unclamped)
  double negativity = 0;  // total negativity at the optimizer
  double ser = 0;
  double theta = 0;
};

std::vector<CurvePoint> sweep_gap(int N, double L, const std::vector<double>& omegas_T0, double delta_T = 0,
                                  PrecisionMode mode = PrecisionMode::Auto, int threads = 0);

// Spacelike eigenproblem on the delta_T-shifted schedule; flagged when SER exceeds ser_budget.
OptimizationResult optimize_rescaled(int N, double L, double delta_T, double omega_T0, double ser_budget,
                                     PrecisionMode mode = PrecisionMode::Auto);

struct RescaledPeak {
  double delta_T = 0;
  double delta_ratio = 0;  // delta_T / T_N
  std::vector<CurvePoint> curve;
  CurvePoint peak;
  bool within_budget = false;
};

// Sweep omega for each delta_T / T_N in ratios; returns one curve per ratio with its peak.
std::vector<RescaledPeak> rescaled_scan(int N, double L, const std::vector<double>& ratios,
                                        const std::vector<double>& omegas_T0, double ser_budget,
                                        PrecisionMode mode = PrecisionMode::Auto, int threads = 0);
const std::vector<double>& default_delta_ratios();

// alpha = T sqrt(2N+1) / (L/2)
double alpha_support(int N, double T, double L);

struct ConstrainedOptions {
  int random_starts = 8;
  std::uint64_t seed = 20240607;
  double residual_tol = 1e-8;
  int max_outer = 60;
  int max_inner = 400;
  double initial_penalty = 10.0;
};

// Augmented-Lagrangian merit on x in R^{N+1} (c = x/|x|):
//   phi(x) = -f(c)/f_scale + sum_i mu_i h_i + (rho/2) sum_i h_i^2,
//   f = alpha^2 sqrt(pi)(|c^T G c| - c^T W c),  h = (Re, Im)(c^T Delta c)/||Delta||_2
class ConstrainedObjective {
 public:
  ConstrainedObjective(const PropagatorMatrices& m, double alpha);
  double objective(const Eigen::VectorXd& c) const;  // f at c / |c|
  Eigen::Vector2d constraints(const Eigen::VectorXd& c) const;
  double residual(const Eigen::VectorXd& c) const;   // |c^T Delta c| / ||Delta||_2 at c/|c|
  double merit(const Eigen::VectorXd& x, Eigen::VectorXd* grad = nullptr) const;

  Eigen::Vector2d multipliers{0, 0};
  double penalty = 10.0;
  double f_scale = 1.0;
  double delta_norm() const { return dnorm_; }

 private:
  Eigen::MatrixXcd G_;
  Eigen::MatrixXd W_, DR_, DI_;
  double alpha2_;
  double dnorm_;
};

OptimizationResult optimize_constrained(const PropagatorMatrices& m, double alpha, const ConstrainedOptions& opt = {});
OptimizationResult optimize_constrained(int N, double T, double L, double omega_T0, const ConstrainedOptions& opt = {},
                                        PrecisionMode mode = PrecisionMode::Auto);

// Bisection root of omega -> c^T Delta(omega) c on [lo, hi] to tol in Omega T0: the real part
// when it changes sign on the range, otherwise the imaginary part.
double find_zero_signalling_gap(const Eigen::VectorXd& c, int N, double T, double L, double lo, double hi,
                                double tol = 1e-4, PrecisionMode mode = PrecisionMode::Auto);
cd signalling_form(const Eigen::VectorXd& c, int N, double T, double L, double omega_T0,
                   PrecisionMode mode = PrecisionMode::Auto);

struct ConstrainedScan {
  std::vector<double> omegas_T0;
  std::vector<OptimizationResult> results;
  OptimizationResult best;
  double zero_gap_T0 = 0;  // root of Re c*^T Delta(omega) c* near the best gap
  bool zero_gap_found = false;
};

ConstrainedScan constrained_scan(int N, double T, double L, const std::vector<double>& omegas_T0,
                                 const ConstrainedOptions& opt = {}, PrecisionMode mode = PrecisionMode::Auto,
                                 int threads = 0);

// Runs f(i) for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

}  // namespace hk
