#include "harvestkit/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "harvestkit/errors.hpp"
#include "harvestkit/specfun.hpp"

namespace hk {

namespace {

const double kSqrtPi = 1.7724538509055160273;
const double kTwoPi = 6.283185307179586477;
const double kGolden = 0.6180339887498948482;

void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index i;
  v.cwiseAbs().maxCoeff(&i);
  if (v(i) < 0) v = -v;
}

struct ThetaOpt {
  double theta = 0;
  double lambda = -1e300;
  Eigen::VectorXd vec;
};

double lambda_max(const Eigen::MatrixXd& M, Eigen::VectorXd* vec) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, vec ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  Eigen::Index k = M.rows() - 1;
  if (vec) *vec = es.eigenvectors().col(k);
  return es.eigenvalues()(k);
}

// max over theta of lambda_max(Re(A) cos theta + Im(A) sin theta - Wr); A symmetric complex.
ThetaOpt theta_eigen_max(const Eigen::MatrixXcd& A, const Eigen::MatrixXd& Wr, const SpacelikeOptions& opt) {
  const Eigen::MatrixXd Ar = A.real(), Ai = A.imag();
  auto mat = [&](double th) -> Eigen::MatrixXd {
    Eigen::MatrixXd M = Ar * std::cos(th) + Ai * std::sin(th) - Wr;
    return 0.5 * (M + M.transpose());
  };
  auto g = [&](double th) { return lambda_max(mat(th), nullptr); };
  const int K = std::max(8, opt.theta_grid);
  ThetaOpt best;
  for (int k = 0; k < K; ++k) {
    double th = kTwoPi * k / K;
    double v = g(th);
    if (v > best.lambda) {
      best.lambda = v;
      best.theta = th;
    }
  }
  double a = best.theta - kTwoPi / K, b = best.theta + kTwoPi / K;
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = g(x1), f2 = g(x2);
  while (b - a > opt.theta_tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = g(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = g(x1);
    }
  }
  double th = 0.5 * (a + b);
  Eigen::VectorXd v;
  double lam = lambda_max(mat(th), &v);
  if (lam >= best.lambda) {
    best.lambda = lam;
    best.theta = th;
    best.vec = v;
  } else {
    lambda_max(mat(best.theta), &best.vec);
  }
  best.theta = std::fmod(best.theta + kTwoPi, kTwoPi);
  if (best.theta > kTwoPi - 1e-12) best.theta = 0;
  fix_sign(best.vec);
  return best;
}

}  // namespace

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  int nt = std::min(thread_count(threads), n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) break;
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

ScheduleParams t_schedule(int N, double L, double delta_T) {
  if (N < 0) throw InvalidArgument("N must be >= 0");
  if (!(L > 0) || !std::isfinite(L)) throw DomainError("L must be positive");
  if (!(delta_T >= 0) || !std::isfinite(delta_T)) throw DomainError("delta_T must be >= 0");
  ScheduleParams s;
  s.N = N;
  s.L = L;
  double r = std::sqrt(2.0 * N + 1);
  s.f_N = r / (2 + r);
  s.delta_T = delta_T;
  s.T_N = (L / 2) / r * s.f_N + delta_T;
  return s;
}

DimensionlessConfig schedule_config(double omega_T0, double L, double T) {
  if (!(T > 0)) throw DomainError("T must be positive");
  return DimensionlessConfig{omega_T0 * T, L / T, T};
}

TailResult tail_integral(int N, double L) {
  auto s = t_schedule(N, L);
  const double x0 = (L / 2) / s.T_N;
  TailResult r;
  r.per_n.resize(N + 1);
  std::vector<double> buf(N + 1);
  for (int n = 0; n <= N; ++n) {
    auto f = [&](double x) {
      hermite_functions(n, x, buf.data());
      return buf[n] * buf[n];
    };
    double err = 0;
    // psi_n^2 decays as e^{-x^2} x^{2n}; 40 widths past the edge is far below any resolvable tail
    double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, x0, x0 + 40, 20, 1e-12, &err);
    v *= 2;
    err *= 2;
    if (!(err <= 1e-8 * v + 1e-300)) throw ConvergenceError("tail quadrature did not converge (error " + std::to_string(err) + ")");
    r.per_n[n] = v;
    if (v > r.value) {
      r.value = v;
      r.argmax = n;
      r.abs_error = err;
    }
  }
  return r;
}

SignallingRatio basis_signalling_ratio(int N, double L) {
  auto s = t_schedule(N, L);
  DimensionlessConfig cfg = schedule_config(0.0, L, s.T_N);
  auto d = element_folded(GeneratorKind::Delta, N, N, cfg);
  auto h = element_folded(GeneratorKind::H, N, N, cfg);
  SignallingRatio r;
  r.log10_delta = d.log10_abs;
  r.log10_hadamard = h.log10_abs;
  r.log10_ratio = d.log10_abs - h.log10_abs;
  double sign = (d.value.real() < 0) != (h.value.real() < 0) ? -1.0 : 1.0;
  if (r.log10_ratio < -300 || d.value == cd(0, 0) || h.value == cd(0, 0)) {
    r.underflow = true;
    r.ratio = 0;
  } else {
    r.ratio = sign * std::pow(10.0, r.log10_ratio);
  }
  return r;
}

Eigen::MatrixXd m_plus(const PropagatorMatrices& m, double theta) {
  Eigen::MatrixXd M = 0.5 * (m.H.real() * std::cos(theta) + m.H.imag() * std::sin(theta)) - m.W.real();
  return 0.5 * (M + M.transpose());
}

OptimizationResult optimize_spacelike(const PropagatorMatrices& m, const SpacelikeOptions& opt) {
  Eigen::MatrixXd Wr = m.W.real();
  Wr = 0.5 * (Wr + Wr.transpose());
  auto t = theta_eigen_max(0.5 * m.H, Wr, opt);
  OptimizationResult r;
  r.c_star = t.vec;
  r.value = kSqrtPi * t.lambda;
  r.theta_star = t.theta;
  r.omega_T0 = m.cfg.omega / m.cfg.T;
  r.T = m.cfg.T;
  r.report = harvest_report(r.c_star, m);
  return r;
}

double max_signalling(const PropagatorMatrices& m, const SpacelikeOptions& opt) {
  auto t = theta_eigen_max(m.Delta, Eigen::MatrixXd::Zero(m.N + 1, m.N + 1), opt);
  return t.lambda;
}

OptimizationResult optimize_spacelike(int N, double omega_T0, double L, double delta_T, PrecisionMode mode) {
  auto s = t_schedule(N, L, delta_T);
  auto m = build(schedule_config(omega_T0, L, s.T_N), N, mode);
  auto r = optimize_spacelike(m);
  if (m.diagnostics.flagged) {
    r.flagged = true;
    r.note = m.diagnostics.note;
  }
  return r;
}

std::vector<CurvePoint> sweep_gap(int N, double L, const std::vector<double>& omegas_T0, double delta_T,
                                  PrecisionMode mode, int threads) {
  std::vector<CurvePoint> out(omegas_T0.size());
  parallel_for(static_cast<int>(omegas_T0.size()), threads, [&](int i) {
    auto r = optimize_spacelike(N, omegas_T0[i], L, delta_T, mode);
    out[i] = CurvePoint{omegas_T0[i], r.value, r.report.negativity, r.report.ser, r.theta_star};
  });
  return out;
}

OptimizationResult optimize_rescaled(int N, double L, double delta_T, double omega_T0, double ser_budget,
                                     PrecisionMode mode) {
  if (!(delta_T >= 0)) throw DomainError("delta_T must be >= 0");
  auto r = optimize_spacelike(N, omega_T0, L, delta_T, mode);
  if (r.report.ser > ser_budget) {
    r.flagged = true;
    r.note = "SER " + std::to_string(r.report.ser) + " exceeds budget " + std::to_string(ser_budget);
  }
  return r;
}

const std::vector<double>& default_delta_ratios() {
  static const std::vector<double> r{0.005, 0.01, 0.02, 0.024, 0.03, 0.04};
  return r;
}

std::vector<RescaledPeak> rescaled_scan(int N, double L, const std::vector<double>& ratios,
                                        const std::vector<double>& omegas_T0, double ser_budget, PrecisionMode mode,
                                        int threads) {
  const double TN = t_schedule(N, L).T_N;
  std::vector<RescaledPeak> out;
  for (double q : ratios) {
    RescaledPeak p;
    p.delta_ratio = q;
    p.delta_T = q * TN;
    p.curve = sweep_gap(N, L, omegas_T0, p.delta_T, mode, threads);
    p.peak = *std::max_element(p.curve.begin(), p.curve.end(),
                               [](const CurvePoint& a, const CurvePoint& b) { return a.value < b.value; });
    p.within_budget = p.peak.ser <= ser_budget;
    out.push_back(std::move(p));
  }
  return out;
}

double alpha_support(int N, double T, double L) {
  if (!(T > 0) || !(L > 0)) throw DomainError("T and L must be positive");
  return T * std::sqrt(2.0 * N + 1) / (L / 2);
}

// ---------------------------------------------------------------------------

ConstrainedObjective::ConstrainedObjective(const PropagatorMatrices& m, double alpha)
    : G_(m.G), W_(m.W.real()), DR_(m.Delta.real()), DI_(m.Delta.imag()), alpha2_(alpha * alpha) {
  if (!(alpha > 0)) throw DomainError("alpha must be positive");
  W_ = 0.5 * (W_ + W_.transpose());
  DR_ = 0.5 * (DR_ + DR_.transpose());
  DI_ = 0.5 * (DI_ + DI_.transpose());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m.Delta);
  dnorm_ = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double ConstrainedObjective::objective(const Eigen::VectorXd& x) const {
  Eigen::VectorXd c = x.normalized();
  Eigen::VectorXcd cc = c.cast<cd>();
  cd z = cc.dot(G_ * cc);
  return alpha2_ * kSqrtPi * (std::abs(z) - c.dot(W_ * c));
}

Eigen::Vector2d ConstrainedObjective::constraints(const Eigen::VectorXd& x) const {
  if (dnorm_ == 0) return Eigen::Vector2d::Zero();
  Eigen::VectorXd c = x.normalized();
  return Eigen::Vector2d(c.dot(DR_ * c), c.dot(DI_ * c)) / dnorm_;
}

double ConstrainedObjective::residual(const Eigen::VectorXd& x) const { return constraints(x).norm(); }

double ConstrainedObjective::merit(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  const double nx = x.norm();
  Eigen::VectorXd c = x / nx;
  Eigen::VectorXcd cc = c.cast<cd>();
  Eigen::VectorXcd gz = G_ * cc;
  cd z = cc.dot(gz);
  double az = std::abs(z);
  Eigen::VectorXd gw = W_ * c;
  double f = alpha2_ * kSqrtPi * (az - c.dot(gw));
  Eigen::Vector2d h = Eigen::Vector2d::Zero();
  Eigen::VectorXd gr, gi;
  if (dnorm_ > 0) {
    gr = DR_ * c / dnorm_;
    gi = DI_ * c / dnorm_;
    h = Eigen::Vector2d(c.dot(gr), c.dot(gi));
  }
  double phi = -f / f_scale + multipliers.dot(h) + 0.5 * penalty * h.squaredNorm();
  if (grad) {
    Eigen::VectorXd gf = -2 * gw;
    if (az > 0) gf += 2 * (std::conj(z) * gz).real() / az;
    gf *= alpha2_ * kSqrtPi;
    Eigen::VectorXd gc = -gf / f_scale;
    if (dnorm_ > 0) {
      gc += 2 * (multipliers(0) + penalty * h(0)) * gr;
      gc += 2 * (multipliers(1) + penalty * h(1)) * gi;
    }
    *grad = (gc - c * c.dot(gc)) / nx;
  }
  return phi;
}

namespace {

// BFGS on the degree-0 homogeneous merit; x kept at unit norm.
void bfgs_minimize(const ConstrainedObjective& obj, Eigen::VectorXd& x, int max_iter) {
  const int n = static_cast<int>(x.size());
  x.normalize();
  Eigen::VectorXd g;
  double phi = obj.merit(x, &g);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  int stall = 0;
  for (int it = 0; it < max_iter; ++it) {
    if (g.norm() < 1e-13) break;
    Eigen::VectorXd p = -Hinv * g;
    double slope = p.dot(g);
    if (slope >= 0) {
      Hinv.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }
    // keep steps on the scale of the sphere
    double pn = p.norm();
    double step = pn > 0.5 ? 0.5 / pn : 1.0;
    Eigen::VectorXd xn, gn;
    double phin = phi;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * p;
      phin = obj.merit(xn, &gn);
      if (phin <= phi + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    Eigen::VectorXd s = xn - x, y = gn - g;
    double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (!scaled) {
        Hinv *= sy / y.squaredNorm();
        scaled = true;
      }
      double rho = 1 / sy;
      Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    double dec = phi - phin;
    x = xn / xn.norm();
    phi = obj.merit(x, &g);
    if (dec <= 1e-16 * std::max(1.0, std::abs(phi))) {
      if (++stall >= 3) break;
    } else {
      stall = 0;
    }
  }
}

struct StartResult {
  Eigen::VectorXd c;
  double value = -1e300;
  double residual = 1e300;
};

StartResult run_start(const ConstrainedObjective& proto, Eigen::VectorXd x, const ConstrainedOptions& opt) {
  ConstrainedObjective obj = proto;
  obj.multipliers.setZero();
  obj.penalty = opt.initial_penalty;
  x.normalize();
  for (int k = 0; k < opt.max_outer; ++k) {
    bfgs_minimize(obj, x, opt.max_inner);
    Eigen::Vector2d h = obj.constraints(x);
    if (h.norm() <= opt.residual_tol) break;
    obj.multipliers += obj.penalty * h;
    obj.penalty *= 2;
  }
  StartResult r;
  r.c = x.normalized();
  fix_sign(r.c);
  r.value = obj.objective(r.c);
  r.residual = obj.residual(r.c);
  return r;
}

}  // namespace

OptimizationResult optimize_constrained(const PropagatorMatrices& m, double alpha, const ConstrainedOptions& opt) {
  ConstrainedObjective obj(m, alpha);
  Eigen::MatrixXd Wr = m.W.real();
  Wr = 0.5 * (Wr + Wr.transpose());
  auto eig = theta_eigen_max(m.G, Wr, SpacelikeOptions{});
  const double unconstrained = alpha * alpha * kSqrtPi * eig.lambda;
  obj.f_scale = std::max(std::abs(unconstrained), 1e-300);

  std::vector<Eigen::VectorXd> starts{eig.vec};
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  for (int s = 0; s < opt.random_starts; ++s) {
    Eigen::VectorXd v(m.N + 1);
    for (auto& e : v) e = nd(rng);
    starts.push_back(v.normalized());
  }
  std::vector<StartResult> res(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) res[i] = run_start(obj, starts[i], opt);

  int best = -1, best_any = 0;
  for (int i = 0; i < static_cast<int>(res.size()); ++i) {
    if (res[i].residual <= opt.residual_tol && (best < 0 || res[i].value > res[best].value)) best = i;
    if (res[i].residual < res[best_any].residual) best_any = i;
  }
  OptimizationResult r;
  bool feasible = best >= 0;
  const StartResult& b = feasible ? res[best] : res[best_any];
  r.c_star = b.c;
  r.value = b.value;
  r.constraint_residual = b.residual;
  r.alpha = alpha;
  r.omega_T0 = m.cfg.omega / m.cfg.T;
  r.T = m.cfg.T;
  r.report = harvest_report(r.c_star, m);
  if (!feasible) {
    r.converged = false;
    r.flagged = true;
    r.note = "no start reached the constraint tolerance";
  }
  return r;
}

OptimizationResult optimize_constrained(int N, double T, double L, double omega_T0, const ConstrainedOptions& opt,
                                        PrecisionMode mode) {
  auto m = build(schedule_config(omega_T0, L, T), N, mode);
  return optimize_constrained(m, alpha_support(N, T, L), opt);
}

cd signalling_form(const Eigen::VectorXd& c, int N, double T, double L, double omega_T0, PrecisionMode mode) {
  BuildOptions bo;
  bo.skip_H = bo.skip_W = true;
  auto m = build(schedule_config(omega_T0, L, T), N, mode, bo);
  if (c.size() != N + 1) throw InvalidArgument("coefficient vector length does not match N");
  Eigen::VectorXcd cc = c.cast<cd>();
  return cc.dot(m.Delta * cc);
}

double find_zero_signalling_gap(const Eigen::VectorXd& c, int N, double T, double L, double lo, double hi,
                                double tol, PrecisionMode mode) {
  if (!(hi > lo)) throw InvalidArgument("empty omega range");
  cd zlo = signalling_form(c, N, T, L, lo, mode);
  cd zhi = signalling_form(c, N, T, L, hi, mode);
  // real part first, imaginary part when the real part only touches zero
  auto changes = [](double x, double y) { return (x < 0 && y > 0) || (x > 0 && y < 0) || ((x == 0) != (y == 0)); };
  int part = -1;
  if (changes(zlo.real(), zhi.real()))
    part = 0;
  else if (changes(zlo.imag(), zhi.imag()))
    part = 1;
  if (part < 0) throw PreconditionError("c^T Delta c does not change sign on the range");
  auto pick = [&](cd z) { return part == 0 ? z.real() : z.imag(); };
  double flo = pick(zlo), fhi = pick(zhi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    double fm = pick(signalling_form(c, N, T, L, mid, mode));
    if (fm == 0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ConstrainedScan constrained_scan(int N, double T, double L, const std::vector<double>& omegas_T0,
                                 const ConstrainedOptions& opt, PrecisionMode mode, int threads) {
  if (omegas_T0.empty()) throw InvalidArgument("empty omega grid");
  ConstrainedScan s;
  s.omegas_T0 = omegas_T0;
  s.results.resize(omegas_T0.size());
  parallel_for(static_cast<int>(omegas_T0.size()), threads,
               [&](int i) { s.results[i] = optimize_constrained(N, T, L, omegas_T0[i], opt, mode); });
  int b = -1;
  for (int i = 0; i < static_cast<int>(s.results.size()); ++i)
    if (s.results[i].converged && (b < 0 || s.results[i].value > s.results[b].value)) b = i;
  if (b < 0) {
    s.best = s.results[0];
    return s;
  }
  // golden refinement of the gap between the neighbouring grid points
  double a = omegas_T0[std::max(0, b - 1)], z = omegas_T0[std::min<int>(b + 1, omegas_T0.size() - 1)];
  OptimizationResult best = s.results[b];
  auto eval = [&](double w) {
    auto r = optimize_constrained(N, T, L, w, opt, mode);
    if (r.converged && r.value > best.value) best = r;
    return r.converged ? r.value : -1e300;
  };
  if (z > a) {
    double x1 = z - kGolden * (z - a), x2 = a + kGolden * (z - a);
    double f1 = eval(x1), f2 = eval(x2);
    for (int it = 0; it < 14; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kGolden * (z - a);
        f2 = eval(x2);
      } else {
        z = x2;
        x2 = x1;
        f2 = f1;
        x1 = z - kGolden * (z - a);
        f1 = eval(x1);
      }
    }
  }
  s.best = best;
  // zero of Re c*^T Delta(omega) c* around the optimum, widening the bracket if needed
  double w0 = best.omega_T0;
  double span = omegas_T0.size() > 1 ? std::abs(omegas_T0[1] - omegas_T0[0]) : 0.05;
  for (double h = span / 4; h <= 2 * (omegas_T0.back() - omegas_T0.front()) + span; h *= 2) {
    try {
      double lo = std::max(1e-6, w0 - h);
      s.zero_gap_T0 = find_zero_signalling_gap(best.c_star, N, T, L, lo, w0 + h, 1e-4, mode);
      s.zero_gap_found = true;
      break;
    } catch (const PreconditionError&) {
    }
  }
  return s;
}

}  // namespace hk
