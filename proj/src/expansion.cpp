#include "harvestkit/expansion.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "harvestkit/errors.hpp"
#include "harvestkit/specfun.hpp"

namespace hk {

SwitchingProfile SwitchingProfile::from_samples(std::vector<double> t, std::vector<double> v) {
  if (t.size() != v.size()) throw InvalidArgument("sample columns differ in length");
  if (t.size() < 4) throw InvalidArgument("at least 4 samples required");
  std::vector<std::size_t> idx(t.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
  SwitchingProfile p;
  p.sampled_ = true;
  p.t_.resize(t.size());
  p.y_.resize(t.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    p.t_[i] = t[idx[i]];
    p.y_[i] = v[idx[i]];
    if (!std::isfinite(p.t_[i]) || !std::isfinite(p.y_[i])) throw DomainError("non-finite sample");
    if (i && !(p.t_[i] > p.t_[i - 1])) throw InvalidArgument("duplicate sample time");
  }
  // natural spline second derivatives (tridiagonal solve)
  const std::size_t n = p.t_.size();
  p.m_.assign(n, 0.0);
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double h0 = p.t_[i] - p.t_[i - 1], h1 = p.t_[i + 1] - p.t_[i];
    double a = h0 / 6, b = (h0 + h1) / 3, cc = h1 / 6;
    double r = (p.y_[i + 1] - p.y_[i]) / h1 - (p.y_[i] - p.y_[i - 1]) / h0;
    double den = b - a * c[i - 1];
    c[i] = cc / den;
    d[i] = (r - a * d[i - 1]) / den;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    p.m_[i] = d[i] - c[i] * p.m_[i + 1];
    if (i == 1) break;
  }
  p.lo_ = p.t_.front();
  p.hi_ = p.t_.back();
  for (std::size_t i = 1; i < n; ++i) p.max_spacing_ = std::max(p.max_spacing_, p.t_[i] - p.t_[i - 1]);
  return p;
}

SwitchingProfile SwitchingProfile::from_function(std::function<double(double)> f, double support_half_width) {
  if (!f) throw InvalidArgument("empty profile function");
  if (!(support_half_width >= 0) || !std::isfinite(support_half_width)) throw DomainError("bad support half-width");
  SwitchingProfile p;
  p.f_ = std::move(f);
  p.support_ = support_half_width;
  p.lo_ = -support_half_width;
  p.hi_ = support_half_width;
  return p;
}

SwitchingProfile SwitchingProfile::from_expression(const std::string& text, double support_half_width) {
  auto e = Expression::parse(text);
  return from_function([e](double t) { return e(t); }, support_half_width);
}

double SwitchingProfile::operator()(double t) const {
  if (!sampled_) return f_(t);
  if (t < lo_ || t > hi_) return 0.0;
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - t_.begin(), 1), t_.size() - 1);
  double h = t_[k] - t_[k - 1];
  double a = (t_[k] - t) / h, b = (t - t_[k - 1]) / h;
  return a * y_[k - 1] + b * y_[k] + ((a * a * a - a) * m_[k - 1] + (b * b * b - b) * m_[k]) * h * h / 6;
}

SwitchingProfile read_csv_profile(std::istream& is) {
  std::vector<double> t, v;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    std::string rest;
    if (!(ls >> a >> b)) {
      if (!header_seen && t.empty()) {
        header_seen = true;
        continue;
      }
      throw ParseError("bad CSV row on line " + std::to_string(lineno), lineno);
    }
    if (ls >> rest) throw ParseError("expected two columns on line " + std::to_string(lineno), lineno);
    t.push_back(a);
    v.push_back(b);
  }
  return SwitchingProfile::from_samples(std::move(t), std::move(v));
}

SwitchingProfile read_csv_profile_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_csv_profile(is);
}

namespace {

Eigen::VectorXd gh_coefficients(const SwitchingProfile& chi, int N, double T, int K) {
  auto rule = gauss_hermite(K);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(N + 1);
  std::vector<double> psi(N + 1);
  const double sT = std::sqrt(T);
  for (int i = 0; i < K; ++i) {
    double x = rule.nodes[i];
    double f = chi(T * x);
    if (!std::isfinite(f)) throw DomainError("profile is not finite at t = " + std::to_string(T * x));
    if (f == 0) continue;
    hermite_functions(N, x, psi.data());
    double wf = rule.scaled_weights[i] * f * sT;
    for (int n = 0; n <= N; ++n) c(n) += wf * psi[n];
  }
  return c;
}

// composite 20-point Gauss-Legendre on panels no wider than the local wavelength of h_N,
// aligned with the profile's breakpoints
struct PanelRule {
  std::vector<double> t, w;
};

PanelRule panel_rule(const SwitchingProfile& chi, int N, double T) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  double extent = T * (std::sqrt(2.0 * N + 1) + 12);
  extent = std::max({extent, std::abs(chi.t_min()), std::abs(chi.t_max())});
  std::vector<double> br{-extent, 0.0, extent};
  if (chi.t_max() > chi.t_min()) {
    br.push_back(chi.t_min());
    br.push_back(chi.t_max());
  }
  if (chi.sampled() && chi.knots().size() <= 20000) br.insert(br.end(), chi.knots().begin(), chi.knots().end());
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  const double hmax = 0.25 * 3.14159265358979323846 * T / std::sqrt(2.0 * N + 1);
  const auto& x = GL::abscissa();
  const auto& wt = GL::weights();
  PanelRule r;
  auto push = [&](double a, double b) {
    double m = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] == 0) {
        r.t.push_back(m);
        r.w.push_back(h * wt[k]);
        continue;
      }
      r.t.push_back(m - h * x[k]);
      r.w.push_back(h * wt[k]);
      r.t.push_back(m + h * x[k]);
      r.w.push_back(h * wt[k]);
    }
  };
  for (std::size_t i = 1; i < br.size(); ++i) {
    double a = br[i - 1], b = br[i];
    int np = std::max(1, static_cast<int>(std::ceil((b - a) / hmax)));
    for (int k = 0; k < np; ++k) push(a + (b - a) * k / np, a + (b - a) * (k + 1) / np);
  }
  return r;
}

Eigen::VectorXd panel_coefficients(const SwitchingProfile& chi, int N, double T) {
  auto r = panel_rule(chi, N, T);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(N + 1);
  std::vector<double> psi(N + 1);
  const double isT = 1 / std::sqrt(T);
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    double f = chi(r.t[i]);
    if (!std::isfinite(f)) throw DomainError("profile is not finite at t = " + std::to_string(r.t[i]));
    if (f == 0) continue;
    hermite_functions(N, r.t[i] / T, psi.data());
    double wf = r.w[i] * f * isT;
    for (int n = 0; n <= N; ++n) c(n) += wf * psi[n];
  }
  return c;
}

}  // namespace

Expansion expand(const SwitchingProfile& chi, int N, double T) {
  if (N < 0) throw InvalidArgument("N must be >= 0");
  if (!(T > 0) || !std::isfinite(T)) throw DomainError("T must be positive");
  if (chi.sampled()) {
    // half wavelength of h_N near the origin
    double need = 3.14159265358979323846 * T / std::sqrt(2.0 * N + 1);
    if (chi.max_spacing() > need)
      throw PreconditionError("samples too sparse for N=" + std::to_string(N) + ": spacing " +
                              std::to_string(chi.max_spacing()) + " > " + std::to_string(need));
  }
  const int K = 4 * (N + 1);
  Eigen::VectorXd c1 = gh_coefficients(chi, N, T, K);
  Eigen::VectorXd c2 = gh_coefficients(chi, N, T, 2 * K);
  Expansion e;
  e.c = c2;
  e.T = T;
  e.nodes = 2 * K;
  e.refinement_delta = (c2 - c1).cwiseAbs().maxCoeff() / std::max(1.0, c2.cwiseAbs().maxCoeff());
  e.converged = e.refinement_delta <= 1e-10;
  if (!e.converged) {
    // nonsmooth profile: panel quadrature aligned with its breakpoints
    Eigen::VectorXd p = panel_coefficients(chi, N, T);
    e.method = "panels";
    e.refinement_delta = (p - c2).cwiseAbs().maxCoeff() / std::max(1.0, p.cwiseAbs().maxCoeff());
    e.c = p;
    e.nodes = 0;
  }
  return e;
}

double reconstruct(const Eigen::VectorXd& c, double T, double t) {
  if (!(T > 0)) throw DomainError("T must be positive");
  const int N = static_cast<int>(c.size()) - 1;
  if (N < 0) return 0;
  std::vector<double> psi(N + 1);
  hermite_functions(N, t / T, psi.data());
  double s = 0;
  for (int n = 0; n <= N; ++n) s += c(n) * psi[n];
  return s / std::sqrt(T);
}

std::vector<double> reconstruct(const Eigen::VectorXd& c, double T, const std::vector<double>& t) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = reconstruct(c, T, t[i]);
  return out;
}

double l2_norm(const SwitchingProfile& chi, double T, int N) {
  auto r = panel_rule(chi, N, T);
  double s = 0;
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    double v = chi(r.t[i]);
    s += r.w[i] * v * v;
  }
  return std::sqrt(s);
}

double residual(const SwitchingProfile& chi, const Eigen::VectorXd& c, double T) {
  if (!(T > 0)) throw DomainError("T must be positive");
  const int N = std::max(static_cast<int>(c.size()) - 1, 0);
  auto r = panel_rule(chi, N, T);
  std::vector<double> psi(N + 1);
  const double isT = 1 / std::sqrt(T);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    double v = chi(r.t[i]);
    hermite_functions(N, r.t[i] / T, psi.data());
    double rec = 0;
    for (int n = 0; n < c.size(); ++n) rec += c(n) * psi[n];
    double d = v - rec * isT;
    num += r.w[i] * d * d;
    den += r.w[i] * v * v;
  }
  if (!(den > 0)) throw DomainError("profile has zero norm");
  return std::sqrt(num / den);
}

}  // namespace hk
