#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace hk {

// Arithmetic expression in one variable t; grammar in docs/expression-grammar.md.
class Expression {
 public:
  static Expression parse(const std::string& text);
  double operator()(double t) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
};

// Switching profile chi(t): sampled (natural cubic spline, zero outside the samples) or an evaluator.
class SwitchingProfile {
 public:
  static SwitchingProfile from_samples(std::vector<double> t, std::vector<double> v);
  static SwitchingProfile from_function(std::function<double(double)> f, double support_half_width = 0);
  static SwitchingProfile from_expression(const std::string& text, double support_half_width = 0);

  double operator()(double t) const;
  bool sampled() const { return sampled_; }
  // sampled: [t_min, t_max]; evaluator: [-support, support] or 0 when unknown
  double t_min() const { return lo_; }
  double t_max() const { return hi_; }
  double support_half_width() const { return support_; }
  double max_spacing() const { return max_spacing_; }
  const std::vector<double>& knots() const { return t_; }

 private:
  bool sampled_ = false;
  std::function<double(double)> f_;
  std::vector<double> t_, y_, m_;  // spline knots, values, second derivatives
  double lo_ = 0, hi_ = 0, support_ = 0, max_spacing_ = 0;
};

// Two columns t,value; '#' comments and one non-numeric header line allowed.
SwitchingProfile read_csv_profile(std::istream& is);
SwitchingProfile read_csv_profile_file(const std::string& path);

struct Expansion {
  Eigen::VectorXd c;  // c_n = <h_n(., T), chi>, T0 = 1
  double T = 1;
  int nodes = 0;                 // quadrature nodes of the returned coefficients
  double refinement_delta = 0;   // max |c(K) - c(2K)| / max(1, |c|)
  bool converged = true;         // refinement_delta <= 1e-10
  std::string method = "gauss-hermite";  // "panels" when the Gauss-Hermite doubling check failed
};

Expansion expand(const SwitchingProfile& chi, int N, double T);

// sum_n c_n h_n(t, T)
std::vector<double> reconstruct(const Eigen::VectorXd& c, double T, const std::vector<double>& t);
double reconstruct(const Eigen::VectorXd& c, double T, double t);

// ||chi - sum c_n h_n||_2 / ||chi||_2 by panel quadrature over the basis extent and the profile support
double residual(const SwitchingProfile& chi, const Eigen::VectorXd& c, double T);
double l2_norm(const SwitchingProfile& chi, double T, int N);

}  // namespace hk
