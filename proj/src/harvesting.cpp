#include "harvestkit/harvesting.hpp"

#include <cmath>

#include "harvestkit/errors.hpp"

namespace hk {

namespace {

const double kSqrtPi = 1.7724538509055160273;

cd quad(const Eigen::VectorXd& c, const Eigen::MatrixXcd& P) {
  if (c.size() != P.rows()) throw InvalidArgument("coefficient vector length does not match matrix order");
  return c.cast<cd>().dot(P * c.cast<cd>());
}

double norm2_checked(const Eigen::VectorXd& c) {
  if (!c.allFinite()) throw DomainError("non-finite switching coefficients");
  double n2 = c.squaredNorm();
  if (!(n2 > 0)) throw DomainError("zero switching coefficient vector");
  return n2;
}

}  // namespace

double gamma_minus(cd G_ab, double W_aa, double W_bb) {
  double d = (W_aa - W_bb) / 2;
  return std::sqrt(std::norm(G_ab) + d * d) - (W_aa + W_bb) / 2;
}

HarvestReport harvest_report(const Eigen::VectorXd& c, const PropagatorMatrices& m) {
  HarvestReport r;
  r.norm2 = norm2_checked(c);
  r.abs_cGc = std::abs(quad(c, m.G));
  r.cWc = quad(c, m.W).real();
  r.abs_cDc = std::abs(quad(c, m.Delta));
  r.abs_cHc = std::abs(quad(c, m.H));
  r.negativity_unclamped = kSqrtPi * (r.abs_cGc - r.cWc) / r.norm2;
  r.harvested_unclamped = kSqrtPi * (0.5 * r.abs_cHc - r.cWc) / r.norm2;
  r.negativity = std::max(0.0, r.negativity_unclamped);
  r.harvested_negativity = std::max(0.0, r.harvested_unclamped);
  r.ser = r.negativity > 0 ? kSqrtPi * 0.5 * r.abs_cDc / r.norm2 / r.negativity : 0.0;
  return r;
}

double rescaled_negativity(const Eigen::VectorXd& c, const PropagatorMatrices& m, bool clamp) {
  double n2 = norm2_checked(c);
  double v = kSqrtPi * (std::abs(quad(c, m.G)) - quad(c, m.W).real()) / n2;
  return clamp ? std::max(0.0, v) : v;
}

double harvested_negativity(const Eigen::VectorXd& c, const PropagatorMatrices& m, bool clamp) {
  double n2 = norm2_checked(c);
  double v = kSqrtPi * (0.5 * std::abs(quad(c, m.H)) - quad(c, m.W).real()) / n2;
  return clamp ? std::max(0.0, v) : v;
}

double ser(const Eigen::VectorXd& c, const PropagatorMatrices& m) { return harvest_report(c, m).ser; }

double rescaled_negativity_alpha(const Eigen::VectorXd& c, const PropagatorMatrices& m, double alpha_support,
                                 bool clamp) {
  if (!(alpha_support > 0)) throw DomainError("alpha must be positive");
  return alpha_support * alpha_support * rescaled_negativity(c, m, clamp);
}

Eigen::Matrix4cd density_matrix(cd G_ab, double W_aa, double W_bb, cd W_ab) {
  Eigen::Matrix4cd r = Eigen::Matrix4cd::Zero();
  r(0, 0) = 1 - W_aa - W_bb;
  r(0, 3) = -std::conj(G_ab);
  r(3, 0) = -G_ab;
  r(1, 1) = W_bb;
  r(2, 2) = W_aa;
  r(1, 2) = W_ab;
  r(2, 1) = std::conj(W_ab);
  return r;
}

Eigen::Matrix4cd leading_density_matrix(const Eigen::VectorXd& c, const PropagatorMatrices& m,
                                        const Eigen::MatrixXcd& W_nonlocal, double lambda2) {
  if (c.size() != m.N + 1) throw InvalidArgument("coefficient vector length does not match matrix order");
  if (W_nonlocal.rows() != m.N + 1 || W_nonlocal.cols() != m.N + 1)
    throw InvalidArgument("nonlocal W matrix has the wrong order");
  if (!c.allFinite()) throw DomainError("non-finite switching coefficients");
  double w = lambda2 * quad(c, m.W).real();
  return density_matrix(lambda2 * quad(c, m.G), w, w, lambda2 * quad(c, W_nonlocal));
}

Eigen::Matrix4cd partial_transpose(const Eigen::Matrix4cd& rho) {
  Eigen::Matrix4cd pt;
  // index = 2 a + b
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int b2 = 0; b2 < 2; ++b2) pt(2 * a + b, 2 * a2 + b2) = rho(2 * a + b2, 2 * a2 + b);
  return pt;
}

double negativity_bruteforce(const Eigen::Matrix4cd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(partial_transpose(rho), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  double s = 0;
  for (int i = 0; i < 4; ++i)
    if (es.eigenvalues()(i) < 0) s -= es.eigenvalues()(i);
  return s;
}

}  // namespace hk
