#pragma once

#include <Eigen/Dense>

#include "harvestkit/matrices.hpp"

namespace hk {

// All quantities in lambda^2 units with T0 = 1. c_n = sqrt(T0) <h_n, chi>.
struct HarvestReport {
  double negativity = 0;             // max(0, unclamped)
  double negativity_unclamped = 0;   // sqrt(pi)(|c^T G c| - c^T W c) / c^T c
  double harvested_negativity = 0;   // max(0, harvested_unclamped)
  double harvested_unclamped = 0;    // sqrt(pi)(|c^T H c|/2 - c^T W c) / c^T c
  double ser = 0;                    // sqrt(pi) |c^T Delta c| / 2 / c^T c / negativity, 0 if negativity is 0
  double abs_cGc = 0, cWc = 0, abs_cDc = 0, abs_cHc = 0;  // raw bilinear forms (not rescaled)
  double norm2 = 0;                  // c^T c
};

double gamma_minus(cd G_ab, double W_aa, double W_bb);

HarvestReport harvest_report(const Eigen::VectorXd& c, const PropagatorMatrices& m);
double rescaled_negativity(const Eigen::VectorXd& c, const PropagatorMatrices& m, bool clamp = true);
double harvested_negativity(const Eigen::VectorXd& c, const PropagatorMatrices& m, bool clamp = true);
double ser(const Eigen::VectorXd& c, const PropagatorMatrices& m);
// alpha^2 * rescaled negativity
double rescaled_negativity_alpha(const Eigen::VectorXd& c, const PropagatorMatrices& m, double alpha_support,
                                 bool clamp = true);

// Leading-order detector state in the basis |g g>, |g e>, |e g>, |e e> (detector A first):
//   [1 - Waa - Wbb, 0, 0, -conj(Gab); 0, Wbb, Wab, 0; 0, conj(Wab), Waa, 0; -Gab, 0, 0, 0]
// with Waa = Wbb = c^T W c, Gab = c^T G c, Wab = c^T W_ab c, all scaled by lambda2.
Eigen::Matrix4cd leading_density_matrix(const Eigen::VectorXd& c, const PropagatorMatrices& m,
                                        const Eigen::MatrixXcd& W_nonlocal, double lambda2 = 1.0);
Eigen::Matrix4cd density_matrix(cd G_ab, double W_aa, double W_bb, cd W_ab);

// Partial transpose on B.
Eigen::Matrix4cd partial_transpose(const Eigen::Matrix4cd& rho);
// Sum of |negative eigenvalues| of the partial transpose.
double negativity_bruteforce(const Eigen::Matrix4cd& rho);

}  // namespace hk
