#pragma once

#include <Eigen/Dense>

#include "btf/rng.hpp"

namespace btf {

enum class ShrinkageUpdate {
  derived,        // inverse-gamma conditionals for tau^2 with shape (D+1)/2
  paper_literal,  // shape D+1 and no rho^2 scaling in the rate
};

// One horseshoe+ block update for a single column: redraws tau2, c, phi and
// eta per difference row from their inverse-gamma conditionals. row_norms_sq
// holds ||(Delta V_j)_l||^2 for each of the L difference rows.
void horseshoe_block_update(const Eigen::VectorXd& row_norms_sq, double rho2, int D,
                            Eigen::VectorXd& tau2, Eigen::VectorXd& c, Eigen::VectorXd& phi,
                            Eigen::VectorXd& eta, Rng& rng,
                            ShrinkageUpdate variant = ShrinkageUpdate::derived);

// Forward draw of one (tau2, c, phi, eta) row from the horseshoe+ prior;
// the successive-conditional correctness tests compare against this.
void horseshoe_forward_draw(double& tau2, double& c, double& phi, double& eta, Rng& rng);

}  // namespace btf
