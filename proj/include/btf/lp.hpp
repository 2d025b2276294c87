#pragma once

#include <Eigen/Dense>

namespace btf {

// Minimize ||y - X w||_1 subject to C w >= g, via a dense primal simplex on
//   min sum(e+ + e-)  s.t.  X w + e+ - e- = y,  C w >= g.
// Requires g <= 0 so that w = 0 is feasible (true for all constraint systems
// built in this project); throws otherwise.
Eigen::VectorXd l1_fit_constrained(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& C, const Eigen::VectorXd& g);

}  // namespace btf
