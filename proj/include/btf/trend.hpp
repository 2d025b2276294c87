#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace btf {

// Composite trend filtering operator: an anchor row e_1^T followed by the
// stacked difference blocks of orders 1..k+1, each with the alternating
// binomial coefficient pattern. L = 1 + sum_{q=1..k+1} (T - q).
struct CompositeDiffMatrix {
  Eigen::SparseMatrix<double> matrix;  // L x T
  int order = 0;                       // k
  int T = 0;

  int rows() const { return static_cast<int>(matrix.rows()); }
};

CompositeDiffMatrix build_composite_tf_matrix(int T, int k);

// Delta^T diag(1/(rho2 * tau2_l)) Delta; symmetric positive definite for any
// positive inputs thanks to the anchor row.
Eigen::SparseMatrix<double> build_prior_precision(const CompositeDiffMatrix& delta, double rho2,
                                                  const Eigen::VectorXd& tau2);

}  // namespace btf
