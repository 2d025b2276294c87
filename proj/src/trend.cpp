#include "btf/trend.hpp"

#include <stdexcept>
#include <vector>

namespace btf {

CompositeDiffMatrix build_composite_tf_matrix(int T, int k) {
  if (k < 0) throw std::invalid_argument("build_composite_tf_matrix: k must be >= 0");
  // T = 1 with k = 0 degenerates to the anchor row alone (single-dose data)
  if (T < k + 2 && !(T == 1 && k == 0))
    throw std::invalid_argument("build_composite_tf_matrix: need T >= k + 2");

  int L = 1;
  for (int q = 1; q <= k + 1; ++q) L += T - q;

  std::vector<Eigen::Triplet<double>> trip;
  trip.emplace_back(0, 0, 1.0);  // anchor row
  int row = 1;
  // order-q block: binomial coefficients with alternating signs
  std::vector<double> coef = {1.0};
  for (int q = 1; q <= k + 1; ++q) {
    std::vector<double> next(coef.size() + 1, 0.0);
    for (size_t m = 0; m < coef.size(); ++m) {
      next[m] += coef[m];
      next[m + 1] -= coef[m];
    }
    coef = next;  // q=1: [1,-1]; q=2: [1,-2,1]; ...
    for (int s = 0; s + q < T; ++s, ++row)
      for (int m = 0; m <= q; ++m) trip.emplace_back(row, s + m, coef[m]);
  }

  CompositeDiffMatrix out;
  out.matrix.resize(L, T);
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  out.matrix.makeCompressed();
  out.order = k;
  out.T = T;
  return out;
}

Eigen::SparseMatrix<double> build_prior_precision(const CompositeDiffMatrix& delta, double rho2,
                                                  const Eigen::VectorXd& tau2) {
  if (rho2 <= 0.0) throw std::invalid_argument("build_prior_precision: rho2 must be positive");
  if (tau2.size() != delta.rows())
    throw std::invalid_argument("build_prior_precision: tau2 length mismatch");
  if ((tau2.array() <= 0.0).any())
    throw std::invalid_argument("build_prior_precision: tau2 entries must be positive");

  Eigen::VectorXd w = (rho2 * tau2.array()).inverse();
  Eigen::SparseMatrix<double> weighted = w.asDiagonal() * delta.matrix;
  Eigen::SparseMatrix<double> prec = delta.matrix.transpose() * weighted;
  prec.makeCompressed();
  return prec;
}

}  // namespace btf
