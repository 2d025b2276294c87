#include "btf/mvn.hpp"

#include <atomic>
#include <stdexcept>

namespace btf {
std::atomic<long> g_precision_ridge_count{0};
}

namespace btf {

PrecisionSampler::PrecisionSampler(const Eigen::SparseMatrix<double>& lambda)
    : dim_(static_cast<int>(lambda.rows())) {
  if (lambda.rows() != lambda.cols())
    throw std::invalid_argument("PrecisionSampler: matrix not square");
  llt_.compute(lambda);
  if (llt_.info() == Eigen::Success) return;
  // Near-singular systems (precision weights spanning many decades) can
  // defeat the factorization even though the matrix is SPD in exact
  // arithmetic. Escalate a ridge relative to the largest diagonal entry.
  double max_diag = 0.0;
  for (int i = 0; i < dim_; ++i) max_diag = std::max(max_diag, lambda.coeff(i, i));
  if (max_diag <= 0.0 || !std::isfinite(max_diag))
    throw std::runtime_error("PrecisionSampler: invalid diagonal");
  Eigen::SparseMatrix<double> eye(dim_, dim_);
  eye.setIdentity();
  for (double rel = 1e-14; rel <= 1e-5; rel *= 100.0) {
    Eigen::SparseMatrix<double> ridged = lambda + (rel * max_diag) * eye;
    llt_.compute(ridged);
    if (llt_.info() == Eigen::Success) {
      ++g_precision_ridge_count;
      return;
    }
  }
  throw std::runtime_error("PrecisionSampler: sparse Cholesky failed (matrix " +
                           std::to_string(lambda.rows()) + "x" + std::to_string(lambda.cols()) +
                           " not SPD?)");
}

Eigen::VectorXd PrecisionSampler::mean(const Eigen::VectorXd& h) const { return llt_.solve(h); }

Eigen::VectorXd PrecisionSampler::draw_centered(Rng& rng) const {
  Eigen::VectorXd z(dim_);
  for (int i = 0; i < dim_; ++i) z[i] = rng.normal();
  // P Lambda P^T = L L^T  =>  x = P^T L^{-T} z has covariance Lambda^{-1}
  Eigen::VectorXd u = llt_.matrixU().solve(z);
  return llt_.permutationPinv() * u;
}

Eigen::VectorXd PrecisionSampler::draw(const Eigen::VectorXd& h, Rng& rng) const {
  return mean(h) + draw_centered(rng);
}

Eigen::VectorXd mvn_sample_precision(const Eigen::VectorXd& h,
                                     const Eigen::SparseMatrix<double>& lambda, Rng& rng) {
  PrecisionSampler s(lambda);
  return s.draw(h, rng);
}

Eigen::VectorXd mvn_sample_covariance(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                      Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("mvn_sample_covariance: covariance not SPD");
  Eigen::VectorXd z(mu.size());
  for (int i = 0; i < mu.size(); ++i) z[i] = rng.normal();
  return mu + llt.matrixL() * z;
}

}  // namespace btf
