#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "btf/rng.hpp"

namespace btf {

// Sampler for MVN(Lambda^{-1} h, Lambda^{-1}) given a sparse SPD precision.
// Factorizes once; draw() and mean() reuse the factor.
class PrecisionSampler {
 public:
  explicit PrecisionSampler(const Eigen::SparseMatrix<double>& lambda);

  Eigen::VectorXd mean(const Eigen::VectorXd& h) const;
  // Draw centered: x ~ MVN(0, Lambda^{-1}).
  Eigen::VectorXd draw_centered(Rng& rng) const;
  Eigen::VectorXd draw(const Eigen::VectorXd& h, Rng& rng) const;

  int dim() const { return dim_; }

 private:
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
  int dim_;
};

// One-shot draw from MVN(Lambda^{-1} h, Lambda^{-1}).
Eigen::VectorXd mvn_sample_precision(const Eigen::VectorXd& h,
                                     const Eigen::SparseMatrix<double>& lambda, Rng& rng);

// Dense convenience for small covariance matrices: x ~ MVN(mu, Sigma).
Eigen::VectorXd mvn_sample_covariance(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                      Rng& rng);

}  // namespace btf
