#include "btf/shrinkage.hpp"

#include <algorithm>
#include <stdexcept>

namespace btf {

namespace {
// Keeps the no-data feedback loop (rates built from reciprocals of the other
// auxiliaries) from underflowing to an exact zero or overflowing to inf.
double clamp_positive(double v) { return std::clamp(v, 1e-300, 1e300); }
// The half-Cauchy tails reach scales where the column precision becomes
// numerically singular; [1e-6, 1e6] is far outside any data-identifiable
// range, so truncating there changes nothing observable. Forward draws use
// the same window, keeping the joint-distribution tests consistent.
double clamp_scale(double v) { return std::clamp(v, 1e-6, 1e6); }
}  // namespace

void horseshoe_block_update(const Eigen::VectorXd& row_norms_sq, double rho2, int D,
                            Eigen::VectorXd& tau2, Eigen::VectorXd& c, Eigen::VectorXd& phi,
                            Eigen::VectorXd& eta, Rng& rng, ShrinkageUpdate variant) {
  const int L = static_cast<int>(row_norms_sq.size());
  if (tau2.size() != L || c.size() != L || phi.size() != L || eta.size() != L)
    throw std::invalid_argument("horseshoe_block_update: length mismatch");
  if (rho2 <= 0.0 || D <= 0) throw std::invalid_argument("horseshoe_block_update: bad inputs");
  if ((row_norms_sq.array() < 0.0).any() || (tau2.array() <= 0.0).any() ||
      (c.array() <= 0.0).any() || (phi.array() <= 0.0).any() || (eta.array() <= 0.0).any())
    throw std::invalid_argument("horseshoe_block_update: inputs must be positive");

  for (int l = 0; l < L; ++l) {
    double shape, rate;
    if (variant == ShrinkageUpdate::derived) {
      shape = 0.5 * (D + 1);
      rate = row_norms_sq[l] / (2.0 * rho2) + 1.0 / c[l];
    } else {
      shape = static_cast<double>(D + 1);
      rate = row_norms_sq[l] / 2.0 + 1.0 / c[l];
    }
    tau2[l] = clamp_scale(rng.inv_gamma(shape, clamp_positive(rate)));
    c[l] = clamp_positive(rng.inv_gamma(1.0, clamp_positive(1.0 / tau2[l] + 1.0 / phi[l])));
    phi[l] = clamp_positive(rng.inv_gamma(1.0, clamp_positive(1.0 / c[l] + 1.0 / eta[l])));
    eta[l] = clamp_positive(rng.inv_gamma(1.0, clamp_positive(1.0 / phi[l] + 1.0)));
  }
}

void horseshoe_forward_draw(double& tau2, double& c, double& phi, double& eta, Rng& rng) {
  eta = clamp_positive(rng.inv_gamma(0.5, 1.0));
  phi = clamp_positive(rng.inv_gamma(0.5, 1.0 / eta));
  c = clamp_positive(rng.inv_gamma(0.5, 1.0 / phi));
  tau2 = clamp_scale(rng.inv_gamma(0.5, 1.0 / c));
}

}  // namespace btf
