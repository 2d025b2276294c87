#pragma once

#include <Eigen/Dense>
#include <vector>

namespace btf {

// Row factors W (N x D) and per-column functional factors V_j (T x D).
struct FactorState {
  Eigen::MatrixXd W;               // N x D
  std::vector<Eigen::MatrixXd> V;  // M matrices, each T x D

  FactorState() = default;
  FactorState(int N, int M, int T, int D);

  int N() const { return static_cast<int>(W.rows()); }
  int M() const { return static_cast<int>(V.size()); }
  int T() const { return V.empty() ? 0 : static_cast<int>(V[0].rows()); }
  int D() const { return static_cast<int>(W.cols()); }

  // Element t is <W_i, V_{jt}>.
  Eigen::VectorXd inner_curve(int i, int j) const;
  double inner(int i, int j, int t) const;

  bool all_finite() const;
};

// Horseshoe+ local shrinkage state. All matrices are M x L where L is the
// number of rows of the composite difference matrix; every entry stays
// strictly positive. `phi` holds the squared scale of the second half-Cauchy
// level, matching the inverse-gamma augmentation used in the updates.
struct ShrinkageState {
  Eigen::MatrixXd tau2, c, phi, eta;  // M x L
  double rho2 = 1.0;                  // global scale, fixed per run
  double sigma2 = 1.0;                // row-prior variance

  ShrinkageState() = default;
  ShrinkageState(int M, int L, double rho2_in);
  void validate() const;
};

// Retained posterior draws plus per-sweep traces.
struct PosteriorSamples {
  std::vector<FactorState> draws;
  std::vector<double> sigma2_draws;
  std::vector<double> nu2_draws;       // empty unless Gaussian likelihood
  std::vector<double> loglik_trace;    // one entry per sweep, all sweeps
  std::vector<double> sigma2_trace;
  int total_sweeps = 0;
  int burn_in = 0;
  int thin = 1;
  long degenerate_gass_steps = 0;

  size_t expected_draws() const {
    return static_cast<size_t>((total_sweeps - burn_in) / thin);
  }

  // Posterior mean of <w_i, v_jt> over retained draws.
  Eigen::VectorXd mean_curve(int i, int j) const;
  // Empirical quantile of the inner product across draws.
  double curve_quantile(int i, int j, int t, double q) const;
};

}  // namespace btf
