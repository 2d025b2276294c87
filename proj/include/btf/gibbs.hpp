#pragma once

#include <functional>
#include <optional>

#include "btf/constraints.hpp"
#include "btf/gass.hpp"
#include "btf/likelihood.hpp"
#include "btf/shrinkage.hpp"
#include "btf/state.hpp"
#include "btf/tensor.hpp"
#include "btf/trend.hpp"

namespace btf {

// One-shot constrained-ALS surrogate of the functional matrix: point
// estimates of every inner product plus inflated variances. Serves as the
// Gaussian pseudo-data that widens the GASS proposal ellipses; its
// log-density is subtracted from the true likelihood so the target is
// unchanged.
struct PseudoEpApprox {
  int N = 0, M = 0, T = 0;
  std::vector<double> pseudo_obs;  // N*M*T
  std::vector<double> pseudo_var;  // N*M*T, strictly positive
  double inflation = 2.0;
  FactorState init_state;  // feasible factorization the chain starts from

  double obs(int i, int j, int t) const {
    return pseudo_obs[(static_cast<size_t>(i) * M + j) * T + t];
  }
  double var(int i, int j, int t) const {
    return pseudo_var[(static_cast<size_t>(i) * M + j) * T + t];
  }
};

struct FitConfig {
  int D = 3;
  int k = 0;
  double rho2 = 0.01;
  int sweeps = 2000;
  int burn_in = 1000;
  int thin = 1;
  uint64_t seed = 0;
  LikelihoodSpec likelihood = GaussianLik{1.0};
  GassConfig gass;
  ShrinkageUpdate shrinkage_update = ShrinkageUpdate::derived;
  double ep_inflation = 2.0;
  bool refresh_ep_after_burnin = false;
  int als_max_iters = 50;
  bool check_feasibility = true;

  void validate() const;
};

// Deterministic per-(sweep, phase, block) generator streams; results do not
// depend on scheduling and resume exactly from a sweep index.
struct RngKey {
  uint64_t seed = 0;
  uint64_t sweep = 0;
  Rng at(uint64_t phase, uint64_t index) const { return Rng::derive(seed, sweep, phase, index); }
};

// --- conjugate Gaussian path -----------------------------------------------

void update_rows_gaussian(const ObsIndex& idx, FactorState& state, const ShrinkageState& shrink,
                          double nu2, RngKey key);
void update_cols_gaussian(const ObsIndex& idx, FactorState& state, const ShrinkageState& shrink,
                          double nu2, const CompositeDiffMatrix& delta, RngKey key);

// --- binomial path (Polya-Gamma augmentation) ------------------------------

void update_binomial(const ObsIndex& idx, const BinomialLik& lik, FactorState& state,
                     const ShrinkageState& shrink, const CompositeDiffMatrix& delta, RngKey key);

// --- black-box path ---------------------------------------------------------

PseudoEpApprox init_constrained_als(const ObservationTensor& y, ConstraintKind kind, int D,
                                    int max_iters, double inflation = 2.0);

// Full sweep of row and column GASS updates with the pseudo-EP adjusted
// prior; returns the number of degenerate (stay-put) steps.
long gibbs_sweep_blackbox(const ObsIndex& idx, FactorState& state, const ShrinkageState& shrink,
                          const CompositeDiffMatrix& delta, const PseudoEpApprox* ep,
                          const BlackBoxLik& lik, const GassConfig& gass, RngKey key);

// --- shared updates ----------------------------------------------------------

void update_shrinkage(const FactorState& state, ShrinkageState& shrink,
                      const CompositeDiffMatrix& delta, ShrinkageUpdate variant, RngKey key);
double update_sigma2(const Eigen::MatrixXd& W, Rng& rng);
double update_nu2(const ObsIndex& idx, const FactorState& state, Rng& rng);

// Full-data log-likelihood at the current state.
double data_loglik(const ObsIndex& idx, const FactorState& state, const LikelihoodSpec& lik,
                   double nu2);

// Deviance information criterion (mean deviance plus effective parameter
// count, plug-in at the posterior-mean curve).
struct DicParts {
  double mean_deviance = 0.0;
  double plugin_deviance = 0.0;
  double p_d = 0.0;
  double dic = 0.0;
};
DicParts compute_dic_parts(const PosteriorSamples& samples, const ObservationTensor& y,
                           const LikelihoodSpec& lik);
double compute_dic(const PosteriorSamples& samples, const ObservationTensor& y,
                   const LikelihoodSpec& lik);

// --- driver ------------------------------------------------------------------

struct SweepRecord {
  int sweep = 0;
  double loglik = 0.0;
  double sigma2 = 1.0;
  double nu2 = std::numeric_limits<double>::quiet_NaN();
  long degenerate_total = 0;
  bool retained = false;
};

using SweepHook =
    std::function<void(const SweepRecord&, const FactorState&, const ShrinkageState&)>;

struct ResumePoint {
  int next_sweep = 0;
  FactorState state;
  ShrinkageState shrinkage;
  double nu2 = 1.0;
  long degenerate = 0;
};

PosteriorSamples fit(const ObservationTensor& y, const FitConfig& cfg,
                     const SweepHook& hook = nullptr, const ResumePoint* resume = nullptr);

}  // namespace btf
