#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "btf/constraints.hpp"
#include "btf/dose.hpp"
#include "btf/rng.hpp"
#include "btf/state.hpp"
#include "btf/tensor.hpp"

namespace btf {

// --- gamma-scale estimation benchmark ----------------------------------------

// Nonincreasing effect vector theta in [0.1, 1] under a squared-exponential
// Gaussian prior, observed through replicated gamma draws with theta in the
// scale slot.
struct GassBenchmarkInstance {
  Eigen::VectorXd theta_true;  // length 9
  Eigen::MatrixXd y;           // 9 x R
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  double shape_a = 100.0;
};

// The box+monotone constraint system shared by the generator and the sampler.
ConstraintSet gass_benchmark_constraints(int n = 9, double lo = 0.1, double hi = 1.0);

GassBenchmarkInstance gen_gass_benchmark(Rng& rng);

struct Table1Cell {
  double mse_mean = 0.0, mse_se = 0.0;
  double coverage_mean = 0.0, coverage_se = 0.0;
  std::vector<double> mse_trials, coverage_trials;
};

struct Table1Result {
  std::map<std::string, Table1Cell> cells;
  std::vector<int> failed_trials;
};

// Runs GASS plus the RS / LRS / PP / LPP elliptical-sampling baselines with
// 2m steps each (m burn-in, m retained) over independent trials. Failed
// trials are recorded and skipped in the aggregates.
Table1Result run_gass_table1(int m, int trials, uint64_t seed, int threads, int grid_size = 512);

// --- Poisson dynamical system benchmark --------------------------------------

struct PoissonDynSysInstance {
  int N = 0, M = 0, T = 0, D = 0;
  Eigen::MatrixXd W_true;               // N x D
  std::vector<Eigen::MatrixXd> V_true;  // M of T x D
  std::vector<long> counts;             // N*M*T

  long count(int i, int j, int t) const {
    return counts[(static_cast<size_t>(i) * M + j) * T + t];
  }
  double rate(int i, int j, int t) const { return V_true[j].row(t).dot(W_true.row(i)); }
};

// Spike-and-slab increments with Bernoulli(0.2) gates, cumulative sums for
// the column curves, Gamma(1,1) row factors, Poisson counts.
PoissonDynSysInstance gen_poisson_dynsys(int N, int M, int T, int D, Rng& rng);

struct Table2Trial {
  double mae = 0.0, rmse = 0.0, nll = 0.0;
};

struct Table2Summary {
  double mae_mean = 0.0, mae_se = 0.0;
  double rmse_mean = 0.0, rmse_se = 0.0;
  double nll_mean = 0.0, nll_se = 0.0;
  std::vector<Table2Trial> trials;
  std::vector<int> failed_trials;
};

// BTF on the dynamical-system data with the upper-left holdout_n x holdout_n
// pair block held out; metrics on true held-out rates and observations.
Table2Summary run_poisson_table2(int burn_in, int samples, int trials, uint64_t seed, int threads,
                                 int holdout_n = 3);

// --- Gaussian functional matrix generator ------------------------------------

struct GaussianSynthInstance {
  ObservationTensor y;
  FactorState truth;
  double noise_sd = 0.0;
  double smoothness_budget = 0.0;  // max |second difference| of V when jump_prob = 0
};

GaussianSynthInstance gen_gaussian_functional_matrix(int N, int M, int T, int D, double jump_prob,
                                                     double noise_sd, int R, Rng& rng);

// --- synthetic dose-response plates -------------------------------------------

struct DosePlateSim {
  std::vector<PlateExperiment> plates;  // one per (i,j)
  FactorState truth;                    // theta* = <w_i, v_jt>
  int N = 0, M = 0, T = 0, R = 0;
};

DosePlateSim gen_dose_plates(int N, int M, int T, int R, int control_reps, int D,
                             double pipette_sd, double rep_cv, Rng& rng);

// Long-format records of the control-normalized plate measurements.
std::vector<LongRecord> dose_sim_to_long(const DosePlateSim& sim);

// --- metrics -------------------------------------------------------------------

struct PointMetrics {
  double mse = 0.0, mae = 0.0, rmse = 0.0;
  long n = 0;
};

PointMetrics point_metrics(std::span<const double> pred, std::span<const double> truth);
double interval_coverage(std::span<const double> truth, std::span<const double> lo,
                         std::span<const double> hi);

}  // namespace btf
