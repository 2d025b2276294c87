#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "btf/likelihood.hpp"
#include "btf/state.hpp"

namespace btf {

// One microwell plate: untreated control replicates plus a T x R block of
// raw population measurements for a single (sample, drug) pair.
struct PlateExperiment {
  int row = 0;  // sample index i
  int col = 0;  // drug index j
  std::vector<double> control_values;
  Eigen::MatrixXd dose_values;  // T x R

  double control_mean() const;
};

// Empirical-Bayes observation model: a gamma mixture over plausible initial
// population ratios. Component k has weight m[k], shape a[k] and scale base
// b[k]; at effect theta the scale is b[k] * theta.
struct GammaMixture {
  Eigen::VectorXd weights;      // sums to 1
  Eigen::VectorXd shapes;       // > 0
  Eigen::VectorXd scale_bases;  // > 0

  int K() const { return static_cast<int>(weights.size()); }
  void validate() const;
  double support_mean() const;  // mean of the ratio support
  double support_sd() const;    // spread of the ratio support
};

// Divide every dose measurement by the plate's control mean.
Eigen::MatrixXd normalize_plate(const PlateExperiment& plate);

// Empirical-Bayes pipetting prior: histogram of qualifying lowest-dose
// ratios, Poisson GLM smoothing with a cubic log-linear basis, symmetrized
// about ratio 1 and discretized to K support points. The within-column
// variance is pooled from normalized control replicates.
GammaMixture estimate_pipetting_prior(std::span<const PlateExperiment> plates, int bins = 20,
                                      int K = 25);

// Log of prod_r sum_k m_k Ga(y_r; a_k, b_k * theta); -inf outside (0, 1].
double gamma_mixture_loglik(std::span<const double> y, double theta, const GammaMixture& mix);

BlackBoxLik make_dose_blackbox(const GammaMixture& mix, bool monotone = true);

enum class UpdateContext { row, column };

// Constraint system for a dose-response factor update: [0,1] bounds on every
// observed inner product, optionally with nonincreasing-in-dose rows.
ConstraintSet build_dose_constraints(UpdateContext context, const FactorState& state, int index,
                                     std::span<const std::pair<int, int>> observed, bool monotone);

struct PredictiveInterval {
  int i = 0, j = 0, t = 0;
  double lo = 0.0, hi = 0.0;
};

// Per-cell posterior predictive intervals: one replicate drawn from the
// mixture at theta = <w_i, v_jt> for each retained sweep, then empirical
// quantiles at the requested level.
std::vector<PredictiveInterval> posterior_predictive_intervals(const PosteriorSamples& samples,
                                                               const GammaMixture& mix,
                                                               double level, uint64_t seed);

// Plate CSV: plate_id,row,col,dose_index,replicate,value,is_control
// (dose_index empty on control rows).
std::vector<PlateExperiment> read_plate_csv(const std::string& path);
void write_plate_csv(const std::string& path, std::span<const PlateExperiment> plates);

void write_mixture_json(const std::string& path, const GammaMixture& mix);
GammaMixture read_mixture_json(const std::string& path);

}  // namespace btf
