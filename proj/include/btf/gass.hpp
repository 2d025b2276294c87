#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "btf/constraints.hpp"
#include "btf/rng.hpp"

namespace btf {

struct GassConfig {
  int grid_size = 512;          // angle candidates over [-pi, pi]
  bool include_current = true;  // always keep theta = 0 as a candidate
};

// Disjoint closed angle intervals within [-pi, pi], kept sorted.
class AngleIntervals {
 public:
  static AngleIntervals full();
  static AngleIntervals empty_set();
  // A single arc [lo, hi] in unwrapped coordinates (may extend past +-pi;
  // it is wrapped back into [-pi, pi], splitting in two if needed).
  static AngleIntervals arc(double lo, double hi);

  bool empty() const { return ivals_.empty(); }
  double measure() const;
  bool contains(double theta) const;
  void intersect(const AngleIntervals& other);

  const std::vector<std::pair<double, double>>& intervals() const { return ivals_; }

 private:
  std::vector<std::pair<double, double>> ivals_;
};

// Exact solution set {theta in [-pi, pi] : a cos(theta) + b sin(theta) >= c}.
// Returns the empty set when the constraint fails everywhere.
AngleIntervals constraint_intervals(double a, double b, double c);

using LogLikFn = std::function<double(const Eigen::VectorXd&)>;
// Draws v ~ MVN(0, Sigma) for the prior in use.
using CenteredDraw = std::function<Eigen::VectorXd(Rng&)>;

struct GassStats {
  bool degenerate = false;  // constraint intersection was empty
  int loglik_evals = 0;
  int candidates = 0;
};

// One slice-sampling transition for
//   p(x) propto exp(loglik(x)) MVN(x; mu, Sigma) I[D x >= gamma].
// The current point must be feasible with finite log-likelihood. Valid angle
// regions are computed analytically from the constraints, discretized on a
// randomly phased grid, and a candidate is chosen uniformly among those
// passing the slice threshold. theta = 0 (the current point) always
// qualifies, so the step never gets stuck.
Eigen::VectorXd gass_step(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                          const CenteredDraw& draw_centered, const LogLikFn& loglik,
                          const ConstraintSet& cons, const GassConfig& cfg, Rng& rng,
                          GassStats* stats = nullptr);

// Dense-covariance convenience overload.
Eigen::VectorXd gass_step(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                          const Eigen::MatrixXd& sigma, const LogLikFn& loglik,
                          const ConstraintSet& cons, const GassConfig& cfg, Rng& rng,
                          GassStats* stats = nullptr);

// Classic elliptical slice sampling transition (bracket shrinking), for
// unconstrained MVN priors; constraints can be folded into the
// log-likelihood as -inf.
Eigen::VectorXd ess_step(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                         const Eigen::MatrixXd& sigma, const LogLikFn& loglik, Rng& rng);
Eigen::VectorXd ess_step(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                         const CenteredDraw& draw_centered, const LogLikFn& loglik, Rng& rng);

}  // namespace btf
