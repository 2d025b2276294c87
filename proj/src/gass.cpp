#include "btf/gass.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace btf {

AngleIntervals AngleIntervals::full() {
  AngleIntervals a;
  a.ivals_.emplace_back(-M_PI, M_PI);
  return a;
}

AngleIntervals AngleIntervals::empty_set() { return AngleIntervals{}; }

AngleIntervals AngleIntervals::arc(double lo, double hi) {
  AngleIntervals out;
  if (hi < lo) return out;
  if (hi - lo >= 2.0 * M_PI - 1e-14) return full();
  if (lo >= -M_PI && hi <= M_PI) {
    out.ivals_.emplace_back(lo, hi);
    return out;
  }
  if (lo < -M_PI) {
    out.ivals_.emplace_back(-M_PI, hi);
    out.ivals_.emplace_back(lo + 2.0 * M_PI, M_PI);
    return out;
  }
  // hi > pi
  out.ivals_.emplace_back(-M_PI, hi - 2.0 * M_PI);
  out.ivals_.emplace_back(lo, M_PI);
  return out;
}

double AngleIntervals::measure() const {
  double m = 0.0;
  for (auto [lo, hi] : ivals_) m += hi - lo;
  return m;
}

bool AngleIntervals::contains(double theta) const {
  for (auto [lo, hi] : ivals_)
    if (theta >= lo && theta <= hi) return true;
  return false;
}

void AngleIntervals::intersect(const AngleIntervals& other) {
  std::vector<std::pair<double, double>> out;
  size_t i = 0, j = 0;
  while (i < ivals_.size() && j < other.ivals_.size()) {
    double lo = std::max(ivals_[i].first, other.ivals_[j].first);
    double hi = std::min(ivals_[i].second, other.ivals_[j].second);
    if (lo <= hi) out.emplace_back(lo, hi);
    if (ivals_[i].second < other.ivals_[j].second)
      ++i;
    else
      ++j;
  }
  ivals_ = std::move(out);
}

AngleIntervals constraint_intervals(double a, double b, double c) {
  double r = std::hypot(a, b);
  if (r < 1e-300) return c <= 0.0 ? AngleIntervals::full() : AngleIntervals::empty_set();
  if (c <= -r) return AngleIntervals::full();
  if (c > r) return AngleIntervals::empty_set();
  // a cos(t) + b sin(t) = r cos(t - psi) >= c  <=>  |t - psi| <= alpha
  double psi = std::atan2(b, a);
  double alpha = std::acos(std::clamp(c / r, -1.0, 1.0));
  return AngleIntervals::arc(psi - alpha, psi + alpha);
}

namespace {

AngleIntervals valid_angles(const Eigen::VectorXd& xc, const Eigen::VectorXd& v,
                            const Eigen::VectorXd& mu, const ConstraintSet& cons) {
  AngleIntervals set = AngleIntervals::full();
  for (int k = 0; k < cons.size(); ++k) {
    Eigen::VectorXd d = cons.rows.row(k).transpose();
    double a = d.dot(xc);
    double b = d.dot(v);
    double c = cons.bounds[k] - d.dot(mu);
    set.intersect(constraint_intervals(a, b, c));
    if (set.empty()) break;
  }
  return set;
}

}  // namespace

Eigen::VectorXd gass_step(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                          const CenteredDraw& draw_centered, const LogLikFn& loglik,
                          const ConstraintSet& cons, const GassConfig& cfg, Rng& rng,
                          GassStats* stats) {
  if (cfg.grid_size < 16) throw std::invalid_argument("gass_step: grid_size must be >= 16");
  if (!cons.satisfied(x)) throw std::invalid_argument("gass_step: current point infeasible");
  double ll_x = loglik(x);
  if (!std::isfinite(ll_x))
    throw std::invalid_argument("gass_step: log-likelihood not finite at current point");

  GassStats local;
  double threshold = ll_x + std::log(rng.uniform_pos());
  Eigen::VectorXd v = draw_centered(rng);
  Eigen::VectorXd xc = x - mu;

  AngleIntervals valid = valid_angles(xc, v, mu, cons);
  if (valid.empty()) {
    local.degenerate = true;
    if (stats) *stats = local;
    return x;
  }

  // Candidate angles: a randomly phased uniform grid over [-pi, pi],
  // restricted to the valid set.
  const double step = 2.0 * M_PI / cfg.grid_size;
  const double phase = rng.uniform();
  std::vector<double> cand;
  cand.reserve(cfg.grid_size / 4);
  for (auto [lo, hi] : valid.intervals()) {
    double gmin = std::ceil((lo + M_PI) / step - phase);
    double gmax = std::floor((hi + M_PI) / step - phase);
    for (double g = gmin; g <= gmax; g += 1.0) cand.push_back(-M_PI + (g + phase) * step);
  }
  if (cfg.include_current) cand.push_back(0.0);
  local.candidates = static_cast<int>(cand.size());

  // Uniform selection among candidates passing the threshold: visit in a
  // random order and take the first that qualifies.
  std::vector<int> order(cand.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.integer(k)]);

  for (int idx : order) {
    double theta = cand[idx];
    Eigen::VectorXd xp = xc * std::cos(theta) + v * std::sin(theta) + mu;
    ++local.loglik_evals;
    if (loglik(xp) >= threshold) {
      if (stats) *stats = local;
      return xp;
    }
  }
  // Only reachable without the theta=0 candidate (or through rounding at the
  // very edge of the slice): stay put.
  local.degenerate = true;
  if (stats) *stats = local;
  return x;
}

Eigen::VectorXd gass_step(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                          const Eigen::MatrixXd& sigma, const LogLikFn& loglik,
                          const ConstraintSet& cons, const GassConfig& cfg, Rng& rng,
                          GassStats* stats) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("gass_step: covariance not positive definite");
  Eigen::MatrixXd chol = llt.matrixL();
  CenteredDraw draw = [&chol](Rng& r) {
    Eigen::VectorXd z(chol.rows());
    for (int i = 0; i < z.size(); ++i) z[i] = r.normal();
    return Eigen::VectorXd(chol * z);
  };
  return gass_step(x, mu, draw, loglik, cons, cfg, rng, stats);
}

Eigen::VectorXd ess_step(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                         const CenteredDraw& draw_centered, const LogLikFn& loglik, Rng& rng) {
  double ll_x = loglik(x);
  if (!std::isfinite(ll_x))
    throw std::invalid_argument("ess_step: log-likelihood not finite at current point");
  double threshold = ll_x + std::log(rng.uniform_pos());
  Eigen::VectorXd v = draw_centered(rng);
  Eigen::VectorXd xc = x - mu;

  double theta = rng.uniform(0.0, 2.0 * M_PI);
  double lo = theta - 2.0 * M_PI;
  double hi = theta;
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::VectorXd xp = xc * std::cos(theta) + v * std::sin(theta) + mu;
    if (loglik(xp) > threshold) return xp;
    if (theta < 0.0)
      lo = theta;
    else
      hi = theta;
    theta = rng.uniform(lo, hi);
  }
  throw std::runtime_error("ess_step: bracket failed to shrink");
}

Eigen::VectorXd ess_step(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                         const Eigen::MatrixXd& sigma, const LogLikFn& loglik, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("ess_step: covariance not positive definite");
  Eigen::MatrixXd chol = llt.matrixL();
  CenteredDraw draw = [&chol](Rng& r) {
    Eigen::VectorXd z(chol.rows());
    for (int i = 0; i < z.size(); ++i) z[i] = r.normal();
    return Eigen::VectorXd(chol * z);
  };
  return ess_step(x, mu, draw, loglik, rng);
}

}  // namespace btf
