#include "btf/likelihood.hpp"

#include <cmath>

#include "btf/stats.hpp"

namespace btf {

BinomialLik::BinomialLik(int N_in, int M_in, int T_in, int constant_trials)
    : N(N_in), M(M_in), T(T_in) {
  if (constant_trials <= 0) throw std::invalid_argument("BinomialLik: trials must be positive");
  trials.assign(static_cast<size_t>(N) * M * T, constant_trials);
}

BlackBoxLik make_poisson_blackbox() {
  BlackBoxLik lik;
  lik.constraints = ConstraintKind::nonnegative;
  lik.loglik = [](int, int, int, std::span<const double> y, double theta) {
    // rate floor keeps the current point finite when theta sits on the
    // constraint boundary
    double rate = std::max(theta, 1e-12);
    double total = 0.0;
    for (double v : y) total += poisson_logpmf(static_cast<long>(std::llround(v)), rate);
    return total;
  };
  return lik;
}

BlackBoxLik make_gaussian_blackbox(double nu2, ConstraintKind kind) {
  if (nu2 <= 0.0) throw std::invalid_argument("make_gaussian_blackbox: nu2 must be positive");
  BlackBoxLik lik;
  lik.constraints = kind;
  lik.loglik = [nu2](int, int, int, std::span<const double> y, double theta) {
    double total = 0.0;
    for (double v : y) total += norm_logpdf(v, theta, nu2);
    return total;
  };
  return lik;
}

}  // namespace btf
