#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "btf/constraints.hpp"

namespace btf {

struct GaussianLik {
  double nu2 = 1.0;  // observation variance, resampled during fitting
  explicit GaussianLik(double nu2_in = 1.0) : nu2(nu2_in) {
    if (nu2 <= 0.0) throw std::invalid_argument("GaussianLik: nu2 must be positive");
  }
};

// y_{ijtr} ~ Binomial(n_{ijt}, 1/(1+exp(-<w_i, v_jt>))).
struct BinomialLik {
  std::vector<int> trials;  // N*M*T, cell-major (i,j,t)
  int N = 0, M = 0, T = 0;

  BinomialLik() = default;
  BinomialLik(int N_in, int M_in, int T_in, int constant_trials);
  int n(int i, int j, int t) const { return trials[(static_cast<size_t>(i) * M + j) * T + t]; }
};

// Arbitrary per-cell log-likelihood, summed over the given replicates, as a
// function of theta = <w_i, v_jt>. Must be finite whenever theta satisfies
// the declared constraint kind (boundary values may be -inf).
struct BlackBoxLik {
  std::function<double(int i, int j, int t, std::span<const double> y, double theta)> loglik;
  ConstraintKind constraints = ConstraintKind::none;
};

using LikelihoodSpec = std::variant<GaussianLik, BinomialLik, BlackBoxLik>;

// Poisson counts with rate theta >= 0.
BlackBoxLik make_poisson_blackbox();
// Gaussian through the black-box path; used to validate GASS against the
// conjugate sampler.
BlackBoxLik make_gaussian_blackbox(double nu2, ConstraintKind kind = ConstraintKind::none);

}  // namespace btf
