#pragma once

#include <cstdint>
#include <random>

namespace btf {

// Random generator with the handful of distributions the samplers need.
// All draws are produced from explicit algorithms on top of mt19937_64 so
// that a fixed seed gives the same stream on every platform/stdlib.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Hash (seed, a, b, c) into an independent stream. Used to give every
  // (sweep, phase, block) its own generator so parallel schedules and
  // checkpoint/resume cannot change the sampled values.
  static Rng derive(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0);

  uint64_t raw() { return gen_(); }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform strictly inside (0,1); safe to take logs of.
  double uniform_pos();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t integer(uint64_t n);

  double normal();  // standard normal (polar method)
  double exponential() { return -std::log(uniform_pos()); }

  // Gamma(shape, scale), Marsaglia-Tsang.
  double gamma(double shape, double scale = 1.0);

  // InvGamma(shape, rate): density x^{-shape-1} exp(-rate/x).
  double inv_gamma(double shape, double rate) { return rate / gamma(shape, 1.0); }

  double chi_squared(double dof) { return gamma(0.5 * dof, 2.0); }
  double beta(double a, double b);

  long poisson(double lambda);
  int binomial(int n, double p);
  bool bernoulli(double p) { return uniform() < p; }

  // Inverse Gaussian(mu, lambda) by Michael-Schucany-Haas.
  double inverse_gaussian(double mu, double lambda);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace btf
