#include "btf/polya_gamma.hpp"

#include <cmath>
#include <stdexcept>

#include "btf/stats.hpp"

namespace btf {

namespace {

constexpr double kTrunc = 0.64;  // crossover point of the two series forms

// Piecewise coefficients a_n(x) of the J*(1) density series.
double series_coef(int n, double x) {
  double h = n + 0.5;
  if (x <= kTrunc)
    return M_PI * h * std::pow(2.0 / (M_PI * x), 1.5) * std::exp(-2.0 * h * h / x);
  return M_PI * h * std::exp(-0.5 * h * h * M_PI * M_PI * x);
}

// P(InverseGaussian(1/z, 1) <= t); z >= 0 with the z -> 0 limit handled.
double ig_cdf_at(double t, double z) {
  double rt = std::sqrt(t);
  double term1 = norm_cdf((t * z - 1.0) / rt);
  // exp(2z) * Phi(-(tz+1)/sqrt(t)) computed in log space to dodge overflow
  double log_term2 = 2.0 * z + std::log(norm_cdf(-(t * z + 1.0) / rt));
  return term1 + std::exp(log_term2);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, t].
double truncated_ig(double z, double t, Rng& rng) {
  if (z < 1.0 / t) {
    // mean above the truncation point: one-sided stable-style proposal
    for (;;) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / t);
      double x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (std::log(rng.uniform_pos()) <= -0.5 * z * z * x) return x;
    }
  }
  double mu = 1.0 / z;
  for (;;) {
    double x = rng.inverse_gaussian(mu, 1.0);
    if (x <= t && x > 0.0) return x;
  }
}

// Exact draw from PG(1, c) = J*(1, |c|/2) / 4.
double pg1(double c, Rng& rng) {
  double z = 0.5 * std::fabs(c);
  double fz = 0.125 * M_PI * M_PI + 0.5 * z * z;

  // p: mass of the exponential tail proposal on (t, inf)
  // q: mass of the inverse-Gaussian head proposal on (0, t]
  double p = 0.5 * M_PI / fz * std::exp(-fz * kTrunc);
  double q = 2.0 * std::exp(-z) * ig_cdf_at(kTrunc, z);

  for (;;) {
    double x;
    if (rng.uniform() < p / (p + q))
      x = kTrunc + rng.exponential() / fz;
    else
      x = truncated_ig(z, kTrunc, rng);

    // alternating series acceptance
    double s = series_coef(0, x);
    double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return x / 4.0;
      } else {
        s += series_coef(n, x);
        if (y > s) break;  // reject, resample
      }
    }
  }
}

// E[PG(1,c)] contribution of series component k is 1/(2 pi^2 d_k) with
// d_k = (k - 1/2)^2 + (c / (2 pi))^2; used for the fractional-b fallback.
double fractional_pg(double b, double c, Rng& rng) {
  constexpr int kTerms = 200;
  double e = c * c / (4.0 * M_PI * M_PI);
  double total = 0.0;
  for (int k = 1; k <= kTerms; ++k) {
    double h = k - 0.5;
    total += rng.gamma(b, 1.0) / (h * h + e);
  }
  // tail mean: b * sum_{k>K} 1/d_k via the integral approximation
  double tail;
  if (e > 0.0)
    tail = b / std::sqrt(e) * (M_PI / 2.0 - std::atan(kTerms / std::sqrt(e)));
  else
    tail = b / static_cast<double>(kTerms);
  total += tail;
  return total / (2.0 * M_PI * M_PI);
}

}  // namespace

double polya_gamma_mean(double b, double c) {
  if (b <= 0.0) throw std::invalid_argument("polya_gamma_mean: b must be positive");
  double ac = std::fabs(c);
  if (ac < 1e-8) return b / 4.0 * (1.0 - ac * ac / 12.0);
  return b / (2.0 * ac) * std::tanh(ac / 2.0);
}

double polya_gamma_variance(double b, double c) {
  if (b <= 0.0) throw std::invalid_argument("polya_gamma_variance: b must be positive");
  // Var = b / (4 pi^4) * sum_k 1/d_k^2, d_k = (k-1/2)^2 + c^2/(4 pi^2)
  double e = c * c / (4.0 * M_PI * M_PI);
  double s = 0.0;
  for (int k = 1; k <= 2000; ++k) {
    double h = k - 0.5;
    double d = h * h + e;
    s += 1.0 / (d * d);
  }
  return b / (4.0 * M_PI * M_PI * M_PI * M_PI) * s;
}

double polya_gamma_sample(double b, double c, Rng& rng) {
  if (b <= 0.0) throw std::invalid_argument("polya_gamma_sample: b must be positive");
  if (b > 170.0) {
    double m = polya_gamma_mean(b, c);
    double sd = std::sqrt(polya_gamma_variance(b, c));
    double x;
    do {
      x = m + sd * rng.normal();
    } while (x <= 0.0);
    return x;
  }
  double ip;
  double frac = std::modf(b, &ip);
  double total = 0.0;
  for (long k = 0; k < static_cast<long>(ip); ++k) total += pg1(c, rng);
  if (frac > 0.0) total += fractional_pg(frac, c, rng);
  return total;
}

}  // namespace btf
