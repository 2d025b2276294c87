#include "btf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace btf {

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double norm_logpdf(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (d * d / var + std::log(2.0 * M_PI * var));
}

double norm_ppf(double p) {
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("norm_ppf: p outside (0,1)");
  // Acklam's approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley step against the exact CDF
  double e = norm_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double gamma_logpdf(double y, double shape, double scale) {
  if (y < 0.0 || shape <= 0.0 || scale <= 0.0) return -INFINITY;
  if (y == 0.0) return shape < 1.0 ? INFINITY : (shape == 1.0 ? -std::log(scale) : -INFINITY);
  return (shape - 1.0) * std::log(y) - y / scale - shape * std::log(scale) - std::lgamma(shape);
}

double gamma_lower_regularized(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("gamma_lower_regularized: a must be positive");
  if (x < 0.0) throw std::invalid_argument("gamma_lower_regularized: x must be nonnegative");
  if (x == 0.0) return 0.0;
  double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // series expansion
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // continued fraction for Q(a, x)
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

double gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return gamma_lower_regularized(shape, rate * x);
}

double inv_gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return 1.0 - gamma_lower_regularized(shape, rate / x);
}

double poisson_logpmf(long y, double rate) {
  if (y < 0) return -INFINITY;
  if (rate <= 0.0) return y == 0 ? 0.0 : -INFINITY;
  return y * std::log(rate) - rate - std::lgamma(static_cast<double>(y) + 1.0);
}

double binomial_logpmf(int y, int n, double p) {
  if (y < 0 || y > n) return -INFINITY;
  if (p <= 0.0) return y == 0 ? 0.0 : -INFINITY;
  if (p >= 1.0) return y == n ? 0.0 : -INFINITY;
  double lchoose = std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0);
  return lchoose + y * std::log(p) + (n - y) * std::log1p(-p);
}

double log_sum_exp(std::span<const double> v) {
  double m = -INFINITY;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("variance: need at least 2 values");
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = static_cast<size_t>(std::ceil(pos));
  double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0.0;
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_pvalue_from_statistic(double d, double n_effective) {
  double sqn = std::sqrt(n_effective);
  double lambda = (sqn + 0.12 + 0.11 / sqn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double d = ks_statistic_two_sample(std::move(a), std::move(b));
  return ks_pvalue_from_statistic(d, na * nb / (na + nb));
}

double integrated_autocorr_time(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 8) return 1.0;
  double m = mean(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  c0 /= n;
  if (c0 <= 0.0) return 1.0;
  auto acf = [&](int lag) {
    double acc = 0.0;
    for (int i = 0; i + lag < n; ++i) acc += (x[i] - m) * (x[i + lag] - m);
    return acc / (n * c0);
  };
  // Geyer: accumulate lag pairs while their sums stay positive
  double t = 1.0;
  for (int lag = 1; lag + 1 < n / 2; lag += 2) {
    double pair = acf(lag) + acf(lag + 1);
    if (pair <= 0.0) break;
    t += 2.0 * pair;
  }
  return std::max(t, 1.0);
}

double ks_two_sample_pvalue_autocorr(const std::vector<double>& a, const std::vector<double>& b) {
  double na = static_cast<double>(a.size()) / integrated_autocorr_time(a);
  double nb = static_cast<double>(b.size()) / integrated_autocorr_time(b);
  double d = ks_statistic_two_sample(a, b);
  return ks_pvalue_from_statistic(d, na * nb / (na + nb));
}

}  // namespace btf
