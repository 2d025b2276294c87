#pragma once

#include <span>
#include <vector>

namespace btf {

double norm_cdf(double x);
double norm_logpdf(double x, double mean, double var);
// Inverse standard normal CDF (Acklam rational approximation + Newton polish).
double norm_ppf(double p);

double gamma_logpdf(double y, double shape, double scale);
// Regularized lower incomplete gamma P(a, x).
double gamma_lower_regularized(double a, double x);
double gamma_cdf(double x, double shape, double rate);
double inv_gamma_cdf(double x, double shape, double rate);
double poisson_logpmf(long y, double rate);
double binomial_logpmf(int y, int n, double p);

double log_sum_exp(std::span<const double> v);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // unbiased
double quantile(std::vector<double> v, double q);  // linear-interpolated, copies input

// Kolmogorov-Smirnov. p-values use the asymptotic Kolmogorov distribution.
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);
double ks_pvalue_from_statistic(double d, double n_effective);

// Integrated autocorrelation time by Geyer's initial positive sequence;
// >= 1, equal to 1 for i.i.d. input.
double integrated_autocorr_time(std::span<const double> x);

// Two-sample KS with both sample sizes deflated by the series'
// autocorrelation times; appropriate when either input is an MCMC trace.
double ks_two_sample_pvalue_autocorr(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace btf
