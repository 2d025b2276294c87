#include <doctest.h>

#include <chrono>
#include <cmath>

#include "btf/mvn.hpp"
#include "btf/pav.hpp"
#include "btf/polya_gamma.hpp"
#include "btf/rng.hpp"
#include "btf/shrinkage.hpp"
#include "btf/stats.hpp"
#include "support/geweke.hpp"

using namespace btf;

TEST_SUITE_BEGIN("samplers");

// ---- Polya-Gamma -------------------------------------------------------------

TEST_CASE("pg mean at c=0 is b/4") {
  Rng rng(11);
  const int n = 100000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = polya_gamma_sample(1.0, 0.0, rng);
  double m = mean(draws);
  double se = std::sqrt(variance(draws) / n);
  CHECK(std::fabs(m - 0.25) < 3.0 * se);
}

TEST_CASE("pg mean identity over (b,c) grid") {
  Rng rng(12);
  const int n = 100000;
  for (double b : {1.0, 2.0})
    for (double c : {0.0, 1.0, 3.0}) {
      std::vector<double> draws(n);
      for (int i = 0; i < n; ++i) draws[i] = polya_gamma_sample(b, c, rng);
      double m = mean(draws);
      double se = std::sqrt(variance(draws) / n);
      double target = c == 0.0 ? b / 4.0 : (b / (2.0 * c)) * std::tanh(c / 2.0);
      INFO("b=", b, " c=", c, " mean=", m, " target=", target);
      CHECK(std::fabs(m - target) < 3.0 * se);
    }
}

TEST_CASE("pg(2,3) mean equals (1/3) tanh(1.5)") {
  Rng rng(13);
  const int n = 200000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = polya_gamma_sample(2.0, 3.0, rng);
  double se = std::sqrt(variance(draws) / n);
  CHECK(std::fabs(mean(draws) - std::tanh(1.5) / 3.0) < 3.0 * se);
}

TEST_CASE("pg(1,0) variance matches truncated series value") {
  // series: Var = 1/(4 pi^4) sum (k-1/2)^-4
  double series = 0.0;
  for (int k = 1; k <= 200; ++k) series += 1.0 / std::pow(k - 0.5, 4.0);
  double target = series / (4.0 * std::pow(M_PI, 4.0));
  Rng rng(14);
  const int n = 1000000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = polya_gamma_sample(1.0, 0.0, rng);
  CHECK(variance(draws) == doctest::Approx(target).epsilon(0.01));
  CHECK(polya_gamma_variance(1.0, 0.0) == doctest::Approx(target).epsilon(1e-6));
}

TEST_CASE("pg mean decreasing in |c|") {
  Rng rng(15);
  const int n = 100000;
  double prev = 1e9;
  for (double c : {0.0, 1.0, 2.0, 4.0}) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += polya_gamma_sample(1.0, c, rng);
    double m = s / n;
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("pg rejects b <= 0") {
  Rng rng(16);
  CHECK_THROWS_AS(polya_gamma_sample(0.0, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(polya_gamma_sample(-2.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("pg large-b normal branch keeps the mean identity") {
  Rng rng(17);
  const int n = 20000;
  double b = 200.0, c = 1.5;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = polya_gamma_sample(b, c, rng);
  double se = std::sqrt(variance(draws) / n);
  CHECK(std::fabs(mean(draws) - polya_gamma_mean(b, c)) < 4.0 * se);
}

// ---- sparse-precision MVN ------------------------------------------------------

TEST_CASE("mvn identity precision gives standard normal moments") {
  Rng rng(21);
  Eigen::SparseMatrix<double> lambda(3, 3);
  lambda.setIdentity();
  PrecisionSampler ps(lambda);
  const int n = 100000;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(3), s2 = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = ps.draw(Eigen::VectorXd::Zero(3), rng);
    s1 += x;
    s2 += x.cwiseProduct(x);
  }
  for (int d = 0; d < 3; ++d) {
    CHECK(std::fabs(s1[d] / n) < 3.0 / std::sqrt(n));
    CHECK(std::fabs(s2[d] / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("mvn 2x2 mean equals dense inverse times h") {
  Rng rng(22);
  Eigen::SparseMatrix<double> lambda(2, 2);
  lambda.insert(0, 0) = 2.0;
  lambda.insert(0, 1) = -1.0;
  lambda.insert(1, 0) = -1.0;
  lambda.insert(1, 1) = 1.0;
  Eigen::VectorXd h(2);
  h << 1.0, 0.0;
  // mean = Lambda^-1 h = [1, 1]
  const int n = 100000;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(2);
  PrecisionSampler ps(lambda);
  for (int i = 0; i < n; ++i) s1 += ps.draw(h, rng);
  // marginal variances are diag(Lambda^-1) = [1, 2]
  CHECK(std::fabs(s1[0] / n - 1.0) < 3.0 * std::sqrt(1.0 / n));
  CHECK(std::fabs(s1[1] / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("mvn rejects non-SPD precision") {
  Eigen::SparseMatrix<double> lambda(2, 2);
  lambda.insert(0, 0) = 1.0;
  lambda.insert(0, 1) = 3.0;
  lambda.insert(1, 0) = 3.0;
  lambda.insert(1, 1) = 1.0;
  Rng rng(23);
  CHECK_THROWS_AS(mvn_sample_precision(Eigen::VectorXd::Zero(2), lambda, rng),
                  std::runtime_error);
}

TEST_CASE("mvn tridiagonal solve scales roughly linearly") {
  Rng rng(24);
  auto time_for = [&](int d) {
    Eigen::SparseMatrix<double> lambda(d, d);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < d; ++i) {
      trip.emplace_back(i, i, 2.0);
      if (i + 1 < d) {
        trip.emplace_back(i, i + 1, -0.9);
        trip.emplace_back(i + 1, i, -0.9);
      }
    }
    lambda.setFromTriplets(trip.begin(), trip.end());
    auto t0 = std::chrono::steady_clock::now();
    PrecisionSampler ps(lambda);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    for (int rep = 0; rep < 5; ++rep) acc += ps.draw_centered(rng);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(acc.allFinite());
    return secs;
  };
  double t_small = std::max(time_for(100), 1e-5);
  double t_large = time_for(10000);
  // 100x the size; allow generous slack over the linear ratio, but reject
  // anything close to dense cubic scaling
  CHECK(t_large / t_small < 2000.0);
  CHECK(t_large < 1.0);
}

// ---- PAV ------------------------------------------------------------------------

TEST_CASE("pav leaves monotone input unchanged") {
  Eigen::Vector3d y(3, 2, 1);
  Eigen::VectorXd p = pav_monotone_projection(y, MonotoneDirection::nonincreasing);
  CHECK((p - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pav pools a single violating pair") {
  Eigen::Vector3d y(1, 3, 2);
  Eigen::VectorXd p = pav_monotone_projection(y, MonotoneDirection::nondecreasing);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(2.5));
  CHECK(p[2] == doctest::Approx(2.5));
}

namespace {
// exhaustive oracle: best block-mean fit over all consecutive partitions
// with nondecreasing block means
Eigen::VectorXd pav_oracle(const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  double best_sse = 1e300;
  Eigen::VectorXd best = y;
  for (int mask = 0; mask < (1 << (n - 1)); ++mask) {
    Eigen::VectorXd fit(n);
    int start = 0;
    double prev_mean = -1e300;
    bool ok = true;
    for (int end = 0; end < n; ++end) {
      bool boundary = end == n - 1 || (mask & (1 << end));
      if (!boundary) continue;
      double m = y.segment(start, end - start + 1).mean();
      if (m < prev_mean - 1e-12) {
        ok = false;
        break;
      }
      for (int t = start; t <= end; ++t) fit[t] = m;
      prev_mean = m;
      start = end + 1;
    }
    if (!ok) continue;
    double sse = (fit - y).squaredNorm();
    if (sse < best_sse) {
      best_sse = sse;
      best = fit;
    }
  }
  return best;
}
}  // namespace

TEST_CASE("pav matches exhaustive QP oracle on random vectors") {
  Rng rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) y[i] = rng.normal();
    Eigen::VectorXd p = pav_monotone_projection(y, MonotoneDirection::nondecreasing);
    Eigen::VectorXd o = pav_oracle(y);
    CHECK((p - o).cwiseAbs().maxCoeff() < 1e-9);
    // idempotent
    Eigen::VectorXd pp = pav_monotone_projection(p, MonotoneDirection::nondecreasing);
    CHECK((pp - p).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("pav rejects empty input") {
  Eigen::VectorXd empty(0);
  CHECK_THROWS_AS(pav_monotone_projection(empty, MonotoneDirection::nondecreasing),
                  std::invalid_argument);
}

// ---- horseshoe+ block updates ------------------------------------------------------

TEST_CASE("horseshoe conditional parameters, derived vs literal convention") {
  // D=3, row_norm_sq=2, rho2=1, c=1: derived tau2 | - is
  // InvGamma((D+1)/2 = 2, 2/2 + 1 = 2), so E[1/tau2] = shape/rate = 1;
  // the literal convention has shape D+1 = 4, so E[1/tau2] = 2.
  const int n = 200000;
  for (auto variant : {ShrinkageUpdate::derived, ShrinkageUpdate::paper_literal}) {
    Rng rng(41);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd tau2(1), c(1), phi(1), eta(1), norms(1);
      tau2 << 1.0;
      c << 1.0;
      phi << 1.0;
      eta << 1.0;
      norms << 2.0;
      Eigen::VectorXd t = tau2;
      horseshoe_block_update(norms, 1.0, 3, t, c, phi, eta, rng, variant);
      acc += 1.0 / t[0];
    }
    double m = acc / n;
    double target = variant == ShrinkageUpdate::derived ? 1.0 : 2.0;
    CHECK(m == doctest::Approx(target).epsilon(0.02));
  }
}

TEST_CASE("horseshoe stays positive and finite under degenerate input") {
  Rng rng(42);
  Eigen::VectorXd tau2(1), c(1), phi(1), eta(1), norms(1);
  tau2 << 1.0;
  c << 1e12;  // c -> inf: prior-driven regime
  phi << 1.0;
  eta << 1.0;
  norms << 0.0;
  for (int i = 0; i < 1000; ++i) {
    horseshoe_block_update(norms, 1.0, 2, tau2, c, phi, eta, rng);
    CHECK(tau2[0] > 0.0);
    CHECK(std::isfinite(tau2[0]));
    CHECK(phi[0] > 0.0);
  }
}

TEST_CASE("horseshoe rejects nonpositive inputs") {
  Rng rng(43);
  Eigen::VectorXd tau2(1), c(1), phi(1), eta(1), norms(1);
  tau2 << 1.0;
  c << -1.0;
  phi << 1.0;
  eta << 1.0;
  norms << 1.0;
  CHECK_THROWS_AS(horseshoe_block_update(norms, 1.0, 2, tau2, c, phi, eta, rng),
                  std::invalid_argument);
}

TEST_CASE("horseshoe joint distribution preserved (Geweke)") {
  auto streams = testsupport::geweke_horseshoe(3, 1.0, 8000, 8000, 4, 20240801);
  INFO("min KS p-value=", streams.min_ks_pvalue());
  CHECK(streams.min_ks_pvalue() > 0.01);
}

TEST_CASE("horseshoe literal-text convention fails the joint-distribution test") {
  auto streams = testsupport::geweke_horseshoe(3, 1.0, 8000, 8000, 4, 20240801,
                                               ShrinkageUpdate::paper_literal);
  CHECK(streams.min_ks_pvalue() < 1e-4);
}

TEST_SUITE_END();
