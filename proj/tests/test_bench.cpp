#include <doctest.h>

#include <cmath>

#include "btf/benchmarks.hpp"
#include "btf/gibbs.hpp"
#include "btf/stats.hpp"

using namespace btf;

TEST_SUITE_BEGIN("bench");

TEST_CASE("gamma-scale benchmark: kernel diagonal and constraint contract") {
  Rng rng(600);
  GassBenchmarkInstance inst = gen_gass_benchmark(rng);
  for (int i = 0; i < 9; ++i) CHECK(inst.sigma(i, i) == doctest::Approx(0.1));
  CHECK(inst.sigma(0, 1) == doctest::Approx(0.1 * std::exp(-1.0 / 6.0)));
  ConstraintSet cons = gass_benchmark_constraints();
  for (int rep = 0; rep < 200; ++rep) {
    GassBenchmarkInstance x = gen_gass_benchmark(rng);
    CHECK(cons.satisfied(x.theta_true, 0.0));
    CHECK(x.theta_true.minCoeff() >= 0.1);
    CHECK(x.theta_true.maxCoeff() <= 1.0);
    for (int i = 0; i + 1 < 9; ++i) CHECK(x.theta_true[i] >= x.theta_true[i + 1]);
  }
}

TEST_CASE("gamma-scale benchmark mean matches a fresh rejection oracle") {
  Rng rng(601);
  const int n = 1000;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(9);
  for (int it = 0; it < n; ++it) s += gen_gass_benchmark(rng).theta_true;
  s /= n;

  // independent brute-force rejection sample of the constrained prior
  Rng rng2(602);
  GassBenchmarkInstance tmpl = gen_gass_benchmark(rng2);
  Eigen::LLT<Eigen::MatrixXd> llt(tmpl.sigma);
  Eigen::MatrixXd chol = llt.matrixL();
  ConstraintSet cons = gass_benchmark_constraints();
  Eigen::VectorXd mean_oracle = Eigen::VectorXd::Zero(9);
  Eigen::VectorXd var_oracle = Eigen::VectorXd::Zero(9);
  long accepted = 0, proposals = 0;
  while (accepted < 20000 && proposals < 8000000) {
    ++proposals;
    Eigen::VectorXd z(9);
    for (int i = 0; i < 9; ++i) z[i] = rng2.normal();
    Eigen::VectorXd theta = tmpl.mu + chol * z;
    if (cons.satisfied(theta, 0.0)) {
      mean_oracle += theta;
      var_oracle += theta.cwiseProduct(theta);
      ++accepted;
    }
  }
  REQUIRE(accepted >= 5000);
  mean_oracle /= accepted;
  var_oracle = var_oracle / accepted - mean_oracle.cwiseProduct(mean_oracle);
  for (int i = 0; i < 9; ++i) {
    double se = std::sqrt(var_oracle[i] * (1.0 / n + 1.0 / accepted));
    CHECK(std::fabs(s[i] - mean_oracle[i]) < 3.5 * se);
  }
}

TEST_CASE("poisson dynamical system: moments and plateau structure") {
  Rng rng(603);
  const int T = 20, D = 3;
  const int instances = 600;
  // E[v_jtd] = 0.2 * (t+1), E[y_ijt] = D * 0.2 * (t+1); cells within an
  // instance share factors, so aggregate per instance and use the
  // between-instance spread for the bounds
  std::vector<double> v5_means, y5_means;
  long plateau = 0, steps = 0;
  for (int rep = 0; rep < instances; ++rep) {
    PoissonDynSysInstance inst = gen_poisson_dynsys(5, 5, T, D, rng);
    double v_acc = 0.0, y_acc = 0.0;
    for (int j = 0; j < inst.M; ++j) {
      v_acc += inst.V_true[j](4, 0);
      for (int t = 0; t + 1 < T; ++t) {
        bool flat = (inst.V_true[j].row(t + 1) - inst.V_true[j].row(t)).cwiseAbs().maxCoeff() ==
                    0.0;
        plateau += flat ? 1 : 0;
        ++steps;
        CHECK(inst.V_true[j](t + 1, 0) >= inst.V_true[j](t, 0));  // nondecreasing
      }
      for (int i = 0; i < inst.N; ++i) y_acc += inst.count(i, j, 4);
    }
    v5_means.push_back(v_acc / inst.M);
    y5_means.push_back(y_acc / (inst.N * inst.M));
  }
  double se_v = std::sqrt(variance(v5_means) / instances);
  CHECK(std::fabs(mean(v5_means) - 0.2 * 5) < 4.0 * se_v);
  double se_y = std::sqrt(variance(y5_means) / instances);
  CHECK(std::fabs(mean(y5_means) - 0.6 * 5) < 4.0 * se_y);
  // gates fire at rate 0.2: plateau fraction near 0.8
  double frac = static_cast<double>(plateau) / steps;
  CHECK(std::fabs(frac - 0.8) < 3.0 * std::sqrt(0.8 * 0.2 / steps) + 0.01);
}

TEST_CASE("gaussian generator: zero-noise limit and smoothness budget") {
  Rng rng(604);
  GaussianSynthInstance tiny = gen_gaussian_functional_matrix(3, 3, 6, 2, 0.0, 1e-9, 2, rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int t = 0; t < 6; ++t) {
        double m = 0.5 * (tiny.y.value(i, j, t, 0) + tiny.y.value(i, j, t, 1));
        CHECK(m == doctest::Approx(tiny.truth.inner(i, j, t)).epsilon(1e-6));
      }
  // jump_prob = 0: second differences of every latent curve within budget
  for (int j = 0; j < 3; ++j)
    for (int d = 0; d < 2; ++d)
      for (int t = 0; t + 2 < 6; ++t) {
        double dd = tiny.truth.V[j](t + 2, d) - 2.0 * tiny.truth.V[j](t + 1, d) +
                    tiny.truth.V[j](t, d);
        CHECK(std::fabs(dd) <= tiny.smoothness_budget + 1e-12);
      }
}

TEST_CASE("generators are deterministic under a fixed seed") {
  Rng a(605), b(605);
  PoissonDynSysInstance ia = gen_poisson_dynsys(4, 4, 8, 2, a);
  PoissonDynSysInstance ib = gen_poisson_dynsys(4, 4, 8, 2, b);
  CHECK(ia.counts == ib.counts);
  CHECK((ia.W_true - ib.W_true).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("metrics: exact prediction, vacuous intervals, hand-computed example") {
  std::vector<double> t = {1.0, 1.0, 5.0};
  PointMetrics perfect = point_metrics(t, t);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.mae == 0.0);
  CHECK(perfect.rmse == 0.0);

  std::vector<double> lo = {-1e300, -1e300, -1e300}, hi = {1e300, 1e300, 1e300};
  CHECK(interval_coverage(t, lo, hi) == 1.0);

  std::vector<double> pred = {1.0, 2.0, 3.0};
  PointMetrics m = point_metrics(pred, t);
  CHECK(m.mae == doctest::Approx(1.0));
  CHECK(m.rmse == doctest::Approx(std::sqrt(5.0 / 3.0)));

  std::vector<double> short_vec = {1.0};
  CHECK_THROWS_AS(point_metrics(pred, short_vec), std::invalid_argument);
}

TEST_CASE("btf recovers smooth truth better than replicate averaging") {
  int wins = 0;
  for (uint64_t seed : {10ULL, 20ULL, 30ULL, 40ULL, 50ULL}) {
    Rng rng(seed);
    const int R = 3;
    const double noise = 0.6;
    GaussianSynthInstance inst = gen_gaussian_functional_matrix(6, 6, 10, 2, 0.0, noise, R, rng);
    FitConfig cfg;
    cfg.D = 2;
    cfg.k = 1;
    cfg.rho2 = 0.01;
    cfg.sweeps = 600;
    cfg.burn_in = 250;
    cfg.seed = seed;
    cfg.likelihood = GaussianLik{1.0};
    PosteriorSamples post = fit(inst.y, cfg);
    double sse = 0.0;
    long n = 0;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        Eigen::VectorXd m = post.mean_curve(i, j);
        for (int t = 0; t < 10; ++t) {
          sse += std::pow(m[t] - inst.truth.inner(i, j, t), 2.0);
          ++n;
        }
      }
    double rmse = std::sqrt(sse / n);
    INFO("seed=", seed, " rmse=", rmse, " bar=", noise / std::sqrt(R));
    if (rmse < noise / std::sqrt(static_cast<double>(R))) ++wins;
  }
  CHECK(wins >= 3);
}

TEST_SUITE_END();
