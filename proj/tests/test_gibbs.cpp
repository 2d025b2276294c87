#include <doctest.h>

#include <cmath>

#include "btf/benchmarks.hpp"
#include "btf/gibbs.hpp"
#include "btf/mvn.hpp"
#include "btf/stats.hpp"
#include "support/geweke.hpp"

using namespace btf;

TEST_SUITE_BEGIN("gibbs");

namespace {

ObservationTensor single_cell(double y) {
  ObservationTensor t(1, 1, 1, 1);
  t.set(0, 0, 0, 0, y);
  return t;
}

}  // namespace

TEST_CASE("row update: scalar conjugate normal") {
  // D=1, one observation y with v=1, nu2=1, sigma2=1: precision 2, mean y/2
  const double y = 1.4;
  ObservationTensor obs = single_cell(y);
  ObsIndex idx = ObsIndex::build(obs);
  CompositeDiffMatrix delta = build_composite_tf_matrix(1, 0);
  ShrinkageState sh(1, delta.rows(), 1.0);

  const int n = 100000;
  double s1 = 0.0, s2 = 0.0;
  for (int it = 0; it < n; ++it) {
    FactorState st(1, 1, 1, 1);
    st.V[0](0, 0) = 1.0;
    update_rows_gaussian(idx, st, sh, 1.0, RngKey{9001, static_cast<uint64_t>(it)});
    s1 += st.W(0, 0);
    s2 += st.W(0, 0) * st.W(0, 0);
  }
  double m = s1 / n, v = s2 / n - m * m;
  CHECK(std::fabs(m - y / 2.0) < 3.0 * std::sqrt(0.5 / n));
  CHECK(v == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("row update: no observations fall back to the prior") {
  // two rows, only row 0 observed
  ObservationTensor obs(2, 1, 1, 1);
  obs.set(0, 0, 0, 0, 3.0);
  ObsIndex idx = ObsIndex::build(obs);
  ShrinkageState sh(1, 1, 1.0);
  sh.sigma2 = 2.5;
  const int n = 50000;
  double s1 = 0.0, s2 = 0.0;
  for (int it = 0; it < n; ++it) {
    FactorState st(2, 1, 1, 1);
    st.V[0](0, 0) = 1.0;
    update_rows_gaussian(idx, st, sh, 1.0, RngKey{42, static_cast<uint64_t>(it)});
    s1 += st.W(1, 0);
    s2 += st.W(1, 0) * st.W(1, 0);
  }
  double m = s1 / n, v = s2 / n - m * m;
  CHECK(std::fabs(m) < 3.0 * std::sqrt(sh.sigma2 / n));
  CHECK(v == doctest::Approx(sh.sigma2).epsilon(0.03));
}

TEST_CASE("row update matches the dense conjugate posterior on a random instance") {
  Rng rng(300);
  const int N = 3, M = 2, T = 4, R = 2, D = 2;
  const double nu2 = 0.7;
  ObservationTensor obs(N, M, T, R);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t)
        for (int r = 0; r < R; ++r)
          if (rng.uniform() < 0.8) obs.set(i, j, t, r, rng.normal());
  ObsIndex idx = ObsIndex::build(obs);
  ShrinkageState sh(M, 4, 1.0);
  sh.sigma2 = 1.3;
  FactorState base(N, M, T, D);
  for (auto& v : base.V)
    for (int t = 0; t < T; ++t)
      for (int d = 0; d < D; ++d) v(t, d) = rng.normal();

  // dense oracle for row 0
  Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(D, D) / sh.sigma2;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(D);
  for (int ci : idx.by_row[0]) {
    const CellObs& c = idx.cells[ci];
    Eigen::VectorXd v = base.V[c.j].row(c.t).transpose();
    prec += c.count / nu2 * v * v.transpose();
    h += c.sum / nu2 * v;
  }
  Eigen::VectorXd mean_oracle = prec.inverse() * h;
  Eigen::MatrixXd cov_oracle = prec.inverse();

  const int n = 100000;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(D);
  for (int it = 0; it < n; ++it) {
    FactorState st = base;
    update_rows_gaussian(idx, st, sh, nu2, RngKey{777, static_cast<uint64_t>(it)});
    s1 += st.W.row(0).transpose();
  }
  for (int d = 0; d < D; ++d)
    CHECK(std::fabs(s1[d] / n - mean_oracle[d]) < 3.0 * std::sqrt(cov_oracle(d, d) / n));
}

TEST_CASE("column update: 2x2 dense oracle") {
  // N=1, D=1, T=2, k=0, all scales 1, one replicate: precision [[3,-1],[-1,2]]
  Rng rng(301);
  const double y1 = 0.8, y2 = -0.4;
  ObservationTensor obs(1, 1, 2, 1);
  obs.set(0, 0, 0, 0, y1);
  obs.set(0, 0, 1, 0, y2);
  ObsIndex idx = ObsIndex::build(obs);
  CompositeDiffMatrix delta = build_composite_tf_matrix(2, 0);
  ShrinkageState sh(1, delta.rows(), 1.0);

  Eigen::MatrixXd prec(2, 2);
  prec << 3.0, -1.0, -1.0, 2.0;
  Eigen::VectorXd h(2);
  h << y1, y2;
  Eigen::VectorXd mean_oracle = prec.inverse() * h;
  Eigen::MatrixXd cov_oracle = prec.inverse();

  const int n = 100000;
  Eigen::Vector2d s1 = Eigen::Vector2d::Zero();
  for (int it = 0; it < n; ++it) {
    FactorState st(1, 1, 2, 1);
    st.W(0, 0) = 1.0;
    update_cols_gaussian(idx, st, sh, 1.0, delta, RngKey{31337, static_cast<uint64_t>(it)});
    s1 += st.V[0].col(0);
  }
  for (int t = 0; t < 2; ++t)
    CHECK(std::fabs(s1[t] / n - mean_oracle[t]) < 3.5 * std::sqrt(cov_oracle(t, t) / n));
}

TEST_CASE("column update without observations reproduces the trend prior") {
  // column 1 never observed: its draw must match MVN(0, (D^T T D)^-1)
  ObservationTensor obs(1, 2, 3, 1);
  obs.set(0, 0, 0, 0, 1.0);
  obs.set(0, 0, 1, 0, 1.0);
  obs.set(0, 0, 2, 0, 1.0);
  ObsIndex idx = ObsIndex::build(obs);
  CompositeDiffMatrix delta = build_composite_tf_matrix(3, 0);
  ShrinkageState sh(2, delta.rows(), 0.6);
  sh.tau2.row(1) << 0.5, 1.5, 2.5;

  const int n = 60000;
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(delta.rows());
  for (int it = 0; it < n; ++it) {
    FactorState st(1, 2, 3, 1);
    st.W(0, 0) = 1.0;
    update_cols_gaussian(idx, st, sh, 1.0, delta, RngKey{555, static_cast<uint64_t>(it)});
    Eigen::VectorXd diffs = delta.matrix * st.V[1].col(0);
    s2 += diffs.cwiseProduct(diffs);
  }
  for (int l = 0; l < delta.rows(); ++l) {
    double target = sh.rho2 * sh.tau2(1, l);
    CHECK(std::fabs(s2[l] / n - target) < 4.0 * target * std::sqrt(2.0 / n));
  }
}

TEST_CASE("replicate order does not change the conditional updates") {
  ObservationTensor a(1, 1, 2, 2), b(1, 1, 2, 2);
  a.set(0, 0, 0, 0, 1.0);
  a.set(0, 0, 0, 1, 2.0);
  a.set(0, 0, 1, 0, -0.5);
  b.set(0, 0, 0, 0, 2.0);  // swapped replicates
  b.set(0, 0, 0, 1, 1.0);
  b.set(0, 0, 1, 1, -0.5);  // different replicate slot
  ObsIndex ia = ObsIndex::build(a), ib = ObsIndex::build(b);
  ShrinkageState sh(1, 2, 1.0);
  FactorState sa(1, 1, 2, 1), sb(1, 1, 2, 1);
  sa.V[0].setOnes();
  sb.V[0].setOnes();
  update_rows_gaussian(ia, sa, sh, 1.0, RngKey{99, 0});
  update_rows_gaussian(ib, sb, sh, 1.0, RngKey{99, 0});
  CHECK(sa.W(0, 0) == sb.W(0, 0));
}

TEST_CASE("binomial single cell: posterior logit sign follows the data") {
  CompositeDiffMatrix delta = build_composite_tf_matrix(1, 0);
  for (int y : {0, 1}) {
    ObservationTensor obs = single_cell(y);
    ObsIndex idx = ObsIndex::build(obs);
    BinomialLik lik(1, 1, 1, 1);
    ShrinkageState sh(1, 1, 1.0);
    double acc = 0.0;
    const int n = 20000;
    FactorState st(1, 1, 1, 1);
    st.W(0, 0) = 0.1;
    st.V[0](0, 0) = 0.1;
    for (int it = 0; it < n; ++it) {
      update_binomial(idx, lik, st, sh, delta, RngKey{1234, static_cast<uint64_t>(it)});
      acc += st.inner(0, 0, 0);
    }
    double mean_theta = acc / n;
    INFO("y=", y, " E[theta]=", mean_theta);
    CHECK((y == 1 ? mean_theta > 0.02 : mean_theta < -0.02));
  }
}

TEST_CASE("binomial chain matches 2-d quadrature posterior mean of theta") {
  // 1x1x1, D=1, n=10 trials, y=8; sigma2 and rho2*tau2 fixed at 1
  const int trials = 10, y = 8;
  ObservationTensor obs = single_cell(y);
  ObsIndex idx = ObsIndex::build(obs);
  BinomialLik lik(1, 1, 1, trials);
  CompositeDiffMatrix delta = build_composite_tf_matrix(1, 0);
  ShrinkageState sh(1, 1, 1.0);

  // quadrature over (w, v)
  const int G = 900;
  double lo = -6.0, hi = 6.0, step = (hi - lo) / G;
  double z_num = 0.0, z_den = 0.0;
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b) {
      double w = lo + (a + 0.5) * step;
      double v = lo + (b + 0.5) * step;
      double theta = w * v;
      double p = 1.0 / (1.0 + std::exp(-theta));
      double weight = std::exp(-0.5 * (w * w + v * v)) * std::pow(p, y) *
                      std::pow(1.0 - p, trials - y);
      z_num += theta * weight;
      z_den += weight;
    }
  double oracle = z_num / z_den;

  FactorState st(1, 1, 1, 1);
  st.W(0, 0) = 0.5;
  st.V[0](0, 0) = 0.5;
  const int n = 150000;
  double acc = 0.0;
  for (int it = 0; it < n; ++it) {
    update_binomial(idx, lik, st, sh, delta, RngKey{4321, static_cast<uint64_t>(it)});
    acc += st.inner(0, 0, 0);
  }
  CHECK(acc / n == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("binomial rejects successes above the trial count") {
  ObservationTensor obs = single_cell(5.0);
  FitConfig cfg;
  cfg.D = 1;
  cfg.sweeps = 10;
  cfg.burn_in = 0;
  cfg.likelihood = BinomialLik(1, 1, 1, 3);
  CHECK_THROWS_WITH_AS(fit(obs, cfg), doctest::Contains("outside [0, trials]"),
                       std::invalid_argument);
}

TEST_CASE("sigma2 update: prior moments at W = 0 and concentration for large data") {
  Rng rng(302);
  const int n = 100000;
  Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(2, 2);
  double s = 0.0;
  for (int it = 0; it < n; ++it) s += 1.0 / update_sigma2(w0, rng);
  // sigma^-2 ~ Gamma(0.1 + 2, 0.1): mean 21
  double target = 2.1 / 0.1;
  double sd = std::sqrt(2.1) / 0.1;
  CHECK(std::fabs(s / n - target) < 3.0 * sd / std::sqrt(n));

  Eigen::MatrixXd big = Eigen::MatrixXd::Ones(40, 25);  // ||W||^2 = ND = 1000
  double acc = 0.0;
  for (int it = 0; it < 2000; ++it) acc += 1.0 / update_sigma2(big, rng);
  CHECK(acc / 2000 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("dic: a degenerate chain has zero effective parameters") {
  ObservationTensor obs(1, 1, 2, 1);
  obs.set(0, 0, 0, 0, 0.5);
  obs.set(0, 0, 1, 0, 0.7);
  PosteriorSamples samples;
  FactorState st(1, 1, 2, 1);
  st.W(0, 0) = 1.0;
  st.V[0] << 0.4, 0.6;
  for (int s = 0; s < 12; ++s) {
    samples.draws.push_back(st);
    samples.nu2_draws.push_back(0.5);
  }
  LikelihoodSpec lik = GaussianLik{0.5};
  DicParts parts = compute_dic_parts(samples, obs, lik);
  CHECK(parts.p_d == doctest::Approx(0.0).epsilon(1e-9));
  ObsIndex idx = ObsIndex::build(obs);
  CHECK(parts.dic == doctest::Approx(-2.0 * data_loglik(idx, st, lik, 0.5)));
}

TEST_CASE("dic prefers the true factor dimension and does not reward noise dimensions") {
  int wins_small = 0, ok_noise = 0;
  for (uint64_t seed : {11ULL, 22ULL, 33ULL}) {
    Rng rng(seed);
    GaussianSynthInstance inst = gen_gaussian_functional_matrix(6, 6, 8, 2, 0.0, 0.3, 2, rng);
    auto fit_one = [&](int D) {
      FitConfig cfg;
      cfg.D = D;
      cfg.k = 0;
      cfg.rho2 = 0.1;
      cfg.sweeps = 500;
      cfg.burn_in = 200;
      cfg.seed = seed * 1000 + D;
      cfg.likelihood = GaussianLik{1.0};
      PosteriorSamples post = fit(inst.y, cfg);
      return compute_dic_parts(post, inst.y, cfg.likelihood);
    };
    DicParts d1 = fit_one(1), d2 = fit_one(2), d7 = fit_one(7);
    if (d2.dic < d1.dic) ++wins_small;
    if (d7.dic >= d2.dic - 2.0 * std::fabs(d2.p_d)) ++ok_noise;
  }
  CHECK(wins_small >= 2);
  CHECK(ok_noise >= 2);
}

// ---- constrained ALS -------------------------------------------------------------

TEST_CASE("als recovers a noiseless rank-1 tensor exactly") {
  Rng rng(303);
  const int N = 4, M = 3, T = 5;
  FactorState truth(N, M, T, 1);
  for (int i = 0; i < N; ++i) truth.W(i, 0) = 0.5 + rng.uniform();
  for (int j = 0; j < M; ++j)
    for (int t = 0; t < T; ++t) truth.V[j](t, 0) = 0.2 + rng.uniform();
  ObservationTensor obs(N, M, T, 1);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) obs.set(i, j, t, 0, truth.inner(i, j, t));
  PseudoEpApprox ep = init_constrained_als(obs, ConstraintKind::nonnegative, 1, 50);
  double max_err = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t)
        max_err = std::max(max_err, std::fabs(ep.obs(i, j, t) - truth.inner(i, j, t)));
  CHECK(max_err < 1e-6);
  CHECK(*std::min_element(ep.pseudo_var.begin(), ep.pseudo_var.end()) >= 1e-4);
}

TEST_CASE("als clips infeasible data onto the unit box") {
  Rng rng(304);
  const int N = 3, M = 3, T = 4;
  ObservationTensor obs(N, M, T, 1);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) obs.set(i, j, t, 0, 1.5 + rng.uniform());  // all above 1
  PseudoEpApprox ep = init_constrained_als(obs, ConstraintKind::unit_box, 2, 30);
  double residual = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        CHECK(ep.obs(i, j, t) <= 1.0 + 1e-7);
        CHECK(ep.obs(i, j, t) >= -1e-7);
        residual += std::fabs(obs.value(i, j, t, 0) - ep.obs(i, j, t));
      }
  CHECK(residual > 0.1);
}

TEST_CASE("als honors monotonicity when the constraint set is active") {
  Rng rng(305);
  const int N = 4, M = 3, T = 5, R = 2;
  DosePlateSim sim = gen_dose_plates(N, M, T, R, 4, 2, 0.08, 0.05, rng);
  ObservationTensor obs = ObservationTensor::from_long_format(dose_sim_to_long(sim));
  PseudoEpApprox ep = init_constrained_als(obs, ConstraintKind::unit_box_monotone, 2, 30);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t + 1 < T; ++t)
        CHECK(ep.obs(i, j, t) >= ep.obs(i, j, t + 1) - 1e-7);
  // the sampler can start from the ALS factorization
  ObsIndex idx = ObsIndex::build(obs);
  for (int i = 0; i < N; ++i) {
    std::vector<std::pair<int, int>> pairs;
    for (int ci : idx.by_row[i]) pairs.emplace_back(idx.cells[ci].j, idx.cells[ci].t);
    CHECK_NOTHROW(
        build_row_constraints(ConstraintKind::unit_box_monotone, ep.init_state, i, pairs));
  }
}

// ---- black-box sweeps ----------------------------------------------------------------

TEST_CASE("pseudo-EP corrected likelihood identity") {
  Rng rng(306);
  const int N = 2, M = 2, T = 3;
  ObservationTensor obs(N, M, T, 1);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) obs.set(i, j, t, 0, rng.normal());
  ObsIndex idx = ObsIndex::build(obs);
  PseudoEpApprox ep = init_constrained_als(obs, ConstraintKind::none, 1, 20);
  BlackBoxLik lik = make_gaussian_blackbox(0.8);

  for (int rep = 0; rep < 50; ++rep) {
    int i = static_cast<int>(rng.integer(N));
    Eigen::VectorXd w(1);
    w << rng.normal();
    double l_true = 0.0, l_pseudo = 0.0, l_corr = 0.0;
    for (int ci : idx.by_row[i]) {
      const CellObs& c = idx.cells[ci];
      double theta = ep.init_state.V[c.j].row(c.t).dot(w);
      double lt = lik.loglik(i, c.j, c.t, idx.values(c), theta);
      double lp = norm_logpdf(ep.obs(i, c.j, c.t), theta, ep.var(i, c.j, c.t));
      l_true += lt;
      l_pseudo += lp;
      l_corr += lt - lp;
    }
    CHECK(std::fabs(l_corr + l_pseudo - l_true) < 1e-10);
  }
}

TEST_CASE("black-box Gaussian matches the exact conjugate sampler") {
  Rng rng(307);
  const int N = 2, M = 2, T = 3, D = 1;
  const double nu2 = 0.6;
  ObservationTensor obs(N, M, T, 1);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) obs.set(i, j, t, 0, rng.normal() + 0.5);
  ObsIndex idx = ObsIndex::build(obs);
  CompositeDiffMatrix delta = build_composite_tf_matrix(T, 0);
  ShrinkageState sh(M, delta.rows(), 1.0);

  auto theta_stats = [&](bool blackbox, bool with_ep) {
    FactorState st(N, M, T, D);
    st.W.setConstant(0.5);
    for (auto& v : st.V) v.setConstant(0.5);
    PseudoEpApprox ep;
    if (with_ep) ep = init_constrained_als(obs, ConstraintKind::none, D, 30);
    BlackBoxLik lik = make_gaussian_blackbox(nu2);
    GassConfig gcfg;
    const int sweeps = 40000;
    double acc = 0.0, acc2 = 0.0;
    for (int s = 0; s < sweeps; ++s) {
      RngKey key{blackbox ? 70001ULL : 70002ULL, static_cast<uint64_t>(s)};
      if (blackbox)
        gibbs_sweep_blackbox(idx, st, sh, delta, with_ep ? &ep : nullptr, lik, gcfg, key);
      else {
        update_rows_gaussian(idx, st, sh, nu2, key);
        update_cols_gaussian(idx, st, sh, nu2, delta, key);
      }
      double theta = st.inner(0, 0, 0);
      acc += theta;
      acc2 += theta * theta;
    }
    double m = acc / sweeps;
    return std::pair<double, double>(m, acc2 / sweeps - m * m);
  };

  auto [m_exact, v_exact] = theta_stats(false, false);
  auto [m_bb, v_bb] = theta_stats(true, false);
  auto [m_bb_ep, v_bb_ep] = theta_stats(true, true);
  INFO("exact=", m_exact, " blackbox=", m_bb, " blackbox+ep=", m_bb_ep);
  double tol = std::max(0.02 * std::fabs(m_exact), 0.06 * std::sqrt(v_exact));
  CHECK(std::fabs(m_bb - m_exact) < tol);
  CHECK(std::fabs(m_bb_ep - m_exact) < tol);
  CHECK(v_bb == doctest::Approx(v_exact).epsilon(0.15));
  CHECK(v_bb_ep == doctest::Approx(v_exact).epsilon(0.15));
}

TEST_CASE("black-box Poisson matches 2-d quadrature on a single cell") {
  const long y = 3;
  ObservationTensor obs = single_cell(static_cast<double>(y));
  ObsIndex idx = ObsIndex::build(obs);
  CompositeDiffMatrix delta = build_composite_tf_matrix(1, 0);
  ShrinkageState sh(1, 1, 1.0);

  // quadrature over (w, v) with constraint wv >= 0
  const int G = 1000;
  double lo = -6.0, hi = 6.0, step = (hi - lo) / G;
  double z_num = 0.0, z_den = 0.0;
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b) {
      double w = lo + (a + 0.5) * step;
      double v = lo + (b + 0.5) * step;
      double theta = w * v;
      if (theta < 0.0) continue;
      double weight = std::exp(-0.5 * (w * w + v * v) + poisson_logpmf(y, std::max(theta, 1e-12)));
      z_num += theta * weight;
      z_den += weight;
    }
  double oracle = z_num / z_den;

  FactorState st(1, 1, 1, 1);
  st.W(0, 0) = 1.0;
  st.V[0](0, 0) = 1.0;
  BlackBoxLik lik = make_poisson_blackbox();
  GassConfig gcfg;
  const int sweeps = 150000;
  double acc = 0.0;
  for (int s = 0; s < sweeps; ++s) {
    gibbs_sweep_blackbox(idx, st, sh, delta, nullptr, lik, gcfg,
                         RngKey{90210, static_cast<uint64_t>(s)});
    acc += st.inner(0, 0, 0);
  }
  CHECK(acc / sweeps == doctest::Approx(oracle).epsilon(0.02));
}

// ---- fit driver ------------------------------------------------------------------------

TEST_CASE("fit is deterministic under a fixed seed") {
  Rng rng(308);
  GaussianSynthInstance inst = gen_gaussian_functional_matrix(3, 3, 4, 1, 0.1, 0.4, 2, rng);
  FitConfig cfg;
  cfg.D = 1;
  cfg.sweeps = 60;
  cfg.burn_in = 20;
  cfg.seed = 4242;
  cfg.likelihood = GaussianLik{1.0};
  PosteriorSamples a = fit(inst.y, cfg);
  PosteriorSamples b = fit(inst.y, cfg);
  REQUIRE(a.loglik_trace.size() == b.loglik_trace.size());
  for (size_t s = 0; s < a.loglik_trace.size(); ++s)
    CHECK(a.loglik_trace[s] == b.loglik_trace[s]);
  CHECK(a.draws.size() == a.expected_draws());
}

TEST_CASE("fit beats per-cell replicate means on smooth-plus-jump data") {
  int wins = 0;
  for (uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    Rng rng(seed + 900);
    GaussianSynthInstance inst = gen_gaussian_functional_matrix(5, 5, 10, 2, 0.08, 0.5, 3, rng);
    FitConfig cfg;
    cfg.D = 2;
    cfg.k = 1;
    cfg.rho2 = 0.01;
    cfg.sweeps = 700;
    cfg.burn_in = 300;
    cfg.seed = seed;
    cfg.likelihood = GaussianLik{1.0};
    PosteriorSamples post = fit(inst.y, cfg);

    double sse_fit = 0.0, sse_base = 0.0;
    long n = 0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd m = post.mean_curve(i, j);
        for (int t = 0; t < 10; ++t) {
          double truth = inst.truth.inner(i, j, t);
          double repmean = 0.0;
          for (int r = 0; r < 3; ++r) repmean += inst.y.value(i, j, t, r);
          repmean /= 3.0;
          sse_fit += (m[t] - truth) * (m[t] - truth);
          sse_base += (repmean - truth) * (repmean - truth);
          ++n;
        }
      }
    if (sse_fit < sse_base) ++wins;
  }
  CHECK(wins >= 3);
}

TEST_CASE("gaussian path preserves the joint distribution (Geweke smoke)") {
  testsupport::GewekeModel m;
  m.N = 3;
  m.M = 3;
  m.T = 4;
  m.D = 2;
  auto streams = testsupport::geweke_gaussian(m, 8000, 700, 120, 8675309);
  INFO("min KS p=", streams.min_ks_pvalue());
  CHECK(streams.min_ks_pvalue() > 0.002);
}

TEST_CASE("binomial path preserves the joint distribution (Geweke smoke)") {
  testsupport::GewekeModel m;
  m.N = 2;
  m.M = 2;
  m.T = 3;
  m.D = 2;
  m.trials = 5;
  auto streams = testsupport::geweke_binomial(m, 12000, 1200, 150, 24601);
  INFO("min KS p=", streams.min_ks_pvalue());
  CHECK(streams.min_ks_pvalue() > 0.002);
}

TEST_SUITE_END();
