#include "btf/benchmarks.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "btf/gass.hpp"
#include "btf/gibbs.hpp"
#include "btf/pav.hpp"
#include "btf/stats.hpp"

namespace btf {

namespace {

void parallel_trials(int trials, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, trials));
  if (threads == 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        int t = next.fetch_add(1);
        if (t >= trials) return;
        body(t);
      }
    });
  for (auto& th : pool) th.join();
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

// --- gamma-scale benchmark -----------------------------------------------------

ConstraintSet gass_benchmark_constraints(int n, double lo, double hi) {
  ConstraintSet cons;
  cons.rows = Eigen::MatrixXd::Zero(2 * n + (n - 1), n);
  cons.bounds = Eigen::VectorXd::Zero(2 * n + (n - 1));
  int r = 0;
  for (int i = 0; i < n; ++i, ++r) {
    cons.rows(r, i) = 1.0;
    cons.bounds[r] = lo;
  }
  for (int i = 0; i < n; ++i, ++r) {
    cons.rows(r, i) = -1.0;
    cons.bounds[r] = -hi;
  }
  for (int i = 0; i + 1 < n; ++i, ++r) {
    cons.rows(r, i) = 1.0;
    cons.rows(r, i + 1) = -1.0;
    cons.bounds[r] = 0.0;
  }
  return cons;
}

GassBenchmarkInstance gen_gass_benchmark(Rng& rng) {
  GassBenchmarkInstance inst;
  const int n = 9;
  const int R = 3;
  inst.mu = Eigen::VectorXd(n);
  inst.mu << 0.95, 0.8, 0.75, 0.5, 0.29, 0.2, 0.17, 0.15, 0.15;
  inst.sigma = Eigen::MatrixXd(n, n);
  const double tau = 0.1, b = 3.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      inst.sigma(i, j) = tau * std::exp(-0.5 / b * (i - j) * (i - j));

  ConstraintSet cons = gass_benchmark_constraints();
  Eigen::LLT<Eigen::MatrixXd> llt(inst.sigma);
  Eigen::MatrixXd chol = llt.matrixL();
  bool ok = false;
  for (long attempt = 0; attempt < 1000000; ++attempt) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    inst.theta_true = inst.mu + chol * z;
    if (cons.satisfied(inst.theta_true, 0.0)) {
      ok = true;
      break;
    }
  }
  if (!ok) throw std::runtime_error("gen_gass_benchmark: rejection sampling exhausted 1e6 proposals");

  inst.y = Eigen::MatrixXd(n, R);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < R; ++r) inst.y(i, r) = rng.gamma(inst.shape_a, inst.theta_true[i]);
  return inst;
}

namespace {

// sum of gamma-scale log densities over all points and replicates
double gass_bench_loglik(const GassBenchmarkInstance& inst, const Eigen::VectorXd& theta) {
  double total = 0.0;
  for (int i = 0; i < theta.size(); ++i) {
    if (theta[i] <= 0.0) return -INFINITY;
    for (int r = 0; r < inst.y.cols(); ++r)
      total += gamma_logpdf(inst.y(i, r), inst.shape_a, theta[i]);
  }
  return total;
}

struct ChainScore {
  double mse = 0.0;
  double coverage = 0.0;
};

ChainScore score_samples(const std::vector<Eigen::VectorXd>& kept,
                         const Eigen::VectorXd& theta_true) {
  const int n = static_cast<int>(theta_true.size());
  Eigen::VectorXd mean_est = Eigen::VectorXd::Zero(n);
  for (const auto& s : kept) mean_est += s;
  mean_est /= static_cast<double>(kept.size());
  ChainScore out;
  for (int i = 0; i < n; ++i) {
    std::vector<double> coord;
    coord.reserve(kept.size());
    for (const auto& s : kept) coord.push_back(s[i]);
    double lo = quantile(coord, 0.05);
    double hi = quantile(std::move(coord), 0.95);
    if (theta_true[i] >= lo && theta_true[i] <= hi) out.coverage += 1.0;
    out.mse += (mean_est[i] - theta_true[i]) * (mean_est[i] - theta_true[i]);
  }
  out.mse /= n;
  out.coverage /= n;
  return out;
}

Eigen::VectorXd project_monotone_box(const Eigen::VectorXd& v, double lo, double hi) {
  Eigen::VectorXd p = pav_monotone_projection(v, MonotoneDirection::nonincreasing);
  return p.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

Table1Result run_gass_table1(int m, int trials, uint64_t seed, int threads, int grid_size) {
  if (m < 1 || trials < 1) throw std::invalid_argument("run_gass_table1: bad arguments");
  const std::vector<std::string> samplers = {"GASS", "RS", "LRS", "PP", "LPP"};
  Table1Result result;
  std::map<std::string, Table1Cell>& table = result.cells;
  for (const auto& s : samplers) {
    table[s].mse_trials.assign(trials, std::numeric_limits<double>::quiet_NaN());
    table[s].coverage_trials.assign(trials, std::numeric_limits<double>::quiet_NaN());
  }
  std::vector<char> failed(trials, 0);

  parallel_trials(trials, threads, [&](int trial) {
    try {
    Rng rng = Rng::derive(seed, 0x7461626c65ULL, static_cast<uint64_t>(trial));
    GassBenchmarkInstance inst = gen_gass_benchmark(rng);
    ConstraintSet cons = gass_benchmark_constraints();
    const int n = static_cast<int>(inst.mu.size());
    const int total_steps = 2 * m;

    auto run_chain = [&](const std::string& name) {
      std::vector<Eigen::VectorXd> kept;
      kept.reserve(m);
      GassConfig gcfg;
      gcfg.grid_size = grid_size;

      if (name == "GASS") {
        Eigen::VectorXd x = inst.mu;
        LogLikFn ll = [&](const Eigen::VectorXd& th) { return gass_bench_loglik(inst, th); };
        for (int s = 0; s < total_steps; ++s) {
          x = gass_step(x, inst.mu, inst.sigma, ll, cons, gcfg, rng);
          if (s >= m) kept.push_back(x);
        }
      } else if (name == "RS") {
        // constraints folded into the likelihood: violations reject
        Eigen::VectorXd x = inst.mu;
        LogLikFn ll = [&](const Eigen::VectorXd& th) -> double {
          if (!cons.satisfied(th, 0.0)) return -INFINITY;
          return gass_bench_loglik(inst, th);
        };
        for (int s = 0; s < total_steps; ++s) {
          x = ess_step(x, inst.mu, inst.sigma, ll, rng);
          if (s >= m) kept.push_back(x);
        }
      } else if (name == "LRS") {
        // logits through the logistic transform; box lower bound and
        // monotonicity still fold as rejections
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = logit(inst.mu[i]);
        LogLikFn ll = [&](const Eigen::VectorXd& zv) -> double {
          Eigen::VectorXd th(n);
          for (int i = 0; i < n; ++i) th[i] = logistic(zv[i]);
          if (!cons.satisfied(th, 0.0)) return -INFINITY;
          return gass_bench_loglik(inst, th);
        };
        for (int s = 0; s < total_steps; ++s) {
          z = ess_step(z, inst.mu, inst.sigma, ll, rng);
          if (s >= m) {
            Eigen::VectorXd th(n);
            for (int i = 0; i < n; ++i) th[i] = logistic(z[i]);
            kept.push_back(th);
          }
        }
      } else if (name == "PP") {
        // unconstrained chain, constraints enforced post hoc by projection
        Eigen::VectorXd x = inst.mu;
        LogLikFn ll = [&](const Eigen::VectorXd& th) { return gass_bench_loglik(inst, th); };
        for (int s = 0; s < total_steps; ++s) {
          x = ess_step(x, inst.mu, inst.sigma, ll, rng);
          if (s >= m) kept.push_back(project_monotone_box(x, 0.1, 1.0));
        }
      } else {  // LPP
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = logit(inst.mu[i]);
        LogLikFn ll = [&](const Eigen::VectorXd& zv) {
          Eigen::VectorXd th(n);
          for (int i = 0; i < n; ++i) th[i] = logistic(zv[i]);
          return gass_bench_loglik(inst, th);
        };
        for (int s = 0; s < total_steps; ++s) {
          z = ess_step(z, inst.mu, inst.sigma, ll, rng);
          if (s >= m) {
            Eigen::VectorXd th(n);
            for (int i = 0; i < n; ++i) th[i] = logistic(z[i]);
            kept.push_back(project_monotone_box(th, 0.1, 1.0));
          }
        }
      }
      ChainScore sc = score_samples(kept, inst.theta_true);
      table[name].mse_trials[trial] = sc.mse;
      table[name].coverage_trials[trial] = sc.coverage;
    };

    for (const auto& s : samplers) run_chain(s);
    } catch (const std::exception&) {
      failed[trial] = 1;
    }
  });

  for (int t = 0; t < trials; ++t)
    if (failed[t]) result.failed_trials.push_back(t);
  for (auto& [name, cell] : table) {
    std::vector<double> mse_ok, cov_ok;
    for (int t = 0; t < trials; ++t)
      if (!failed[t]) {
        mse_ok.push_back(cell.mse_trials[t]);
        cov_ok.push_back(cell.coverage_trials[t]);
      }
    if (mse_ok.empty()) continue;
    cell.mse_mean = mean(mse_ok);
    cell.coverage_mean = mean(cov_ok);
    cell.mse_se = se_of(mse_ok);
    cell.coverage_se = se_of(cov_ok);
  }
  return result;
}

// --- Poisson dynamical system ----------------------------------------------------

PoissonDynSysInstance gen_poisson_dynsys(int N, int M, int T, int D, Rng& rng) {
  if (N < 1 || M < 1 || T < 1 || D < 1)
    throw std::invalid_argument("gen_poisson_dynsys: bad dimensions");
  PoissonDynSysInstance inst;
  inst.N = N;
  inst.M = M;
  inst.T = T;
  inst.D = D;
  inst.V_true.assign(M, Eigen::MatrixXd::Zero(T, D));
  for (int j = 0; j < M; ++j) {
    Eigen::VectorXd level = Eigen::VectorXd::Zero(D);
    for (int t = 0; t < T; ++t) {
      // gate shared across latent dimensions: plateaus are exact
      if (rng.bernoulli(0.2))
        for (int d = 0; d < D; ++d) level[d] += rng.gamma(1.0, 1.0);
      inst.V_true[j].row(t) = level.transpose();
    }
  }
  inst.W_true = Eigen::MatrixXd(N, D);
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < D; ++d) inst.W_true(i, d) = rng.gamma(1.0, 1.0);
  inst.counts.assign(static_cast<size_t>(N) * M * T, 0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t)
        inst.counts[(static_cast<size_t>(i) * M + j) * T + t] = rng.poisson(inst.rate(i, j, t));
  return inst;
}

Table2Summary run_poisson_table2(int burn_in, int samples, int trials, uint64_t seed, int threads,
                                 int holdout_n) {
  Table2Summary out;
  out.trials.assign(trials, Table2Trial{});
  std::vector<char> failed(trials, 0);

  parallel_trials(trials, threads, [&](int trial) {
    try {
    Rng rng = Rng::derive(seed, 0x706f6973ULL, static_cast<uint64_t>(trial));
    PoissonDynSysInstance inst = gen_poisson_dynsys(11, 12, 20, 3, rng);
    auto held_out = [&](int i, int j) { return i < holdout_n && j < holdout_n; };

    ObservationTensor y(inst.N, inst.M, inst.T, 1);
    for (int i = 0; i < inst.N; ++i)
      for (int j = 0; j < inst.M; ++j)
        for (int t = 0; t < inst.T; ++t)
          if (!held_out(i, j)) y.set(i, j, t, 0, static_cast<double>(inst.count(i, j, t)));

    FitConfig cfg;
    cfg.D = 3;
    cfg.k = 0;
    cfg.rho2 = 0.1;
    cfg.sweeps = burn_in + samples;
    cfg.burn_in = burn_in;
    cfg.thin = 1;
    cfg.seed = Rng::derive(seed, 0x666974ULL, static_cast<uint64_t>(trial)).raw();
    cfg.likelihood = make_poisson_blackbox();
    PosteriorSamples post = fit(y, cfg);

    double abs_sum = 0.0, sq_sum = 0.0, nll = 0.0;
    long n = 0;
    for (int i = 0; i < inst.N; ++i)
      for (int j = 0; j < inst.M; ++j) {
        if (!held_out(i, j)) continue;
        Eigen::VectorXd mean_rate = post.mean_curve(i, j);
        for (int t = 0; t < inst.T; ++t) {
          double err = mean_rate[t] - inst.rate(i, j, t);
          abs_sum += std::fabs(err);
          sq_sum += err * err;
          ++n;
          // posterior predictive: -log mean_s P(y | rate_s)
          std::vector<double> lls;
          lls.reserve(post.draws.size());
          for (const auto& d : post.draws)
            lls.push_back(poisson_logpmf(inst.count(i, j, t), std::max(d.inner(i, j, t), 1e-12)));
          nll -= log_sum_exp(lls) - std::log(static_cast<double>(lls.size()));
        }
      }
    out.trials[trial].mae = abs_sum / n;
    out.trials[trial].rmse = std::sqrt(sq_sum / n);
    out.trials[trial].nll = nll;
    } catch (const std::exception&) {
      failed[trial] = 1;
    }
  });

  std::vector<double> mae, rmse, nll;
  for (int t = 0; t < trials; ++t) {
    if (failed[t]) {
      out.failed_trials.push_back(t);
      continue;
    }
    mae.push_back(out.trials[t].mae);
    rmse.push_back(out.trials[t].rmse);
    nll.push_back(out.trials[t].nll);
  }
  if (mae.empty()) throw std::runtime_error("run_poisson_table2: every trial failed");
  out.mae_mean = mean(mae);
  out.rmse_mean = mean(rmse);
  out.nll_mean = mean(nll);
  out.mae_se = se_of(mae);
  out.rmse_se = se_of(rmse);
  out.nll_se = se_of(nll);
  return out;
}

// --- Gaussian synthetic generator -------------------------------------------------

GaussianSynthInstance gen_gaussian_functional_matrix(int N, int M, int T, int D, double jump_prob,
                                                     double noise_sd, int R, Rng& rng) {
  if (N < 1 || M < 1 || T < 1 || D < 1 || R < 1)
    throw std::invalid_argument("gen_gaussian_functional_matrix: bad dimensions");
  if (noise_sd <= 0.0)
    throw std::invalid_argument("gen_gaussian_functional_matrix: noise_sd must be positive");
  GaussianSynthInstance inst;
  inst.noise_sd = noise_sd;
  inst.smoothness_budget = 0.05;
  inst.truth = FactorState(N, M, T, D);
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < D; ++d) inst.truth.W(i, d) = rng.normal() / std::sqrt(D);
  for (int j = 0; j < M; ++j)
    for (int d = 0; d < D; ++d) {
      double level = rng.normal();
      double slope = rng.uniform(-0.3, 0.3);
      for (int t = 0; t < T; ++t) {
        inst.truth.V[j](t, d) = level;
        slope += rng.uniform(-inst.smoothness_budget, inst.smoothness_budget);
        level += slope;
        if (jump_prob > 0.0 && rng.bernoulli(jump_prob)) level += rng.normal();
      }
    }
  inst.y = ObservationTensor(N, M, T, R);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        double theta = inst.truth.inner(i, j, t);
        for (int r = 0; r < R; ++r) inst.y.set(i, j, t, r, theta + noise_sd * rng.normal());
      }
  return inst;
}

// --- dose-response plate simulation -------------------------------------------------

DosePlateSim gen_dose_plates(int N, int M, int T, int R, int control_reps, int D,
                             double pipette_sd, double rep_cv, Rng& rng) {
  DosePlateSim sim;
  sim.N = N;
  sim.M = M;
  sim.T = T;
  sim.R = R;
  sim.truth = FactorState(N, M, T, D);

  // row factors on the simplex, columns as decaying viability curves: inner
  // products stay in (0, 1] and nonincreasing in dose
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd g(D);
    for (int d = 0; d < D; ++d) g[d] = rng.gamma(2.0, 1.0);
    sim.truth.W.row(i) = (g / g.sum()).transpose();
  }
  for (int j = 0; j < M; ++j)
    for (int d = 0; d < D; ++d) {
      double level = 1.0 - 0.02 * rng.uniform();
      for (int t = 0; t < T; ++t) {
        sim.truth.V[j](t, d) = level;
        double drop = rng.bernoulli(0.3) ? rng.uniform(0.2, 0.6) : rng.uniform(0.0, 0.15);
        level *= 1.0 - drop;
      }
    }

  double shape = 1.0 / (rep_cv * rep_cv);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j) {
      PlateExperiment p;
      p.row = i;
      p.col = j;
      double pop = 1000.0 * std::exp(0.2 * rng.normal());
      for (int r = 0; r < control_reps; ++r)
        p.control_values.push_back(rng.gamma(shape, pop / shape));
      p.dose_values = Eigen::MatrixXd(T, R);
      for (int t = 0; t < T; ++t) {
        double ratio = std::max(1.0 + pipette_sd * rng.normal(), 0.05);
        double mean_t = pop * ratio * std::max(sim.truth.inner(i, j, t), 1e-6);
        for (int r = 0; r < R; ++r) p.dose_values(t, r) = rng.gamma(shape, mean_t / shape);
      }
      sim.plates.push_back(std::move(p));
    }
  return sim;
}

std::vector<LongRecord> dose_sim_to_long(const DosePlateSim& sim) {
  std::vector<LongRecord> out;
  out.reserve(sim.plates.size() * sim.T * sim.R);
  for (const auto& p : sim.plates) {
    Eigen::MatrixXd norm = normalize_plate(p);
    for (int t = 0; t < norm.rows(); ++t)
      for (int r = 0; r < norm.cols(); ++r) out.push_back({p.row, p.col, t, r, norm(t, r)});
  }
  return out;
}

// --- metrics --------------------------------------------------------------------------

PointMetrics point_metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("point_metrics: shape mismatch");
  PointMetrics m;
  m.n = static_cast<long>(pred.size());
  for (size_t k = 0; k < pred.size(); ++k) {
    double e = pred[k] - truth[k];
    m.mse += e * e;
    m.mae += std::fabs(e);
  }
  m.mse /= m.n;
  m.mae /= m.n;
  m.rmse = std::sqrt(m.mse);
  return m;
}

double interval_coverage(std::span<const double> truth, std::span<const double> lo,
                         std::span<const double> hi) {
  if (truth.size() != lo.size() || truth.size() != hi.size() || truth.empty())
    throw std::invalid_argument("interval_coverage: shape mismatch");
  double c = 0.0;
  for (size_t k = 0; k < truth.size(); ++k)
    if (truth[k] >= lo[k] && truth[k] <= hi[k]) c += 1.0;
  return c / static_cast<double>(truth.size());
}

}  // namespace btf
