#include "btf/gibbs.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "btf/lp.hpp"
#include "btf/mvn.hpp"
#include "btf/polya_gamma.hpp"
#include "btf/stats.hpp"

namespace btf {

namespace {

constexpr uint64_t kPhaseRows = 1;
constexpr uint64_t kPhaseCols = 2;
constexpr uint64_t kPhaseShrink = 3;
constexpr uint64_t kPhaseGlobal = 4;
constexpr uint64_t kPhasePG = 5;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<std::pair<int, int>> row_pairs(const ObsIndex& idx, int i) {
  std::vector<std::pair<int, int>> out;
  out.reserve(idx.by_row[i].size());
  for (int ci : idx.by_row[i]) out.emplace_back(idx.cells[ci].j, idx.cells[ci].t);
  return out;
}

std::vector<std::pair<int, int>> col_pairs(const ObsIndex& idx, int j) {
  std::vector<std::pair<int, int>> out;
  out.reserve(idx.by_col[j].size());
  for (int ci : idx.by_col[j]) out.emplace_back(idx.cells[ci].i, idx.cells[ci].t);
  return out;
}

Eigen::VectorXd draw_from_dense_precision(const Eigen::MatrixXd& prec, const Eigen::VectorXd& h,
                                          Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gibbs: dense precision not positive definite");
  Eigen::VectorXd z(prec.rows());
  for (int d = 0; d < z.size(); ++d) z[d] = rng.normal();
  return llt.solve(h) + llt.matrixU().solve(z);
}

// Column conditional precision/shift: (I_D kron Delta^T T Delta) plus one
// rank-one data block per observed cell, in the d-major vec(V_j) layout.
void assemble_col_system(const ObsIndex& idx, const FactorState& state,
                         const ShrinkageState& shrink, const CompositeDiffMatrix& delta, int j,
                         const std::vector<double>& cell_weight,
                         const std::vector<double>& cell_shift,
                         Eigen::SparseMatrix<double>& lambda, Eigen::VectorXd& h) {
  const int T = state.T();
  const int D = state.D();
  const int dim = T * D;
  Eigen::VectorXd tau2j = shrink.tau2.row(j).transpose();
  Eigen::SparseMatrix<double> prior = build_prior_precision(delta, shrink.rho2, tau2j);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(prior.nonZeros()) * D + idx.by_col[j].size() * D * D);
  for (int outer = 0; outer < prior.outerSize(); ++outer)
    for (Eigen::SparseMatrix<double>::InnerIterator it(prior, outer); it; ++it)
      for (int d = 0; d < D; ++d)
        trip.emplace_back(d * T + static_cast<int>(it.row()), d * T + static_cast<int>(it.col()),
                          it.value());

  h = Eigen::VectorXd::Zero(dim);
  for (size_t n = 0; n < idx.by_col[j].size(); ++n) {
    const CellObs& c = idx.cells[idx.by_col[j][n]];
    double w = cell_weight[n];
    double s = cell_shift[n];
    for (int d1 = 0; d1 < D; ++d1) {
      h[d1 * T + c.t] += s * state.W(c.i, d1);
      for (int d2 = 0; d2 < D; ++d2)
        trip.emplace_back(d1 * T + c.t, d2 * T + c.t, w * state.W(c.i, d1) * state.W(c.i, d2));
    }
  }
  lambda.resize(dim, dim);
  lambda.setFromTriplets(trip.begin(), trip.end());
  lambda.makeCompressed();
}

void rows_update_weighted(const ObsIndex& idx, FactorState& state, double sigma2,
                          const std::vector<double>& cell_weight,
                          const std::vector<double>& cell_shift, RngKey key) {
  const int D = state.D();
  for (int i = 0; i < state.N(); ++i) {
    Rng rng = key.at(kPhaseRows, static_cast<uint64_t>(i));
    Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(D, D) / sigma2;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(D);
    for (int ci : idx.by_row[i]) {
      const CellObs& c = idx.cells[ci];
      Eigen::VectorXd v = state.V[c.j].row(c.t).transpose();
      prec.noalias() += cell_weight[ci] * v * v.transpose();
      h.noalias() += cell_shift[ci] * v;
    }
    state.W.row(i) = draw_from_dense_precision(prec, h, rng).transpose();
  }
}

void cols_update_weighted(const ObsIndex& idx, FactorState& state, const ShrinkageState& shrink,
                          const CompositeDiffMatrix& delta, const std::vector<double>& cell_weight,
                          const std::vector<double>& cell_shift, RngKey key) {
  const int T = state.T();
  const int D = state.D();
  for (int j = 0; j < state.M(); ++j) {
    Rng rng = key.at(kPhaseCols, static_cast<uint64_t>(j));
    std::vector<double> w, s;
    w.reserve(idx.by_col[j].size());
    s.reserve(idx.by_col[j].size());
    for (int ci : idx.by_col[j]) {
      w.push_back(cell_weight[ci]);
      s.push_back(cell_shift[ci]);
    }
    Eigen::SparseMatrix<double> lambda;
    Eigen::VectorXd h;
    assemble_col_system(idx, state, shrink, delta, j, w, s, lambda, h);
    Eigen::VectorXd vec = mvn_sample_precision(h, lambda, rng);
    state.V[j] = Eigen::Map<const Eigen::MatrixXd>(vec.data(), T, D);
  }
}

}  // namespace

void FitConfig::validate() const {
  if (D < 1) throw std::invalid_argument("FitConfig: D must be >= 1");
  if (k < 0) throw std::invalid_argument("FitConfig: k must be >= 0");
  if (rho2 <= 0.0) throw std::invalid_argument("FitConfig: rho2 must be positive");
  if (sweeps <= 0 || burn_in < 0 || burn_in >= sweeps)
    throw std::invalid_argument("FitConfig: need 0 <= burn_in < sweeps");
  if (thin < 1) throw std::invalid_argument("FitConfig: thin must be >= 1");
  if (ep_inflation <= 0.0) throw std::invalid_argument("FitConfig: ep_inflation must be positive");
  if (gass.grid_size < 16) throw std::invalid_argument("FitConfig: gass grid_size must be >= 16");
}

void update_rows_gaussian(const ObsIndex& idx, FactorState& state, const ShrinkageState& shrink,
                          double nu2, RngKey key) {
  if (nu2 <= 0.0) throw std::invalid_argument("update_rows_gaussian: nu2 must be positive");
  std::vector<double> w(idx.cells.size()), s(idx.cells.size());
  for (size_t c = 0; c < idx.cells.size(); ++c) {
    w[c] = idx.cells[c].count / nu2;
    s[c] = idx.cells[c].sum / nu2;
  }
  rows_update_weighted(idx, state, shrink.sigma2, w, s, key);
}

void update_cols_gaussian(const ObsIndex& idx, FactorState& state, const ShrinkageState& shrink,
                          double nu2, const CompositeDiffMatrix& delta, RngKey key) {
  if (nu2 <= 0.0) throw std::invalid_argument("update_cols_gaussian: nu2 must be positive");
  std::vector<double> w(idx.cells.size()), s(idx.cells.size());
  for (size_t c = 0; c < idx.cells.size(); ++c) {
    w[c] = idx.cells[c].count / nu2;
    s[c] = idx.cells[c].sum / nu2;
  }
  cols_update_weighted(idx, state, shrink, delta, w, s, key);
}

void update_binomial(const ObsIndex& idx, const BinomialLik& lik, FactorState& state,
                     const ShrinkageState& shrink, const CompositeDiffMatrix& delta, RngKey key) {
  std::vector<double> psi(idx.cells.size()), kappa(idx.cells.size());
  for (size_t ci = 0; ci < idx.cells.size(); ++ci) {
    const CellObs& c = idx.cells[ci];
    double theta = state.inner(c.i, c.j, c.t);
    double n_total = static_cast<double>(c.count) * lik.n(c.i, c.j, c.t);
    Rng rng = key.at(kPhasePG, static_cast<uint64_t>(ci));
    psi[ci] = polya_gamma_sample(n_total, theta, rng);
    kappa[ci] = c.sum - 0.5 * n_total;
  }
  rows_update_weighted(idx, state, shrink.sigma2, psi, kappa, key);
  cols_update_weighted(idx, state, shrink, delta, psi, kappa, key);
}

void update_shrinkage(const FactorState& state, ShrinkageState& shrink,
                      const CompositeDiffMatrix& delta, ShrinkageUpdate variant, RngKey key) {
  const int D = state.D();
  for (int j = 0; j < state.M(); ++j) {
    Eigen::MatrixXd diffs = delta.matrix * state.V[j];  // L x D
    Eigen::VectorXd norms = diffs.rowwise().squaredNorm();
    Eigen::VectorXd tau2 = shrink.tau2.row(j).transpose();
    Eigen::VectorXd c = shrink.c.row(j).transpose();
    Eigen::VectorXd phi = shrink.phi.row(j).transpose();
    Eigen::VectorXd eta = shrink.eta.row(j).transpose();
    Rng rng = key.at(kPhaseShrink, static_cast<uint64_t>(j));
    horseshoe_block_update(norms, shrink.rho2, D, tau2, c, phi, eta, rng, variant);
    shrink.tau2.row(j) = tau2.transpose();
    shrink.c.row(j) = c.transpose();
    shrink.phi.row(j) = phi.transpose();
    shrink.eta.row(j) = eta.transpose();
  }
}

double update_sigma2(const Eigen::MatrixXd& W, Rng& rng) {
  if (!W.allFinite()) throw std::invalid_argument("update_sigma2: non-finite W");
  double shape = 0.1 + 0.5 * static_cast<double>(W.rows() * W.cols());
  double rate = 0.1 + 0.5 * W.squaredNorm();
  return 1.0 / rng.gamma(shape, 1.0 / rate);
}

double update_nu2(const ObsIndex& idx, const FactorState& state, Rng& rng) {
  double ss = 0.0;
  long n = 0;
  for (const CellObs& c : idx.cells) {
    double theta = state.inner(c.i, c.j, c.t);
    for (double y : idx.values(c)) {
      double r = y - theta;
      ss += r * r;
      ++n;
    }
  }
  if (!std::isfinite(ss)) throw std::invalid_argument("update_nu2: non-finite residuals");
  double shape = 0.1 + 0.5 * static_cast<double>(n);
  double rate = 0.1 + 0.5 * ss;
  return 1.0 / rng.gamma(shape, 1.0 / rate);
}

// --- constrained ALS ---------------------------------------------------------

PseudoEpApprox init_constrained_als(const ObservationTensor& y, ConstraintKind kind, int D,
                                    int max_iters, double inflation) {
  const int N = y.N(), M = y.M(), T = y.T();
  ObsIndex idx = ObsIndex::build(y);
  if (idx.cells.empty()) throw std::invalid_argument("init_constrained_als: empty tensor");

  double ybar = 0.0;
  long n_obs = 0;
  for (const CellObs& c : idx.cells) {
    ybar += c.sum;
    n_obs += c.count;
  }
  ybar /= static_cast<double>(n_obs);

  // flat feasible seed
  double theta0 = ybar;
  if (kind == ConstraintKind::unit_box || kind == ConstraintKind::unit_box_monotone)
    theta0 = std::clamp(ybar, 0.05, 0.9);
  else if (kind == ConstraintKind::nonnegative)
    theta0 = std::max(ybar, 0.1);
  else if (std::fabs(theta0) < 1e-3)
    theta0 = 0.1;
  double seed_val = std::sqrt(std::fabs(theta0) / D);
  FactorState state(N, M, T, D);
  state.W.setConstant(theta0 >= 0.0 ? seed_val : -seed_val);
  for (auto& v : state.V) v.setConstant(seed_val);

  auto objective = [&]() {
    double obj = 0.0;
    for (const CellObs& c : idx.cells) {
      double theta = state.inner(c.i, c.j, c.t);
      for (double yy : idx.values(c)) obj += std::fabs(yy - theta);
    }
    return obj;
  };

  double prev = objective();
  for (int iter = 0; iter < max_iters; ++iter) {
    // row subproblems: one LP per row over w_i
    for (int i = 0; i < N; ++i) {
      if (idx.by_row[i].empty()) continue;
      long nresid = 0;
      for (int ci : idx.by_row[i]) nresid += idx.cells[ci].count;
      Eigen::MatrixXd X(nresid, D);
      Eigen::VectorXd yv(nresid);
      long r = 0;
      for (int ci : idx.by_row[i]) {
        const CellObs& c = idx.cells[ci];
        for (double yy : idx.values(c)) {
          X.row(r) = state.V[c.j].row(c.t);
          yv[r] = yy;
          ++r;
        }
      }
      auto pairs = row_pairs(idx, i);
      ConstraintSet cons = build_row_constraints(kind, state, i, pairs, /*verify=*/false);
      state.W.row(i) = l1_fit_constrained(X, yv, cons.rows, cons.bounds).transpose();
    }

    // column subproblems
    for (int j = 0; j < M; ++j) {
      if (idx.by_col[j].empty()) continue;
      if (kind == ConstraintKind::unit_box_monotone) {
        // monotone rows couple doses: solve the whole T*D vector jointly
        long nresid = 0;
        for (int ci : idx.by_col[j]) nresid += idx.cells[ci].count;
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(nresid, T * D);
        Eigen::VectorXd yv(nresid);
        long r = 0;
        for (int ci : idx.by_col[j]) {
          const CellObs& c = idx.cells[ci];
          for (double yy : idx.values(c)) {
            for (int d = 0; d < D; ++d) X(r, d * T + c.t) = state.W(c.i, d);
            yv[r] = yy;
            ++r;
          }
        }
        auto pairs = col_pairs(idx, j);
        ConstraintSet cons = build_col_constraints(kind, state, j, pairs, /*verify=*/false);
        Eigen::VectorXd vec = l1_fit_constrained(X, yv, cons.rows, cons.bounds);
        state.V[j] = Eigen::Map<const Eigen::MatrixXd>(vec.data(), T, D);
      } else {
        // bounds only: doses decouple, solve per t
        for (int t = 0; t < T; ++t) {
          std::vector<int> cells_t;
          for (int ci : idx.by_col[j])
            if (idx.cells[ci].t == t) cells_t.push_back(ci);
          if (cells_t.empty()) continue;
          long nresid = 0;
          for (int ci : cells_t) nresid += idx.cells[ci].count;
          Eigen::MatrixXd X(nresid, D);
          Eigen::VectorXd yv(nresid);
          std::vector<Eigen::VectorXd> crow;
          std::vector<double> cbound;
          long r = 0;
          for (int ci : cells_t) {
            const CellObs& c = idx.cells[ci];
            Eigen::VectorXd w = state.W.row(c.i).transpose();
            for (double yy : idx.values(c)) {
              X.row(r) = w.transpose();
              yv[r] = yy;
              ++r;
            }
            if (kind != ConstraintKind::none) {
              crow.push_back(w);
              cbound.push_back(0.0);
              if (kind == ConstraintKind::unit_box) {
                crow.push_back(-w);
                cbound.push_back(-1.0);
              }
            }
          }
          Eigen::MatrixXd C(crow.size(), D);
          Eigen::VectorXd g(crow.size());
          for (size_t k2 = 0; k2 < crow.size(); ++k2) {
            C.row(k2) = crow[k2].transpose();
            g[k2] = cbound[k2];
          }
          state.V[j].row(t) = l1_fit_constrained(X, yv, C, g).transpose();
        }
      }
    }

    double obj = objective();
    if (prev - obj < 1e-4 * std::max(prev, 1e-12)) {
      prev = obj;
      break;
    }
    prev = obj;
  }

  PseudoEpApprox ep;
  ep.N = N;
  ep.M = M;
  ep.T = T;
  ep.inflation = inflation;
  ep.pseudo_obs.assign(static_cast<size_t>(N) * M * T, 0.0);
  ep.pseudo_var.assign(static_cast<size_t>(N) * M * T, 1.0);

  std::vector<double> row_ss(N, 0.0), col_ss(M, 0.0);
  std::vector<long> row_n(N, 0), col_n(M, 0);
  for (const CellObs& c : idx.cells) {
    double theta = state.inner(c.i, c.j, c.t);
    for (double yy : idx.values(c)) {
      double r2 = (yy - theta) * (yy - theta);
      row_ss[c.i] += r2;
      col_ss[c.j] += r2;
      ++row_n[c.i];
      ++col_n[c.j];
    }
  }
  auto mse = [](double ss, long n) { return n > 0 ? ss / static_cast<double>(n) : 0.0; };
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j) {
      double v = inflation * 0.5 * (mse(row_ss[i], row_n[i]) + mse(col_ss[j], col_n[j]));
      v = std::max(v, 1e-4);
      for (int t = 0; t < T; ++t) {
        size_t at = (static_cast<size_t>(i) * M + j) * T + t;
        ep.pseudo_obs[at] = state.inner(i, j, t);
        ep.pseudo_var[at] = v;
      }
    }
  ep.init_state = std::move(state);
  return ep;
}

// --- black-box sweep ---------------------------------------------------------

long gibbs_sweep_blackbox(const ObsIndex& idx, FactorState& state, const ShrinkageState& shrink,
                          const CompositeDiffMatrix& delta, const PseudoEpApprox* ep,
                          const BlackBoxLik& lik, const GassConfig& gass, RngKey key) {
  const int N = state.N(), M = state.M(), T = state.T(), D = state.D();
  long degenerate = 0;

  for (int i = 0; i < N; ++i) {
    Rng rng = key.at(kPhaseRows, static_cast<uint64_t>(i));
    Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(D, D) / shrink.sigma2;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(D);
    if (ep != nullptr) {
      for (int ci : idx.by_row[i]) {
        const CellObs& c = idx.cells[ci];
        Eigen::VectorXd v = state.V[c.j].row(c.t).transpose();
        double pv = ep->var(i, c.j, c.t);
        prec.noalias() += v * v.transpose() / pv;
        h.noalias() += ep->obs(i, c.j, c.t) / pv * v;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("gibbs_sweep_blackbox: row proposal precision not SPD");
    Eigen::VectorXd mu = llt.solve(h);
    CenteredDraw draw = [&llt, D](Rng& r) {
      Eigen::VectorXd z(D);
      for (int d = 0; d < D; ++d) z[d] = r.normal();
      return Eigen::VectorXd(llt.matrixU().solve(z));
    };
    LogLikFn ll = [&, i](const Eigen::VectorXd& w) {
      double total = 0.0;
      for (int ci : idx.by_row[i]) {
        const CellObs& c = idx.cells[ci];
        double theta = state.V[c.j].row(c.t).dot(w);
        total += lik.loglik(i, c.j, c.t, idx.values(c), theta);
        if (ep != nullptr)
          total -= norm_logpdf(ep->obs(i, c.j, c.t), theta, ep->var(i, c.j, c.t));
      }
      return total;
    };
    auto pairs = row_pairs(idx, i);
    ConstraintSet cons = build_row_constraints(lik.constraints, state, i, pairs);
    GassStats stats;
    Eigen::VectorXd w_new =
        gass_step(state.W.row(i).transpose(), mu, draw, ll, cons, gass, rng, &stats);
    if (stats.degenerate) ++degenerate;
    state.W.row(i) = w_new.transpose();
  }

  for (int j = 0; j < M; ++j) {
    Rng rng = key.at(kPhaseCols, static_cast<uint64_t>(j));
    std::vector<double> w(idx.by_col[j].size(), 0.0), s(idx.by_col[j].size(), 0.0);
    if (ep != nullptr) {
      for (size_t n = 0; n < idx.by_col[j].size(); ++n) {
        const CellObs& c = idx.cells[idx.by_col[j][n]];
        double pv = ep->var(c.i, j, c.t);
        w[n] = 1.0 / pv;
        s[n] = ep->obs(c.i, j, c.t) / pv;
      }
    }
    Eigen::SparseMatrix<double> lambda;
    Eigen::VectorXd h;
    assemble_col_system(idx, state, shrink, delta, j, w, s, lambda, h);
    PrecisionSampler ps(lambda);
    Eigen::VectorXd mu = ps.mean(h);
    CenteredDraw draw = [&ps](Rng& r) { return ps.draw_centered(r); };
    LogLikFn ll = [&, j](const Eigen::VectorXd& vecv) {
      double total = 0.0;
      for (int ci : idx.by_col[j]) {
        const CellObs& c = idx.cells[ci];
        double theta = 0.0;
        for (int d = 0; d < D; ++d) theta += vecv[d * T + c.t] * state.W(c.i, d);
        total += lik.loglik(c.i, j, c.t, idx.values(c), theta);
        if (ep != nullptr)
          total -= norm_logpdf(ep->obs(c.i, j, c.t), theta, ep->var(c.i, j, c.t));
      }
      return total;
    };
    auto pairs = col_pairs(idx, j);
    ConstraintSet cons = build_col_constraints(lik.constraints, state, j, pairs);
    Eigen::Map<const Eigen::VectorXd> vecj(state.V[j].data(), T * D);
    GassStats stats;
    Eigen::VectorXd v_new = gass_step(vecj, mu, draw, ll, cons, gass, rng, &stats);
    if (stats.degenerate) ++degenerate;
    state.V[j] = Eigen::Map<const Eigen::MatrixXd>(v_new.data(), T, D);
  }
  return degenerate;
}

// --- likelihood evaluation and DIC ------------------------------------------

namespace {

double cell_loglik(const ObsIndex& idx, const CellObs& c, double theta, const LikelihoodSpec& lik,
                   double nu2) {
  if (const auto* g = std::get_if<GaussianLik>(&lik)) {
    (void)g;
    double total = 0.0;
    for (double y : idx.values(c)) total += norm_logpdf(y, theta, nu2);
    return total;
  }
  if (const auto* b = std::get_if<BinomialLik>(&lik)) {
    double p = sigmoid(theta);
    double total = 0.0;
    for (double y : idx.values(c))
      total += binomial_logpmf(static_cast<int>(std::llround(y)), b->n(c.i, c.j, c.t), p);
    return total;
  }
  const auto& bb = std::get<BlackBoxLik>(lik);
  return bb.loglik(c.i, c.j, c.t, idx.values(c), theta);
}

}  // namespace

double data_loglik(const ObsIndex& idx, const FactorState& state, const LikelihoodSpec& lik,
                   double nu2) {
  double total = 0.0;
  for (const CellObs& c : idx.cells)
    total += cell_loglik(idx, c, state.inner(c.i, c.j, c.t), lik, nu2);
  return total;
}

DicParts compute_dic_parts(const PosteriorSamples& samples, const ObservationTensor& y,
                           const LikelihoodSpec& lik) {
  if (samples.draws.size() < 10)
    throw std::invalid_argument("compute_dic: need at least 10 retained samples");
  ObsIndex idx = ObsIndex::build(y);
  const size_t S = samples.draws.size();
  bool gaussian = std::holds_alternative<GaussianLik>(lik);

  double mean_dev = 0.0;
  double nu2_mean = 0.0;
  for (size_t s = 0; s < S; ++s) {
    double nu2 = gaussian ? samples.nu2_draws.at(s) : 1.0;
    nu2_mean += gaussian ? nu2 : 0.0;
    mean_dev += -2.0 * data_loglik(idx, samples.draws[s], lik, nu2);
  }
  mean_dev /= static_cast<double>(S);
  nu2_mean = gaussian ? nu2_mean / static_cast<double>(S) : 1.0;

  // plug-in deviance at the posterior-mean inner-product curve
  double plug = 0.0;
  for (const CellObs& c : idx.cells) {
    double theta_bar = 0.0;
    for (const auto& d : samples.draws) theta_bar += d.inner(c.i, c.j, c.t);
    theta_bar /= static_cast<double>(S);
    double ll = cell_loglik(idx, c, theta_bar, lik, nu2_mean);
    if (!std::isfinite(ll))
      throw std::runtime_error("compute_dic: likelihood undefined at posterior-mean curve, cell (" +
                               std::to_string(c.i) + "," + std::to_string(c.j) + "," +
                               std::to_string(c.t) + ")");
    plug += -2.0 * ll;
  }
  DicParts parts;
  parts.mean_deviance = mean_dev;
  parts.plugin_deviance = plug;
  parts.p_d = mean_dev - plug;
  parts.dic = mean_dev + parts.p_d;
  return parts;
}

double compute_dic(const PosteriorSamples& samples, const ObservationTensor& y,
                   const LikelihoodSpec& lik) {
  return compute_dic_parts(samples, y, lik).dic;
}

// --- feasibility audit --------------------------------------------------------

namespace {

void check_state_feasible(const ObsIndex& idx, const FactorState& state, ConstraintKind kind,
                          double tol = 1e-6) {
  if (kind == ConstraintKind::none) return;
  const int T = state.T();
  std::vector<std::vector<char>> pair_seen(state.N(), std::vector<char>(state.M(), 0));
  for (const CellObs& c : idx.cells) {
    double theta = state.inner(c.i, c.j, c.t);
    if (theta < -tol)
      throw std::runtime_error("feasibility: negative inner product at observed cell");
    if ((kind == ConstraintKind::unit_box || kind == ConstraintKind::unit_box_monotone) &&
        theta > 1.0 + tol)
      throw std::runtime_error("feasibility: inner product above 1 at observed cell");
    pair_seen[c.i][c.j] = 1;
  }
  if (kind == ConstraintKind::unit_box_monotone) {
    for (int i = 0; i < state.N(); ++i)
      for (int j = 0; j < state.M(); ++j) {
        if (!pair_seen[i][j]) continue;
        Eigen::VectorXd curve = state.inner_curve(i, j);
        for (int t = 0; t + 1 < T; ++t)
          if (curve[t] < curve[t + 1] - tol)
            throw std::runtime_error("feasibility: non-monotone curve at observed pair");
      }
  }
}

}  // namespace

// --- driver --------------------------------------------------------------------

PosteriorSamples fit(const ObservationTensor& y, const FitConfig& cfg, const SweepHook& hook,
                     const ResumePoint* resume) {
  cfg.validate();
  y.validate_coverage();
  ObsIndex idx = ObsIndex::build(y);
  const int N = y.N(), M = y.M(), T = y.T();

  CompositeDiffMatrix delta = build_composite_tf_matrix(T, cfg.k);
  const int L = delta.rows();

  const auto* gaussian = std::get_if<GaussianLik>(&cfg.likelihood);
  const auto* binomial = std::get_if<BinomialLik>(&cfg.likelihood);
  const auto* blackbox = std::get_if<BlackBoxLik>(&cfg.likelihood);

  if (binomial != nullptr) {
    if (binomial->N != N || binomial->M != M || binomial->T != T)
      throw std::invalid_argument("fit: binomial trials dimensions mismatch");
    for (const CellObs& c : idx.cells)
      for (double v : idx.values(c)) {
        double n = binomial->n(c.i, c.j, c.t);
        if (v < -1e-9 || v > n + 1e-9 || std::fabs(v - std::llround(v)) > 1e-9)
          throw std::invalid_argument("fit: binomial observation outside [0, trials] at cell (" +
                                      std::to_string(c.i) + "," + std::to_string(c.j) + "," +
                                      std::to_string(c.t) + ")");
      }
  }

  FactorState state;
  ShrinkageState shrink(M, L, cfg.rho2);
  double nu2 = gaussian != nullptr ? gaussian->nu2 : 1.0;
  PseudoEpApprox ep;
  bool use_ep = false;
  long degenerate_total = 0;
  int start_sweep = 0;

  if (blackbox != nullptr) {
    ep = init_constrained_als(y, blackbox->constraints, cfg.D, cfg.als_max_iters,
                              cfg.ep_inflation);
    use_ep = true;
    state = ep.init_state;
  } else {
    state = FactorState(N, M, T, cfg.D);
    Rng init_rng = Rng::derive(cfg.seed, 0x696e6974ULL);
    for (int i = 0; i < N; ++i)
      for (int d = 0; d < cfg.D; ++d) state.W(i, d) = 0.1 * init_rng.normal();
  }

  if (resume != nullptr) {
    state = resume->state;
    shrink = resume->shrinkage;
    shrink.rho2 = cfg.rho2;
    nu2 = resume->nu2;
    degenerate_total = resume->degenerate;
    start_sweep = resume->next_sweep;
  }

  PosteriorSamples out;
  out.total_sweeps = cfg.sweeps;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;

  for (int sweep = start_sweep; sweep < cfg.sweeps; ++sweep) {
    RngKey key{cfg.seed, static_cast<uint64_t>(sweep)};

    if (gaussian != nullptr) {
      update_rows_gaussian(idx, state, shrink, nu2, key);
      update_cols_gaussian(idx, state, shrink, nu2, delta, key);
    } else if (binomial != nullptr) {
      update_binomial(idx, *binomial, state, shrink, delta, key);
    } else {
      if (cfg.refresh_ep_after_burnin && sweep == cfg.burn_in) {
        // replace the surrogate with the current state of the chain
        std::vector<double> row_ss(N, 0.0), col_ss(M, 0.0);
        std::vector<long> row_n(N, 0), col_n(M, 0);
        for (const CellObs& c : idx.cells) {
          double theta = state.inner(c.i, c.j, c.t);
          for (double yy : idx.values(c)) {
            double r2 = (yy - theta) * (yy - theta);
            row_ss[c.i] += r2;
            col_ss[c.j] += r2;
            ++row_n[c.i];
            ++col_n[c.j];
          }
        }
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < M; ++j) {
            double rmse = row_n[i] > 0 ? row_ss[i] / row_n[i] : 0.0;
            double cmse = col_n[j] > 0 ? col_ss[j] / col_n[j] : 0.0;
            double v = std::max(cfg.ep_inflation * 0.5 * (rmse + cmse), 1e-4);
            for (int t = 0; t < T; ++t) {
              size_t at = (static_cast<size_t>(i) * M + j) * T + t;
              ep.pseudo_obs[at] = state.inner(i, j, t);
              ep.pseudo_var[at] = v;
            }
          }
      }
      degenerate_total += gibbs_sweep_blackbox(idx, state, shrink, delta, use_ep ? &ep : nullptr,
                                               *blackbox, cfg.gass, key);
    }

    update_shrinkage(state, shrink, delta, cfg.shrinkage_update, key);
    Rng grng = key.at(kPhaseGlobal, 0);
    shrink.sigma2 = update_sigma2(state.W, grng);
    if (gaussian != nullptr) nu2 = update_nu2(idx, state, grng);

    if (cfg.check_feasibility && blackbox != nullptr)
      check_state_feasible(idx, state, blackbox->constraints);

    double ll = data_loglik(idx, state, cfg.likelihood, nu2);
    out.loglik_trace.push_back(ll);
    out.sigma2_trace.push_back(shrink.sigma2);

    bool retained = sweep >= cfg.burn_in && (sweep - cfg.burn_in) % cfg.thin == 0;
    if (retained) {
      out.draws.push_back(state);
      out.sigma2_draws.push_back(shrink.sigma2);
      if (gaussian != nullptr) out.nu2_draws.push_back(nu2);
    }

    if (hook) {
      SweepRecord rec;
      rec.sweep = sweep;
      rec.loglik = ll;
      rec.sigma2 = shrink.sigma2;
      rec.nu2 = gaussian != nullptr ? nu2 : std::numeric_limits<double>::quiet_NaN();
      rec.degenerate_total = degenerate_total;
      rec.retained = retained;
      hook(rec, state, shrink);
    }
  }

  out.degenerate_gass_steps = degenerate_total;
  return out;
}

}  // namespace btf
