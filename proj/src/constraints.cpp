#include "btf/constraints.hpp"

#include <set>
#include <stdexcept>
#include <vector>

namespace btf {

bool ConstraintSet::satisfied(const Eigen::VectorXd& x, double tol) const {
  if (empty()) return true;
  Eigen::VectorXd s = rows * x - bounds;
  return (s.array() >= -tol).all();
}

void ConstraintSet::require_feasible(const Eigen::VectorXd& x, double tol) const {
  if (!satisfied(x, tol)) throw std::runtime_error("ConstraintSet: current point infeasible");
}

ConstraintSet ConstraintSet::none(int dim) {
  ConstraintSet c;
  c.rows = Eigen::MatrixXd::Zero(0, dim);
  c.bounds = Eigen::VectorXd::Zero(0);
  return c;
}

namespace {

struct RowAccum {
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> bounds;
  void add(Eigen::VectorXd r, double g) {
    rows.push_back(std::move(r));
    bounds.push_back(g);
  }
  ConstraintSet finish(int dim) const {
    ConstraintSet out;
    out.rows = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), dim);
    out.bounds = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
      out.rows.row(static_cast<int>(k)) = rows[k].transpose();
      out.bounds[static_cast<int>(k)] = bounds[k];
    }
    return out;
  }
};

}  // namespace

ConstraintSet build_row_constraints(ConstraintKind kind, const FactorState& state, int i,
                                    std::span<const std::pair<int, int>> observed_jt,
                                    bool verify) {
  const int D = state.D();
  const int T = state.T();
  if (kind == ConstraintKind::none) return ConstraintSet::none(D);

  RowAccum acc;
  std::set<int> cols_seen;
  for (auto [j, t] : observed_jt) {
    Eigen::VectorXd v = state.V[j].row(t).transpose();
    acc.add(v, 0.0);  // w . v_jt >= 0
    if (kind == ConstraintKind::unit_box || kind == ConstraintKind::unit_box_monotone)
      acc.add(-v, -1.0);  // w . v_jt <= 1
    cols_seen.insert(j);
  }
  if (kind == ConstraintKind::unit_box_monotone) {
    for (int j : cols_seen)
      for (int t = 0; t + 1 < T; ++t)
        acc.add((state.V[j].row(t) - state.V[j].row(t + 1)).transpose(), 0.0);
  }
  ConstraintSet out = acc.finish(D);
  if (verify) out.require_feasible(state.W.row(i).transpose());
  return out;
}

ConstraintSet build_col_constraints(ConstraintKind kind, const FactorState& state, int j,
                                    std::span<const std::pair<int, int>> observed_it,
                                    bool verify) {
  const int D = state.D();
  const int T = state.T();
  const int dim = T * D;
  if (kind == ConstraintKind::none) return ConstraintSet::none(dim);

  // vec(V_j) ordering: entry (d, t) lives at d*T + t
  auto embed = [&](const Eigen::VectorXd& w, int t) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
    for (int d = 0; d < D; ++d) r[d * T + t] = w[d];
    return r;
  };

  RowAccum acc;
  std::set<int> rows_seen;
  for (auto [i, t] : observed_it) {
    Eigen::VectorXd w = state.W.row(i).transpose();
    acc.add(embed(w, t), 0.0);
    if (kind == ConstraintKind::unit_box || kind == ConstraintKind::unit_box_monotone)
      acc.add(-embed(w, t), -1.0);
    rows_seen.insert(i);
  }
  if (kind == ConstraintKind::unit_box_monotone) {
    for (int i : rows_seen) {
      Eigen::VectorXd w = state.W.row(i).transpose();
      for (int t = 0; t + 1 < T; ++t) acc.add(embed(w, t) - embed(w, t + 1), 0.0);
    }
  }
  ConstraintSet out = acc.finish(dim);
  if (verify) {
    Eigen::Map<const Eigen::VectorXd> vecj(state.V[j].data(), dim);
    out.require_feasible(vecj);
  }
  return out;
}

}  // namespace btf
