#include "btf/lp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace btf {

// Dense tableau simplex. Column layout: [w+ (d) | w- (d) | e+ (n) | e- (n) | s (m)].
// Every row is sign-flipped as needed so the starting basis (one of e+/e- per
// fit row, the slack per constraint row) is feasible, which removes the need
// for a phase-1.
Eigen::VectorXd l1_fit_constrained(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& C, const Eigen::VectorXd& g) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const int m = static_cast<int>(C.rows());
  if (y.size() != n || (m > 0 && C.cols() != d) || g.size() != m)
    throw std::invalid_argument("l1_fit_constrained: dimension mismatch");
  if ((g.array() > 0.0).any())
    throw std::invalid_argument("l1_fit_constrained: needs g <= 0 (origin-feasible system)");
  if (n == 0) return Eigen::VectorXd::Zero(d);

  const int rows = n + m;
  const int nv = 2 * d + 2 * n + m;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(rows, nv + 1);
  std::vector<int> basis(rows);

  for (int k = 0; k < n; ++k) {
    double sgn = y[k] >= 0.0 ? 1.0 : -1.0;
    for (int c = 0; c < d; ++c) {
      T(k, c) = sgn * X(k, c);
      T(k, d + c) = -sgn * X(k, c);
    }
    T(k, 2 * d + k) = sgn;        // e+
    T(k, 2 * d + n + k) = -sgn;   // e-
    T(k, nv) = sgn * y[k];
    basis[k] = y[k] >= 0.0 ? 2 * d + k : 2 * d + n + k;
  }
  for (int k = 0; k < m; ++k) {
    int r = n + k;
    for (int c = 0; c < d; ++c) {
      T(r, c) = -C(k, c);
      T(r, d + c) = C(k, c);
    }
    T(r, 2 * d + 2 * n + k) = 1.0;  // slack
    T(r, nv) = -g[k];
    basis[r] = 2 * d + 2 * n + k;
  }

  // objective coefficients: 1 on e+/e-
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(nv);
  cost.segment(2 * d, 2 * n).setOnes();

  // reduced costs z = cost - cost_B^T T; starting basis has cost 1 on the
  // e-basics, so initialize and keep z updated through pivots.
  Eigen::VectorXd z = cost;
  for (int r = 0; r < rows; ++r)
    if (cost[basis[r]] != 0.0) z -= cost[basis[r]] * T.row(r).head(nv);
  double obj = 0.0;
  for (int r = 0; r < rows; ++r) obj += cost[basis[r]] * T(r, nv);

  const double tol = 1e-9;
  const int bland_after = 4 * (rows + nv);
  const int max_iter = 60 * (rows + nv);
  for (int iter = 0; iter < max_iter; ++iter) {
    // entering column
    int enter = -1;
    if (iter < bland_after) {
      double best = -tol;
      for (int c = 0; c < nv; ++c)
        if (z[c] < best) {
          best = z[c];
          enter = c;
        }
    } else {
      for (int c = 0; c < nv; ++c)
        if (z[c] < -tol) {
          enter = c;
          break;
        }
    }
    if (enter < 0) break;  // optimal

    // ratio test
    int leave = -1;
    double best_ratio = 0.0;
    for (int r = 0; r < rows; ++r) {
      double a = T(r, enter);
      if (a > 1e-9) {
        double ratio = T(r, nv) / a;
        if (leave < 0 || ratio < best_ratio - 1e-12 ||
            (std::fabs(ratio - best_ratio) <= 1e-12 && basis[r] > basis[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) throw std::runtime_error("l1_fit_constrained: unbounded pivot");

    // pivot
    double piv = T(leave, enter);
    T.row(leave) /= piv;
    for (int r = 0; r < rows; ++r) {
      if (r == leave) continue;
      double f = T(r, enter);
      if (f != 0.0) T.row(r) -= f * T.row(leave);
    }
    double zf = z[enter];
    if (zf != 0.0) {
      z -= zf * T.row(leave).head(nv);
      obj -= zf * T(leave, nv);
    }
    basis[leave] = enter;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  for (int r = 0; r < rows; ++r) {
    if (basis[r] < d)
      w[basis[r]] += T(r, nv);
    else if (basis[r] < 2 * d)
      w[basis[r] - d] -= T(r, nv);
  }
  return w;
}

}  // namespace btf
