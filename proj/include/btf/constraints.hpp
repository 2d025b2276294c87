#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>

#include "btf/state.hpp"

namespace btf {

// Linear inequality system D x >= bounds on a latent vector.
struct ConstraintSet {
  Eigen::MatrixXd rows;    // Lc x d
  Eigen::VectorXd bounds;  // Lc

  int size() const { return static_cast<int>(rows.rows()); }
  bool empty() const { return size() == 0; }

  bool satisfied(const Eigen::VectorXd& x, double tol = 1e-8) const;
  // Throws if x violates the system; used to verify non-emptiness of the
  // feasible region at construction time.
  void require_feasible(const Eigen::VectorXd& x, double tol = 1e-8) const;

  static ConstraintSet none(int dim);
};

enum class ConstraintKind { none, nonnegative, unit_box, unit_box_monotone };

// Constraint rows for a row-factor update of w_i: inner products with the
// current V at the listed (col, dose) cells are bounded per `kind`; the
// monotone variant adds nonincreasing-in-dose rows for every adjacent dose
// pair of each listed column. With verify on, throws unless the current
// w_i satisfies the system (the feasible region is then known non-empty).
ConstraintSet build_row_constraints(ConstraintKind kind, const FactorState& state, int i,
                                    std::span<const std::pair<int, int>> observed_jt,
                                    bool verify = true);

// Same for a column update of vec(V_j) (T*D vector, dimension-major blocks),
// built from the current w_i rows at the listed (row, dose) cells.
ConstraintSet build_col_constraints(ConstraintKind kind, const FactorState& state, int j,
                                    std::span<const std::pair<int, int>> observed_it,
                                    bool verify = true);

}  // namespace btf
