#include <doctest.h>

#include "btf/lp.hpp"
#include "btf/rng.hpp"

using namespace btf;

TEST_SUITE_BEGIN("lp");

TEST_CASE("interpolates when the system is square and unconstrained") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y(3);
  y << 2.0, -1.0, 0.5;
  Eigen::MatrixXd C(0, 3);
  Eigen::VectorXd g(0);
  Eigen::VectorXd w = l1_fit_constrained(X, y, C, g);
  CHECK((w - y).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single coefficient without constraints finds the median") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(5, 1);
  Eigen::VectorXd y(5);
  y << 1.0, 5.0, 2.0, 9.0, 3.0;
  Eigen::VectorXd w = l1_fit_constrained(X, y, Eigen::MatrixXd(0, 1), Eigen::VectorXd(0));
  CHECK(w[0] == doctest::Approx(3.0).epsilon(1e-9));  // median
}

TEST_CASE("active upper bound clamps the solution") {
  // minimize |2 - w| subject to -w >= -0.5, i.e. w <= 0.5
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::MatrixXd C = -Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(1, -0.5);
  Eigen::VectorXd w = l1_fit_constrained(X, y, C, g);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("rejects constraint systems that exclude the origin") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  Eigen::MatrixXd C = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd g = Eigen::VectorXd::Ones(1);  // w >= 1 excludes w = 0
  CHECK_THROWS_AS(l1_fit_constrained(X, y, C, g), std::invalid_argument);
}

TEST_CASE("beats a fine grid search on random constrained problems") {
  Rng rng(55);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 9;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int r = 0; r < n; ++r) {
      X(r, 0) = rng.normal();
      X(r, 1) = rng.normal();
      y[r] = rng.normal() * 2.0;
    }
    // nonnegativity on both coefficients
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd w = l1_fit_constrained(X, y, C, g);
    REQUIRE(w.minCoeff() >= -1e-9);
    double obj = (y - X * w).cwiseAbs().sum();
    double best_grid = 1e300;
    for (int a = 0; a <= 120; ++a)
      for (int b = 0; b <= 120; ++b) {
        Eigen::Vector2d cand(a * 0.025, b * 0.025);
        best_grid = std::min(best_grid, (y - X * cand).cwiseAbs().sum());
      }
    CHECK(obj <= best_grid + 1e-6);
  }
}

TEST_SUITE_END();
