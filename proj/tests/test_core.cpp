#include <doctest.h>

#include <cmath>

#include "btf/rng.hpp"
#include "btf/state.hpp"
#include "btf/stats.hpp"
#include "btf/tensor.hpp"

using namespace btf;

TEST_SUITE_BEGIN("core");

TEST_CASE("long format singleton") {
  std::vector<LongRecord> rows = {{0, 0, 0, 0, 1.0}};
  auto t = ObservationTensor::from_long_format(rows);
  CHECK(t.N() == 1);
  CHECK(t.M() == 1);
  CHECK(t.T() == 1);
  CHECK(t.R() == 1);
  CHECK(t.observed(0, 0, 0, 0));
  CHECK(t.value(0, 0, 0, 0) == 1.0);
}

TEST_CASE("long format dims inferred, all cells observed") {
  std::vector<LongRecord> rows = {{0, 0, 0, 0, 1.0}, {1, 0, 0, 0, 2.0}};
  auto t = ObservationTensor::from_long_format(rows);
  CHECK(t.N() == 2);
  CHECK(t.value(1, 0, 0, 0) == 2.0);
  CHECK(t.observed_count() == 2);
}

TEST_CASE("duplicate key rejected with key in message") {
  std::vector<LongRecord> rows = {{0, 0, 0, 0, 1.0}, {0, 0, 0, 0, 3.0}};
  CHECK_THROWS_WITH_AS(ObservationTensor::from_long_format(rows),
                       doctest::Contains("(0,0,0,0)"), std::invalid_argument);
}

TEST_CASE("non-finite value rejected") {
  std::vector<LongRecord> rows = {{0, 0, 0, 0, std::nan("")}};
  CHECK_THROWS_AS(ObservationTensor::from_long_format(rows), std::invalid_argument);
}

TEST_CASE("long format round trip on observed cells") {
  Rng rng(7);
  std::vector<LongRecord> rows;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      for (int t = 0; t < 2; ++t)
        for (int r = 0; r < 2; ++r)
          if (rng.uniform() < 0.6 || (i == 2 && j == 3 && t == 1 && r == 1))
            rows.push_back({i, j, t, r, rng.normal()});  // corner kept so dims are pinned
  auto tensor = ObservationTensor::from_long_format(rows);
  auto back = tensor.to_long_format();
  REQUIRE(back.size() == rows.size());
  auto key = [](const LongRecord& r) {
    return ((r.row * 100 + r.col) * 100 + r.dose) * 100 + r.replicate;
  };
  std::sort(rows.begin(), rows.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
  std::sort(back.begin(), back.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
  for (size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].value == back[k].value);
    CHECK(key(rows[k]) == key(back[k]));
  }
}

TEST_CASE("coverage validation") {
  std::vector<LongRecord> rows = {{0, 0, 0, 0, 1.0}, {2, 1, 0, 0, 1.0}};
  auto t = ObservationTensor::from_long_format(rows);  // row 1 empty
  CHECK_THROWS_WITH_AS(t.validate_coverage(), doctest::Contains("row 1"), std::invalid_argument);
}

TEST_CASE("inner_curve unit vectors") {
  FactorState st(1, 1, 3, 2);
  st.W.row(0) << 1.0, 0.0;
  for (int t = 0; t < 3; ++t) st.V[0].row(t) << static_cast<double>(t), 5.0;
  Eigen::VectorXd curve = st.inner_curve(0, 0);
  CHECK(curve[0] == doctest::Approx(0.0));
  CHECK(curve[1] == doctest::Approx(1.0));
  CHECK(curve[2] == doctest::Approx(2.0));
}

TEST_CASE("inner_curve zero factor") {
  FactorState st(2, 2, 4, 3);
  st.V[1].setRandom();
  CHECK(st.inner_curve(0, 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("inner_curve matches brute-force dot products and is linear in W_i") {
  Rng rng(13);
  FactorState st(2, 2, 4, 3);
  for (int i = 0; i < 2; ++i)
    for (int d = 0; d < 3; ++d) st.W(i, d) = rng.normal();
  for (auto& v : st.V)
    for (int t = 0; t < 4; ++t)
      for (int d = 0; d < 3; ++d) v(t, d) = rng.normal();

  Eigen::VectorXd curve = st.inner_curve(1, 0);
  for (int t = 0; t < 4; ++t) {
    double dot = 0.0;
    for (int d = 0; d < 3; ++d) dot += st.W(1, d) * st.V[0](t, d);
    CHECK(curve[t] == doctest::Approx(dot).epsilon(1e-12));
  }

  FactorState scaled = st;
  scaled.W.row(1) *= 2.5;
  CHECK((scaled.inner_curve(1, 0) - 2.5 * curve).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("index out of range") {
  FactorState st(2, 2, 3, 1);
  CHECK_THROWS_AS(st.inner_curve(2, 0), std::out_of_range);
  CHECK_THROWS_AS(st.inner_curve(0, -1), std::out_of_range);
}

TEST_CASE("rng moments sanity") {
  Rng rng(42);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.gamma(3.0, 2.0);
    s += x;
    s2 += x * x;
  }
  double m = s / n;
  double var = s2 / n - m * m;
  CHECK(m == doctest::Approx(6.0).epsilon(0.02));
  CHECK(var == doctest::Approx(12.0).epsilon(0.05));
}

TEST_CASE("rng derive gives distinct reproducible streams") {
  auto a1 = Rng::derive(1, 2, 3);
  auto a2 = Rng::derive(1, 2, 3);
  auto b = Rng::derive(1, 2, 4);
  CHECK(a1.raw() == a2.raw());
  CHECK(a1.raw() != b.raw());
}

TEST_CASE("norm_ppf inverts norm_cdf") {
  for (double p : {0.001, 0.025, 0.2, 0.5, 0.9, 0.999})
    CHECK(norm_cdf(norm_ppf(p)) == doctest::Approx(p).epsilon(1e-9));
}

TEST_CASE("ks two-sample detects same vs shifted") {
  Rng rng(5);
  std::vector<double> a, b, c;
  for (int i = 0; i < 4000; ++i) {
    a.push_back(rng.normal());
    b.push_back(rng.normal());
    c.push_back(rng.normal() + 0.5);
  }
  CHECK(ks_two_sample_pvalue(a, b) > 0.01);
  CHECK(ks_two_sample_pvalue(a, c) < 1e-6);
}

TEST_SUITE_END();
