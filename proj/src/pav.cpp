#include "btf/pav.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace btf {

namespace {

Eigen::VectorXd pav_nondecreasing(const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  std::vector<double> sum(n), count(n);
  std::vector<int> width(n);
  int top = -1;
  for (int i = 0; i < n; ++i) {
    ++top;
    sum[top] = y[i];
    count[top] = 1.0;
    width[top] = 1;
    while (top > 0 && sum[top - 1] / count[top - 1] >= sum[top] / count[top]) {
      sum[top - 1] += sum[top];
      count[top - 1] += count[top];
      width[top - 1] += width[top];
      --top;
    }
  }
  Eigen::VectorXd out(n);
  int pos = 0;
  for (int b = 0; b <= top; ++b) {
    double level = sum[b] / count[b];
    for (int k = 0; k < width[b]; ++k) out[pos++] = level;
  }
  return out;
}

}  // namespace

Eigen::VectorXd pav_monotone_projection(const Eigen::VectorXd& y, MonotoneDirection direction) {
  if (y.size() == 0) throw std::invalid_argument("pav_monotone_projection: empty vector");
  if (!y.allFinite()) throw std::invalid_argument("pav_monotone_projection: non-finite input");
  if (direction == MonotoneDirection::nondecreasing) return pav_nondecreasing(y);
  return -pav_nondecreasing(-y);
}

}  // namespace btf
