#pragma once

#include <Eigen/Dense>

namespace btf {

enum class MonotoneDirection { nondecreasing, nonincreasing };

// L2 projection onto the monotone cone (pool adjacent violators).
Eigen::VectorXd pav_monotone_projection(const Eigen::VectorXd& y, MonotoneDirection direction);

}  // namespace btf
