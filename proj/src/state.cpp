#include "btf/state.hpp"

#include <stdexcept>

#include "btf/stats.hpp"

namespace btf {

FactorState::FactorState(int N, int M, int T, int D) {
  if (N <= 0 || M <= 0 || T <= 0 || D <= 0)
    throw std::invalid_argument("FactorState: dimensions must be positive");
  W = Eigen::MatrixXd::Zero(N, D);
  V.assign(M, Eigen::MatrixXd::Zero(T, D));
}

Eigen::VectorXd FactorState::inner_curve(int i, int j) const {
  if (i < 0 || i >= N() || j < 0 || j >= M())
    throw std::out_of_range("inner_curve: index out of range");
  return V[j] * W.row(i).transpose();
}

double FactorState::inner(int i, int j, int t) const {
  if (i < 0 || i >= N() || j < 0 || j >= M() || t < 0 || t >= T())
    throw std::out_of_range("inner: index out of range");
  return V[j].row(t).dot(W.row(i));
}

bool FactorState::all_finite() const {
  if (!W.allFinite()) return false;
  for (const auto& v : V)
    if (!v.allFinite()) return false;
  return true;
}

ShrinkageState::ShrinkageState(int M, int L, double rho2_in) {
  if (M <= 0 || L <= 0) throw std::invalid_argument("ShrinkageState: bad dimensions");
  if (rho2_in <= 0.0) throw std::invalid_argument("ShrinkageState: rho2 must be positive");
  tau2 = Eigen::MatrixXd::Ones(M, L);
  c = Eigen::MatrixXd::Ones(M, L);
  phi = Eigen::MatrixXd::Ones(M, L);
  eta = Eigen::MatrixXd::Ones(M, L);
  rho2 = rho2_in;
}

void ShrinkageState::validate() const {
  auto positive = [](const Eigen::MatrixXd& m) { return (m.array() > 0.0).all(); };
  if (!positive(tau2) || !positive(c) || !positive(phi) || !positive(eta) || rho2 <= 0.0 ||
      sigma2 <= 0.0)
    throw std::runtime_error("ShrinkageState: nonpositive entry");
}

Eigen::VectorXd PosteriorSamples::mean_curve(int i, int j) const {
  if (draws.empty()) throw std::runtime_error("PosteriorSamples: no draws");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(draws[0].T());
  for (const auto& s : draws) acc += s.inner_curve(i, j);
  return acc / static_cast<double>(draws.size());
}

double PosteriorSamples::curve_quantile(int i, int j, int t, double q) const {
  if (draws.empty()) throw std::runtime_error("PosteriorSamples: no draws");
  std::vector<double> vals;
  vals.reserve(draws.size());
  for (const auto& s : draws) vals.push_back(s.inner(i, j, t));
  return quantile(std::move(vals), q);
}

}  // namespace btf
