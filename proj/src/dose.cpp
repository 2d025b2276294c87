#include "btf/dose.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "btf/io.hpp"
#include "btf/rng.hpp"
#include "btf/stats.hpp"

namespace btf {

double PlateExperiment::control_mean() const {
  if (control_values.empty()) throw std::runtime_error("plate: no control replicates");
  double s = 0.0;
  for (double v : control_values) s += v;
  return s / static_cast<double>(control_values.size());
}

void GammaMixture::validate() const {
  if (K() < 1 || shapes.size() != K() || scale_bases.size() != K())
    throw std::runtime_error("GammaMixture: inconsistent sizes");
  if (std::fabs(weights.sum() - 1.0) > 1e-12) throw std::runtime_error("GammaMixture: weights must sum to 1");
  if ((weights.array() < 0.0).any() || (shapes.array() <= 0.0).any() ||
      (scale_bases.array() <= 0.0).any())
    throw std::runtime_error("GammaMixture: nonpositive component");
}

double GammaMixture::support_mean() const {
  double m = 0.0;
  for (int k = 0; k < K(); ++k) m += weights[k] * shapes[k] * scale_bases[k];
  return m;
}

double GammaMixture::support_sd() const {
  double m = support_mean();
  double s = 0.0;
  for (int k = 0; k < K(); ++k) {
    double mu = shapes[k] * scale_bases[k];
    s += weights[k] * (mu - m) * (mu - m);
  }
  return std::sqrt(s);
}

Eigen::MatrixXd normalize_plate(const PlateExperiment& plate) {
  double cm = plate.control_mean();
  if (cm <= 0.0)
    throw std::runtime_error("normalize_plate: nonpositive control mean on plate (" +
                             std::to_string(plate.row) + "," + std::to_string(plate.col) + ")");
  return plate.dose_values / cm;
}

namespace {

// Poisson regression of counts on [1, z, z^2, z^3] with log link, by IRLS.
Eigen::Vector4d poisson_cubic_fit(const Eigen::VectorXd& z, const Eigen::VectorXd& counts) {
  const int n = static_cast<int>(z.size());
  Eigen::MatrixXd X(n, 4);
  for (int r = 0; r < n; ++r) {
    X(r, 0) = 1.0;
    X(r, 1) = z[r];
    X(r, 2) = z[r] * z[r];
    X(r, 3) = z[r] * z[r] * z[r];
  }
  Eigen::Vector4d beta = Eigen::Vector4d::Zero();
  beta[0] = std::log(std::max(counts.mean(), 0.1));
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd eta = (X * beta).cwiseMax(-30.0).cwiseMin(30.0);
    Eigen::VectorXd mu = eta.array().exp();
    Eigen::VectorXd zwork = eta + (counts - mu).cwiseQuotient(mu.cwiseMax(1e-9));
    Eigen::MatrixXd xtw = X.transpose() * mu.asDiagonal();
    Eigen::Matrix4d a = xtw * X + 1e-10 * Eigen::Matrix4d::Identity();
    Eigen::Vector4d next = a.ldlt().solve(xtw * zwork);
    double delta = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (delta < 1e-10) return beta;
  }
  throw std::runtime_error("estimate_pipetting_prior: Poisson GLM did not converge in 100 IRLS iterations");
}

}  // namespace

GammaMixture estimate_pipetting_prior(std::span<const PlateExperiment> plates, int bins, int K) {
  if (bins < 5) throw std::invalid_argument("estimate_pipetting_prior: bins must be >= 5");
  if (K < 1 || K % 2 == 0) throw std::invalid_argument("estimate_pipetting_prior: K must be odd");

  // qualifying ratios: normalized lowest-dose means above the control mean
  std::vector<double> ratios;
  double ss = 0.0;
  long df = 0;
  for (const auto& p : plates) {
    double cm = p.control_mean();
    if (cm <= 0.0)
      throw std::runtime_error("estimate_pipetting_prior: nonpositive control mean on plate (" +
                               std::to_string(p.row) + "," + std::to_string(p.col) + ")");
    if (p.control_values.size() < 2)
      throw std::runtime_error("estimate_pipetting_prior: plate needs >= 2 control replicates");
    double m0 = p.dose_values.row(0).mean() / cm;
    if (m0 > 1.0) ratios.push_back(m0);
    for (double cv : p.control_values) {
      double u = cv / cm - 1.0;
      ss += u * u;
    }
    df += static_cast<long>(p.control_values.size()) - 1;
  }
  if (ratios.size() < 10)
    throw std::runtime_error(
        "estimate_pipetting_prior: fewer than 10 qualifying plates (lowest-dose mean above "
        "control); use a fixed-width prior instead");
  double sigma2_hat = std::max(ss / static_cast<double>(df), 1e-10);

  const int half = (K - 1) / 2;
  double r_hi = *std::max_element(ratios.begin(), ratios.end());
  double span_hi = r_hi - 1.0;

  Eigen::VectorXd support(K), weights(K);
  if (span_hi < 1e-8) {
    // all qualifying ratios essentially at 1: collapse to a point mass
    double delta = span_hi / std::max(half, 1);
    for (int k = 0; k < K; ++k) {
      support[k] = 1.0 + delta * (k - half);
      weights[k] = 1.0 / K;
    }
  } else {
    double width = span_hi * (1.0 + 1e-9) / bins;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
    Eigen::VectorXd centers(bins);
    for (int b = 0; b < bins; ++b) centers[b] = 1.0 + (b + 0.5) * width;
    int nonempty = 0;
    for (double r : ratios) {
      int b = std::min(static_cast<int>((r - 1.0) / width), bins - 1);
      if (counts[b] == 0.0) ++nonempty;
      counts[b] += 1.0;
    }
    double delta = span_hi / half;
    delta = std::min(delta, (1.0 - 1e-3) / half);  // keep the support positive
    std::function<double(double)> density;
    Eigen::Vector4d beta = Eigen::Vector4d::Zero();
    if (nonempty >= 4) {
      double zm = centers.mean();
      double zs = std::sqrt((centers.array() - zm).square().mean());
      Eigen::VectorXd z = (centers.array() - zm) / zs;
      beta = poisson_cubic_fit(z, counts);
      density = [&](double r) {
        double x = (r - zm) / zs;
        double eta = beta[0] + beta[1] * x + beta[2] * x * x + beta[3] * x * x * x;
        return std::exp(std::clamp(eta, -30.0, 30.0));
      };
    } else {
      // too concentrated for a cubic fit: use the histogram itself
      density = [&](double r) {
        int b = std::clamp(static_cast<int>((r - 1.0) / width), 0, bins - 1);
        return counts[b] + 1e-9;
      };
    }
    for (int k = 0; k < K; ++k) {
      support[k] = 1.0 + delta * (k - half);
      weights[k] = density(1.0 + std::fabs(k - half) * delta);
    }
    weights /= weights.sum();
  }

  GammaMixture mix;
  mix.weights = weights;
  mix.shapes = Eigen::VectorXd(K);
  mix.scale_bases = Eigen::VectorXd(K);
  for (int k = 0; k < K; ++k) {
    mix.shapes[k] = support[k] * support[k] / sigma2_hat;
    mix.scale_bases[k] = sigma2_hat / support[k];
  }
  mix.validate();
  return mix;
}

double gamma_mixture_loglik(std::span<const double> y, double theta, const GammaMixture& mix) {
  if (theta <= 0.0 || theta > 1.0) return -INFINITY;
  const int K = mix.K();
  double total = 0.0;
  std::vector<double> terms(K);
  for (double yr : y) {
    if (yr < 0.0) throw std::invalid_argument("gamma_mixture_loglik: negative observation");
    double yv = std::max(yr, 1e-12);  // exact zeros would zero out every component
    for (int k = 0; k < K; ++k)
      terms[k] = std::log(mix.weights[k]) +
                 gamma_logpdf(yv, mix.shapes[k], mix.scale_bases[k] * theta);
    total += log_sum_exp(terms);
  }
  return total;
}

BlackBoxLik make_dose_blackbox(const GammaMixture& mix, bool monotone) {
  BlackBoxLik lik;
  lik.constraints = monotone ? ConstraintKind::unit_box_monotone : ConstraintKind::unit_box;
  lik.loglik = [mix](int, int, int, std::span<const double> y, double theta) {
    return gamma_mixture_loglik(y, theta, mix);
  };
  return lik;
}

ConstraintSet build_dose_constraints(UpdateContext context, const FactorState& state, int index,
                                     std::span<const std::pair<int, int>> observed,
                                     bool monotone) {
  ConstraintKind kind = monotone ? ConstraintKind::unit_box_monotone : ConstraintKind::unit_box;
  if (context == UpdateContext::row) return build_row_constraints(kind, state, index, observed);
  return build_col_constraints(kind, state, index, observed);
}

std::vector<PredictiveInterval> posterior_predictive_intervals(const PosteriorSamples& samples,
                                                               const GammaMixture& mix,
                                                               double level, uint64_t seed) {
  if (level <= 0.0 || level >= 1.0)
    throw std::invalid_argument("posterior_predictive_intervals: level outside (0,1)");
  if (samples.draws.empty()) throw std::invalid_argument("posterior_predictive_intervals: no draws");
  mix.validate();
  const FactorState& head = samples.draws[0];
  const double alpha = 1.0 - level;

  std::vector<PredictiveInterval> out;
  out.reserve(static_cast<size_t>(head.N()) * head.M() * head.T());
  for (int i = 0; i < head.N(); ++i)
    for (int j = 0; j < head.M(); ++j)
      for (int t = 0; t < head.T(); ++t) {
        std::vector<double> sims;
        sims.reserve(samples.draws.size());
        Rng rng = Rng::derive(seed, (static_cast<uint64_t>(i) << 40) ^
                                        (static_cast<uint64_t>(j) << 20) ^
                                        static_cast<uint64_t>(t));
        for (const auto& d : samples.draws) {
          double theta = d.inner(i, j, t);
          if (theta <= 0.0) {
            sims.push_back(0.0);
            continue;
          }
          double u = rng.uniform();
          int k = 0;
          double acc = mix.weights[0];
          while (k + 1 < mix.K() && u > acc) acc += mix.weights[++k];
          sims.push_back(rng.gamma(mix.shapes[k], mix.scale_bases[k] * theta));
        }
        PredictiveInterval pi;
        pi.i = i;
        pi.j = j;
        pi.t = t;
        pi.lo = quantile(sims, alpha / 2.0);
        pi.hi = quantile(std::move(sims), 1.0 - alpha / 2.0);
        out.push_back(pi);
      }
  return out;
}

std::vector<PlateExperiment> read_plate_csv(const std::string& path) {
  auto rows = read_csv_rows(path);
  std::vector<std::string> expect = {"plate_id", "row", "col", "dose_index",
                                     "replicate", "value", "is_control"};
  if (rows.empty() || rows[0] != expect)
    throw std::runtime_error(path +
                             ": expected header plate_id,row,col,dose_index,replicate,value,is_control");
  struct Raw {
    int row = 0, col = 0;
    std::vector<double> controls;
    std::map<std::pair<int, int>, double> doses;  // (t, r) -> value
    int t_max = -1, r_max = -1;
  };
  std::map<std::string, Raw> plates;
  for (size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].size() != 7) throw std::runtime_error(path + ": malformed line");
    Raw& p = plates[rows[k][0]];
    p.row = std::stoi(rows[k][1]);
    p.col = std::stoi(rows[k][2]);
    double value = std::stod(rows[k][5]);
    if (rows[k][6] == "1" || rows[k][6] == "true") {
      p.controls.push_back(value);
    } else {
      int t = std::stoi(rows[k][3]);
      int r = std::stoi(rows[k][4]);
      p.doses[{t, r}] = value;
      p.t_max = std::max(p.t_max, t);
      p.r_max = std::max(p.r_max, r);
    }
  }
  std::vector<PlateExperiment> out;
  for (auto& [id, raw] : plates) {
    PlateExperiment p;
    p.row = raw.row;
    p.col = raw.col;
    p.control_values = raw.controls;
    p.dose_values = Eigen::MatrixXd::Zero(raw.t_max + 1, raw.r_max + 1);
    for (auto& [tr, v] : raw.doses) p.dose_values(tr.first, tr.second) = v;
    out.push_back(std::move(p));
  }
  return out;
}

void write_plate_csv(const std::string& path, std::span<const PlateExperiment> plates) {
  std::string out = "plate_id,row,col,dose_index,replicate,value,is_control\n";
  int id = 0;
  for (const auto& p : plates) {
    std::string pid = "p" + std::to_string(id++);
    for (size_t r = 0; r < p.control_values.size(); ++r)
      out += pid + "," + std::to_string(p.row) + "," + std::to_string(p.col) + ",," +
             std::to_string(r) + "," + fmt_double(p.control_values[r]) + ",1\n";
    for (int t = 0; t < p.dose_values.rows(); ++t)
      for (int r = 0; r < p.dose_values.cols(); ++r)
        out += pid + "," + std::to_string(p.row) + "," + std::to_string(p.col) + "," +
               std::to_string(t) + "," + std::to_string(r) + "," +
               fmt_double(p.dose_values(t, r)) + ",0\n";
  }
  write_text_file(path, out);
}

void write_mixture_json(const std::string& path, const GammaMixture& mix) {
  nlohmann::json j;
  j["weights"] = std::vector<double>(mix.weights.data(), mix.weights.data() + mix.K());
  j["shapes"] = std::vector<double>(mix.shapes.data(), mix.shapes.data() + mix.K());
  j["scale_bases"] =
      std::vector<double>(mix.scale_bases.data(), mix.scale_bases.data() + mix.K());
  write_text_file_atomic(path, j.dump(2) + "\n");
}

GammaMixture read_mixture_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mixture " + path);
  nlohmann::json j;
  in >> j;
  auto w = j.at("weights").get<std::vector<double>>();
  auto a = j.at("shapes").get<std::vector<double>>();
  auto b = j.at("scale_bases").get<std::vector<double>>();
  GammaMixture mix;
  mix.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  mix.shapes = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
  mix.scale_bases = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  mix.validate();
  return mix;
}

}  // namespace btf
