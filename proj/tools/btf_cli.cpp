// Command-line driver: data generation, model fitting with grid search and
// DIC selection, benchmark reproduction, metrics, and posterior prediction.
#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <thread>

#include "btf/benchmarks.hpp"
#include "btf/dose.hpp"
#include "btf/gibbs.hpp"
#include "btf/io.hpp"
#include "btf/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace btf;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
  std::vector<std::string> argv;
  std::string out_dir;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;
  json extra;

  std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
  void record(const std::string& name) { outputs.push_back(name); }

  void write_manifest(const std::string& status, const std::string& error = "") {
    json m;
    m["argv"] = argv;
    m["version"] = kVersion;
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    m["outputs"] = outputs;
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m["timing_seconds"] = secs;
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_text_file_atomic(path("manifest.json"), m.dump(2) + "\n");
  }
};

// -------- generate ------------------------------------------------------------

int cmd_generate(RunContext& ctx, const std::string& kind, uint64_t seed, int N, int M, int T,
                 int D, int R, double jump_prob, double noise_sd) {
  Rng rng = Rng::derive(seed, 0x67656eULL);
  ctx.extra["kind"] = kind;
  ctx.extra["seed"] = seed;

  std::vector<LongRecord> data;
  std::vector<TruthRecord> truth;
  if (kind == "gass") {
    GassBenchmarkInstance inst = gen_gass_benchmark(rng);
    for (int i = 0; i < inst.theta_true.size(); ++i) {
      truth.push_back({0, 0, i, inst.theta_true[i]});
      for (int r = 0; r < inst.y.cols(); ++r) data.push_back({0, 0, i, r, inst.y(i, r)});
    }
  } else if (kind == "poisson") {
    PoissonDynSysInstance inst = gen_poisson_dynsys(N, M, T, D, rng);
    for (int i = 0; i < inst.N; ++i)
      for (int j = 0; j < inst.M; ++j)
        for (int t = 0; t < inst.T; ++t) {
          data.push_back({i, j, t, 0, static_cast<double>(inst.count(i, j, t))});
          truth.push_back({i, j, t, inst.rate(i, j, t)});
        }
  } else if (kind == "gaussian") {
    GaussianSynthInstance inst = gen_gaussian_functional_matrix(N, M, T, D, jump_prob, noise_sd,
                                                                R, rng);
    data = inst.y.to_long_format();
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < M; ++j)
        for (int t = 0; t < T; ++t) truth.push_back({i, j, t, inst.truth.inner(i, j, t)});
  } else {
    throw CLI::ValidationError("generate", "unknown kind '" + kind + "'");
  }

  write_long_csv(ctx.path("data.csv"), data);
  ctx.record("data.csv");
  write_truth_csv(ctx.path("truth.csv"), truth);
  ctx.record("truth.csv");
  return 0;
}

// -------- fit -----------------------------------------------------------------

struct ParsedFit {
  FitConfig cfg;
  int checkpoint_every = 500;
  std::string likelihood_kind;
  std::string mixture_path;
  bool monotone = true;
  int trials_const = 1;
};

std::string require_key(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("config: missing required key '" + key + "'");
  return it->second;
}

std::string key_or(const std::map<std::string, std::string>& kv, const std::string& key,
                   const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

bool parse_bool(const std::string& s) { return s == "true" || s == "1" || s == "yes"; }

ParsedFit parse_fit_config(const std::map<std::string, std::string>& kv, int N, int M, int T) {
  ParsedFit out;
  FitConfig& cfg = out.cfg;
  cfg.sweeps = std::stoi(require_key(kv, "run.sweeps"));
  cfg.burn_in = std::stoi(require_key(kv, "run.burn_in"));
  cfg.thin = std::stoi(key_or(kv, "run.thin", "1"));
  cfg.seed = std::stoull(key_or(kv, "run.seed", "0"));
  out.checkpoint_every = std::stoi(key_or(kv, "run.checkpoint_every", "500"));
  cfg.D = std::stoi(require_key(kv, "model.D"));
  cfg.k = std::stoi(key_or(kv, "model.k", "0"));
  cfg.rho2 = std::stod(key_or(kv, "model.rho2", "0.01"));
  cfg.shrinkage_update = key_or(kv, "model.shrinkage_update", "derived") == "paper_literal"
                             ? ShrinkageUpdate::paper_literal
                             : ShrinkageUpdate::derived;
  cfg.gass.grid_size = std::stoi(key_or(kv, "gass.grid_size", "512"));
  cfg.gass.include_current = parse_bool(key_or(kv, "gass.include_current", "true"));
  cfg.ep_inflation = std::stod(key_or(kv, "ep.inflation", "2.0"));
  cfg.refresh_ep_after_burnin = parse_bool(key_or(kv, "ep.refresh_after_burnin", "false"));
  cfg.als_max_iters = std::stoi(key_or(kv, "ep.als_max_iters", "50"));

  out.likelihood_kind = require_key(kv, "likelihood.kind");
  if (out.likelihood_kind == "gaussian") {
    cfg.likelihood = GaussianLik{std::stod(key_or(kv, "likelihood.nu2", "1.0"))};
  } else if (out.likelihood_kind == "binomial") {
    out.trials_const = std::stoi(require_key(kv, "likelihood.trials"));
    cfg.likelihood = BinomialLik(N, M, T, out.trials_const);
  } else if (out.likelihood_kind == "poisson") {
    cfg.likelihood = make_poisson_blackbox();
  } else if (out.likelihood_kind == "dose") {
    out.mixture_path = require_key(kv, "likelihood.mixture");
    out.monotone = parse_bool(key_or(kv, "likelihood.monotone", "true"));
    cfg.likelihood = make_dose_blackbox(read_mixture_json(out.mixture_path), out.monotone);
  } else {
    throw std::runtime_error("config: unknown likelihood.kind '" + out.likelihood_kind + "'");
  }
  return out;
}

json checkpoint_to_json(const ResumePoint& rp) {
  json j;
  j["next_sweep"] = rp.next_sweep;
  j["nu2"] = rp.nu2;
  j["degenerate"] = rp.degenerate;
  const FactorState& st = rp.state;
  j["dims"] = {{"N", st.N()}, {"M", st.M()}, {"T", st.T()}, {"D", st.D()}};
  j["W"] = std::vector<double>(st.W.data(), st.W.data() + st.W.size());
  std::vector<double> v;
  for (const auto& vm : st.V) v.insert(v.end(), vm.data(), vm.data() + vm.size());
  j["V"] = v;
  auto dump = [](const Eigen::MatrixXd& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
  };
  j["tau2"] = dump(rp.shrinkage.tau2);
  j["c"] = dump(rp.shrinkage.c);
  j["phi"] = dump(rp.shrinkage.phi);
  j["eta"] = dump(rp.shrinkage.eta);
  j["L"] = static_cast<int>(rp.shrinkage.tau2.cols());
  j["sigma2"] = rp.shrinkage.sigma2;
  j["rho2"] = rp.shrinkage.rho2;
  return j;
}

ResumePoint checkpoint_from_json(const json& j) {
  ResumePoint rp;
  rp.next_sweep = j.at("next_sweep").get<int>();
  rp.nu2 = j.at("nu2").get<double>();
  rp.degenerate = j.at("degenerate").get<long>();
  int N = j.at("dims").at("N"), M = j.at("dims").at("M"), T = j.at("dims").at("T"),
      D = j.at("dims").at("D");
  int L = j.at("L").get<int>();
  rp.state = FactorState(N, M, T, D);
  auto wv = j.at("W").get<std::vector<double>>();
  std::copy(wv.begin(), wv.end(), rp.state.W.data());
  auto vv = j.at("V").get<std::vector<double>>();
  size_t off = 0;
  for (auto& vm : rp.state.V) {
    std::copy(vv.begin() + off, vv.begin() + off + vm.size(), vm.data());
    off += vm.size();
  }
  rp.shrinkage = ShrinkageState(M, L, j.at("rho2").get<double>());
  auto load = [&](const char* key, Eigen::MatrixXd& m) {
    auto data = j.at(key).get<std::vector<double>>();
    std::copy(data.begin(), data.end(), m.data());
  };
  load("tau2", rp.shrinkage.tau2);
  load("c", rp.shrinkage.c);
  load("phi", rp.shrinkage.phi);
  load("eta", rp.shrinkage.eta);
  rp.shrinkage.sigma2 = j.at("sigma2").get<double>();
  return rp;
}

std::string trace_line(const SweepRecord& rec) {
  std::string nu2 = std::isnan(rec.nu2) ? "" : fmt_double(rec.nu2);
  return std::to_string(rec.sweep) + "," + fmt_double(rec.loglik) + "," +
         fmt_double(rec.sigma2) + "," + nu2 + "," + std::to_string(rec.degenerate_total) + "\n";
}

void append_snapshot(std::string& w_out, std::string& v_out, int snap_index,
                     const FactorState& st) {
  for (int i = 0; i < st.N(); ++i)
    for (int d = 0; d < st.D(); ++d)
      w_out += std::to_string(snap_index) + "," + std::to_string(i) + "," + std::to_string(d) +
               "," + fmt_double(st.W(i, d)) + "\n";
  for (int j = 0; j < st.M(); ++j)
    for (int t = 0; t < st.T(); ++t)
      for (int d = 0; d < st.D(); ++d)
        v_out += std::to_string(snap_index) + "," + std::to_string(j) + "," + std::to_string(t) +
                 "," + std::to_string(d) + "," + fmt_double(st.V[j](t, d)) + "\n";
}

// Drop trace/snapshot lines at or past the checkpoint so a resumed run
// appends exactly what the uninterrupted run would have written.
void truncate_run_files(const std::string& dir, int next_sweep, int burn_in, int thin) {
  auto filter = [](const std::string& path, auto keep) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("resume: missing " + path);
    std::string line, out;
    bool header = true;
    while (std::getline(in, line)) {
      if (header) {
        out += line + "\n";
        header = false;
        continue;
      }
      if (line.empty()) continue;
      int id = std::stoi(line.substr(0, line.find(',')));
      if (keep(id)) out += line + "\n";
    }
    in.close();
    write_text_file(path, out);
  };
  filter(dir + "/trace.csv", [&](int sweep) { return sweep < next_sweep; });
  int retained_before = next_sweep <= burn_in ? 0 : (next_sweep - burn_in + thin - 1) / thin;
  filter(dir + "/snapshots_w.csv", [&](int s) { return s < retained_before; });
  filter(dir + "/snapshots_v.csv", [&](int s) { return s < retained_before; });
}

struct FitOutcome {
  double dic = std::numeric_limits<double>::quiet_NaN();
  long degenerate = 0;
};

FitOutcome run_single_fit(const std::string& out_dir, const ObservationTensor& y,
                          const ParsedFit& parsed, bool resume) {
  fs::create_directories(out_dir);
  const FitConfig& cfg = parsed.cfg;

  ResumePoint rp;
  bool have_resume = false;
  if (resume) {
    std::ifstream in(out_dir + "/checkpoint.json");
    if (!in) throw std::runtime_error("resume requested but no checkpoint in " + out_dir);
    json j;
    in >> j;
    rp = checkpoint_from_json(j);
    have_resume = true;
    truncate_run_files(out_dir, rp.next_sweep, cfg.burn_in, cfg.thin);
  }

  std::string trace_out = have_resume ? "" : "sweep,loglik,sigma2,nu2,degenerate_gass\n";
  std::string w_out = have_resume ? "" : "sweep,row,dim,value\n";
  std::string v_out = have_resume ? "" : "sweep,col,dose,dim,value\n";
  int snap_index = have_resume && rp.next_sweep > cfg.burn_in
                       ? (rp.next_sweep - cfg.burn_in + cfg.thin - 1) / cfg.thin
                       : 0;
  std::ofstream trace_f(out_dir + "/trace.csv", have_resume ? std::ios::app : std::ios::trunc);
  std::ofstream w_f(out_dir + "/snapshots_w.csv", have_resume ? std::ios::app : std::ios::trunc);
  std::ofstream v_f(out_dir + "/snapshots_v.csv", have_resume ? std::ios::app : std::ios::trunc);
  trace_f << trace_out;
  w_f << w_out;
  v_f << v_out;

  long degenerate = 0;
  SweepHook hook = [&](const SweepRecord& rec, const FactorState& st, const ShrinkageState& sh) {
    trace_f << trace_line(rec);
    degenerate = rec.degenerate_total;
    if (rec.retained) {
      std::string wblk, vblk;
      append_snapshot(wblk, vblk, snap_index, st);
      w_f << wblk;
      v_f << vblk;
      ++snap_index;
    }
    if (parsed.checkpoint_every > 0 && (rec.sweep + 1) % parsed.checkpoint_every == 0 &&
        rec.sweep + 1 < cfg.sweeps) {
      trace_f.flush();
      w_f.flush();
      v_f.flush();
      ResumePoint cp;
      cp.next_sweep = rec.sweep + 1;
      cp.state = st;
      cp.shrinkage = sh;
      cp.nu2 = std::isnan(rec.nu2) ? 1.0 : rec.nu2;
      cp.degenerate = rec.degenerate_total;
      write_text_file_atomic(out_dir + "/checkpoint.json", checkpoint_to_json(cp).dump() + "\n");
    }
  };

  fit(y, cfg, hook, have_resume ? &rp : nullptr);
  trace_f.close();
  w_f.close();
  v_f.close();

  // DIC and posterior curves from the full retained set (covers resumes)
  PosteriorSamples samples =
      read_snapshots_csv(out_dir + "/snapshots_w.csv", out_dir + "/snapshots_v.csv");
  samples.total_sweeps = cfg.sweeps;
  samples.burn_in = cfg.burn_in;
  samples.thin = cfg.thin;
  if (std::holds_alternative<GaussianLik>(cfg.likelihood)) {
    // plug-in nu2 for the DIC deviances comes from the trace
    auto rows = read_csv_rows(out_dir + "/trace.csv");
    for (size_t r = 1; r < rows.size(); ++r) {
      int sweep = std::stoi(rows[r][0]);
      if (sweep >= cfg.burn_in && (sweep - cfg.burn_in) % cfg.thin == 0)
        samples.nu2_draws.push_back(std::stod(rows[r][3]));
    }
  }

  FitOutcome out;
  out.degenerate = degenerate;
  try {
    out.dic = compute_dic(samples, y, cfg.likelihood);
  } catch (const std::exception&) {
    // fewer than 10 retained draws, or likelihood undefined at the mean
  }

  std::string curves = "row,col,dose,mean,lo90,hi90\n";
  const FactorState& head = samples.draws.at(0);
  for (int i = 0; i < head.N(); ++i)
    for (int j = 0; j < head.M(); ++j) {
      Eigen::VectorXd m = samples.mean_curve(i, j);
      for (int t = 0; t < head.T(); ++t)
        curves += std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(t) + "," +
                  fmt_double(m[t]) + "," + fmt_double(samples.curve_quantile(i, j, t, 0.05)) +
                  "," + fmt_double(samples.curve_quantile(i, j, t, 0.95)) + "\n";
    }
  write_text_file(out_dir + "/posterior_mean_curves.csv", curves);

  json dic_j;
  dic_j["dic"] = out.dic;
  dic_j["retained_draws"] = samples.draws.size();
  dic_j["degenerate_gass_steps"] = out.degenerate;
  write_text_file_atomic(out_dir + "/dic.json", dic_j.dump(2) + "\n");
  return out;
}

std::vector<std::map<std::string, std::string>> expand_grid(
    const std::map<std::string, std::string>& base, const std::vector<std::string>& grid_specs) {
  std::vector<std::map<std::string, std::string>> configs = {base};
  for (const auto& spec : grid_specs) {
    size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--grid expects key=v1,v2,... got '" + spec + "'");
    std::string key = spec.substr(0, eq);
    if (key.find('.') == std::string::npos) key = "model." + key;
    std::vector<std::string> values;
    std::string v;
    std::istringstream ss(spec.substr(eq + 1));
    while (std::getline(ss, v, ',')) values.push_back(v);
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& c : configs)
      for (const auto& val : values) {
        auto c2 = c;
        c2[key] = val;
        next.push_back(c2);
      }
    configs = std::move(next);
  }
  return configs;
}

int cmd_fit(RunContext& ctx, const std::string& data_path, const std::string& config_path,
            uint64_t seed_override, bool have_seed_override,
            const std::vector<std::string>& grid_specs, bool resume, int threads) {
  auto records = read_long_csv(data_path);
  ObservationTensor y = ObservationTensor::from_long_format(records);
  auto base_kv = parse_config_file(config_path);
  if (have_seed_override) base_kv["run.seed"] = std::to_string(seed_override);
  ctx.extra["config"] = base_kv;
  ctx.extra["data"] = data_path;
  ctx.extra["dims"] = {{"N", y.N()}, {"M", y.M()}, {"T", y.T()}, {"R", y.R()}};

  if (grid_specs.empty()) {
    ParsedFit parsed = parse_fit_config(base_kv, y.N(), y.M(), y.T());
    ctx.extra["seed"] = parsed.cfg.seed;
    FitOutcome out = run_single_fit(ctx.out_dir, y, parsed, resume);
    ctx.extra["dic"] = out.dic;
    ctx.extra["degenerate_gass_steps"] = out.degenerate;
    for (const char* f : {"trace.csv", "snapshots_w.csv", "snapshots_v.csv",
                          "posterior_mean_curves.csv", "dic.json"})
      ctx.record(f);
    return 0;
  }

  auto configs = expand_grid(base_kv, grid_specs);
  json selection;
  selection["runs"] = json::array();
  double best = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  std::vector<double> dics(configs.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> dirs(configs.size());
  for (size_t c = 0; c < configs.size(); ++c) {
    char sub[32];
    std::snprintf(sub, sizeof(sub), "run_%03zu", c);
    dirs[c] = (fs::path(ctx.out_dir) / sub).string();
  }
  // grid cells are independent runs; farm them out
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t c = next.fetch_add(1);
      if (c >= configs.size()) return;
      ParsedFit parsed = parse_fit_config(configs[c], y.N(), y.M(), y.T());
      FitOutcome out = run_single_fit(dirs[c], y, parsed, false);
      dics[c] = out.dic;
    }
  };
  int nt = std::max(1, std::min<int>(threads, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < nt; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (size_t c = 0; c < configs.size(); ++c) {
    json run;
    run["dir"] = fs::path(dirs[c]).filename().string();
    run["config"] = configs[c];
    run["dic"] = dics[c];
    selection["runs"].push_back(run);
    if (dics[c] < best) {
      best = dics[c];
      best_idx = static_cast<int>(c);
    }
  }
  selection["best_index"] = best_idx;
  if (best_idx >= 0) selection["best_config"] = configs[best_idx];
  write_text_file_atomic(ctx.path("selection.json"), selection.dump(2) + "\n");
  ctx.record("selection.json");
  return 0;
}

// -------- benchmark -------------------------------------------------------------

int cmd_benchmark(RunContext& ctx, const std::string& kind, int trials, int m, int burn_in,
                  int samples, uint64_t seed, int threads) {
  ctx.extra["kind"] = kind;
  ctx.extra["seed"] = seed;
  ctx.extra["trials"] = trials;
  auto na_or = [&](double se) { return trials >= 2 ? fmt_double(se) : std::string("NA"); };

  if (kind == "gass-table1") {
    Table1Result res = run_gass_table1(m, trials, seed, threads);
    std::string table = "sampler,mse_mean,mse_se,coverage_mean,coverage_se\n";
    std::string plot = "sampler,trial,mse,coverage\n";
    for (const char* name : {"RS", "LRS", "PP", "LPP", "GASS"}) {
      const Table1Cell& cell = res.cells.at(name);
      table += std::string(name) + "," + fmt_double(cell.mse_mean) + "," + na_or(cell.mse_se) +
               "," + fmt_double(cell.coverage_mean) + "," + na_or(cell.coverage_se) + "\n";
      for (int t = 0; t < trials; ++t)
        plot += std::string(name) + "," + std::to_string(t) + "," +
                fmt_double(cell.mse_trials[t]) + "," + fmt_double(cell.coverage_trials[t]) + "\n";
    }
    write_text_file(ctx.path("table1.csv"), table);
    ctx.record("table1.csv");
    write_text_file(ctx.path("table1_trials.csv"), plot);
    ctx.record("table1_trials.csv");
    ctx.extra["m"] = m;
    ctx.extra["failed_trials"] = res.failed_trials;
    json rep;
    rep["m"] = m;
    rep["failed_trials"] = res.failed_trials;
    for (auto& [name, cell] : res.cells)
      rep["samplers"][name] = {{"mse_mean", cell.mse_mean},
                               {"coverage_mean", cell.coverage_mean}};
    write_text_file_atomic(ctx.path("report.json"), rep.dump(2) + "\n");
    ctx.record("report.json");
    return 0;
  }
  if (kind == "poisson-table2") {
    Table2Summary res = run_poisson_table2(burn_in, samples, trials, seed, threads);
    std::string table = "model,nll_mean,nll_se,mae_mean,mae_se,rmse_mean,rmse_se\n";
    table += "BTF," + fmt_double(res.nll_mean) + "," + na_or(res.nll_se) + "," +
             fmt_double(res.mae_mean) + "," + na_or(res.mae_se) + "," +
             fmt_double(res.rmse_mean) + "," + na_or(res.rmse_se) + "\n";
    write_text_file(ctx.path("table2.csv"), table);
    ctx.record("table2.csv");
    std::string plot = "trial,nll,mae,rmse\n";
    for (int t = 0; t < trials; ++t)
      plot += std::to_string(t) + "," + fmt_double(res.trials[t].nll) + "," +
              fmt_double(res.trials[t].mae) + "," + fmt_double(res.trials[t].rmse) + "\n";
    write_text_file(ctx.path("table2_trials.csv"), plot);
    ctx.record("table2_trials.csv");
    ctx.extra["burn_in"] = burn_in;
    ctx.extra["samples"] = samples;
    ctx.extra["failed_trials"] = res.failed_trials;
    json rep;
    rep["burn_in"] = burn_in;
    rep["samples"] = samples;
    rep["failed_trials"] = res.failed_trials;
    rep["nll_mean"] = res.nll_mean;
    rep["mae_mean"] = res.mae_mean;
    rep["rmse_mean"] = res.rmse_mean;
    write_text_file_atomic(ctx.path("report.json"), rep.dump(2) + "\n");
    ctx.record("report.json");
    return 0;
  }
  throw CLI::ValidationError("benchmark", "unknown kind '" + kind + "'");
}

// -------- metrics ----------------------------------------------------------------

int cmd_metrics(RunContext& ctx, const std::string& pred_path, const std::string& truth_path) {
  auto pred_rows = read_csv_rows(pred_path);
  if (pred_rows.empty()) throw std::runtime_error("metrics: empty prediction file");
  const auto& header = pred_rows[0];
  auto col_of = [&](const std::string& name) {
    for (size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<int>(c);
    return -1;
  };
  int c_row = col_of("row"), c_col = col_of("col"), c_dose = col_of("dose");
  int c_val = col_of("value") >= 0 ? col_of("value") : col_of("mean");
  int c_lo = col_of("lo") >= 0 ? col_of("lo") : col_of("lo90");
  int c_hi = col_of("hi") >= 0 ? col_of("hi") : col_of("hi90");
  if (c_row < 0 || c_col < 0 || c_dose < 0 || c_val < 0)
    throw std::runtime_error("metrics: prediction file needs row,col,dose,value columns");

  std::map<std::tuple<int, int, int>, double> truth;
  for (const auto& t : read_truth_csv(truth_path)) truth[{t.row, t.col, t.dose}] = t.value;

  std::vector<double> pred, tru, lo, hi;
  for (size_t r = 1; r < pred_rows.size(); ++r) {
    const auto& row = pred_rows[r];
    auto key = std::make_tuple(std::stoi(row[c_row]), std::stoi(row[c_col]),
                               std::stoi(row[c_dose]));
    auto it = truth.find(key);
    if (it == truth.end()) throw std::runtime_error("metrics: prediction without matching truth");
    pred.push_back(std::stod(row[c_val]));
    tru.push_back(it->second);
    if (c_lo >= 0 && c_hi >= 0) {
      lo.push_back(std::stod(row[c_lo]));
      hi.push_back(std::stod(row[c_hi]));
    }
  }
  PointMetrics m = point_metrics(pred, tru);
  json rep;
  rep["n"] = m.n;
  rep["mse"] = m.mse;
  rep["mae"] = m.mae;
  rep["rmse"] = m.rmse;
  if (!lo.empty()) rep["coverage"] = interval_coverage(tru, lo, hi);
  write_text_file_atomic(ctx.path("metrics.json"), rep.dump(2) + "\n");
  ctx.record("metrics.json");
  return 0;
}

// -------- predict ----------------------------------------------------------------

int cmd_predict(RunContext& ctx, const std::string& run_dir, const std::string& mixture_path,
                double level, uint64_t seed) {
  PosteriorSamples samples =
      read_snapshots_csv(run_dir + "/snapshots_w.csv", run_dir + "/snapshots_v.csv");
  const FactorState& head = samples.draws.at(0);
  std::string curves = "row,col,dose,mean,lo90,hi90\n";
  for (int i = 0; i < head.N(); ++i)
    for (int j = 0; j < head.M(); ++j) {
      Eigen::VectorXd m = samples.mean_curve(i, j);
      for (int t = 0; t < head.T(); ++t)
        curves += std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(t) + "," +
                  fmt_double(m[t]) + "," + fmt_double(samples.curve_quantile(i, j, t, 0.05)) +
                  "," + fmt_double(samples.curve_quantile(i, j, t, 0.95)) + "\n";
    }
  write_text_file(ctx.path("predicted_curves.csv"), curves);
  ctx.record("predicted_curves.csv");

  if (!mixture_path.empty()) {
    GammaMixture mix = read_mixture_json(mixture_path);
    auto intervals = posterior_predictive_intervals(samples, mix, level, seed);
    std::string out = "row,col,dose,lo,hi\n";
    for (const auto& pi : intervals)
      out += std::to_string(pi.i) + "," + std::to_string(pi.j) + "," + std::to_string(pi.t) +
             "," + fmt_double(pi.lo) + "," + fmt_double(pi.hi) + "\n";
    write_text_file(ctx.path("predictive_intervals.csv"), out);
    ctx.record("predictive_intervals.csv");
    ctx.extra["level"] = level;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian tensor filtering: functional matrix factorization via Gibbs sampling"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed/--out/--threads are accepted after the subcommand too

  uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", threads, "worker threads for trials and grid cells")
      ->capture_default_str();

  auto* gen = app.add_subcommand("generate", "write a synthetic benchmark instance");
  std::string gen_kind;
  int N = 11, M = 12, T = 20, D = 3, R = 3;
  double jump_prob = 0.05, noise_sd = 0.5;
  gen->add_option("kind", gen_kind, "gass | poisson | gaussian")->required();
  gen->add_option("--N", N);
  gen->add_option("--M", M);
  gen->add_option("--T", T);
  gen->add_option("--D", D);
  gen->add_option("--R", R);
  gen->add_option("--jump-prob", jump_prob);
  gen->add_option("--noise-sd", noise_sd);

  auto* fitc = app.add_subcommand("fit", "fit the model to long-format data");
  std::string data_path, config_path;
  std::vector<std::string> grid_specs;
  bool resume = false;
  fitc->add_option("--data", data_path, "long-format CSV")->required();
  fitc->add_option("--config", config_path, "config file")->required();
  fitc->add_option("--grid", grid_specs,
                   "grid search spec key=v1,v2,... (repeatable); best run chosen by DIC");
  fitc->add_flag("--resume", resume, "continue from the checkpoint in --out");

  auto* bench = app.add_subcommand("benchmark", "run a benchmark study");
  std::string bench_kind;
  int trials = 5, m = 1000, burn_in = 500, samples = 500;
  bench->add_option("kind", bench_kind, "gass-table1 | poisson-table2")->required();
  bench->add_option("--trials", trials)->capture_default_str();
  bench->add_option("--m", m, "per-chain steps: m burn-in plus m retained")
      ->capture_default_str();
  bench->add_option("--burn-in", burn_in)->capture_default_str();
  bench->add_option("--samples", samples)->capture_default_str();

  auto* met = app.add_subcommand("metrics", "score predictions against ground truth");
  std::string pred_path, truth_path;
  met->add_option("--pred", pred_path)->required();
  met->add_option("--truth", truth_path)->required();

  auto* pred = app.add_subcommand("predict", "posterior curves from a fit run directory");
  std::string run_dir, mixture_path;
  double level = 0.5;
  pred->add_option("--run", run_dir)->required();
  pred->add_option("--mixture", mixture_path, "gamma mixture JSON for predictive intervals");
  pred->add_option("--level", level)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  for (int i = 0; i < argc; ++i) ctx.argv.push_back(argv[i]);
  ctx.out_dir = out_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << out_dir << ": " << ec.message() << "\n";
    return 1;
  }

  try {
    int rc = 1;
    if (gen->parsed())
      rc = cmd_generate(ctx, gen_kind, seed, N, M, T, D, R, jump_prob, noise_sd);
    else if (fitc->parsed())
      rc = cmd_fit(ctx, data_path, config_path, seed, app.count("--seed") > 0, grid_specs, resume,
                   threads);
    else if (bench->parsed())
      rc = cmd_benchmark(ctx, bench_kind, trials, m, burn_in, samples, seed, threads);
    else if (met->parsed())
      rc = cmd_metrics(ctx, pred_path, truth_path);
    else if (pred->parsed())
      rc = cmd_predict(ctx, run_dir, mixture_path, level, seed);
    ctx.write_manifest(rc == 0 ? "ok" : "failed");
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    try {
      ctx.write_manifest("failed", e.what());
    } catch (...) {
    }
    return 1;
  }
}
