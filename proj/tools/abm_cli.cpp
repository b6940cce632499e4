// Command-line front end: simulate synthetic datasets, train and analyze
// sequences, aggregate coefficients into causal graphs, evaluate against
// ground truth, and run replicated experiments.
//
// Exit codes: 0 success, 1 validation/input error, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "abm/experiment.hpp"

namespace fs = std::filesystem;
using namespace abm;

namespace {

struct CliConfig {
  double dt = 1.0 / 30.0;
  double fps = 0.0;  // 0: derived from dt
  double bin_seconds = 10.0;
  int p = 5;
  int T = 200;
  TrainConfig train;
  ModelOptions model;
};

CliConfig load_config(const std::string& path, SystemKind system, Method method) {
  CliConfig cfg;
  cfg.train = default_train_config(system, method);
  if (path.empty()) return cfg;
  json j = json::parse(detail::open_in(path));
  if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
  if (j.contains("fps")) cfg.fps = j.at("fps").get<double>();
  if (j.contains("bin_seconds")) cfg.bin_seconds = j.at("bin_seconds").get<double>();
  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    if (s.contains("p")) cfg.p = s.at("p").get<int>();
    if (s.contains("T")) cfg.T = s.at("T").get<int>();
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    auto get = [&](const char* key, auto& field) {
      if (t.contains(key)) field = t.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("K", cfg.train.K);
    get("epochs", cfg.train.epochs);
    get("lr", cfg.train.lr);
    get("decay", cfg.train.decay);
    get("lambda", cfg.train.lambda);
    get("beta", cfg.train.beta);
    get("gamma", cfg.train.gamma);
    get("alpha", cfg.train.alpha);
    get("sigma", cfg.train.sigma);
    get("hidden", cfg.train.hidden);
    get("batch", cfg.train.batch);
    get("tg_verbatim_sign", cfg.train.tg_verbatim_sign);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    if (m.contains("nav_gain_speed"))
      cfg.model.nav_gain_speed = m.at("nav_gain_speed").get<double>();
    if (m.contains("nav_gain_dist"))
      cfg.model.nav_gain_dist = m.at("nav_gain_dist").get<double>();
    if (m.contains("ignore_threshold"))
      cfg.model.ignore_threshold = m.at("ignore_threshold").get<double>();
    if (m.contains("learn_ignore"))
      cfg.model.learn_ignore = m.at("learn_ignore").get<bool>();
  }
  return cfg;
}

Method apply_ablations(Method method, bool no_nav, bool no_tg) {
  if (!no_nav && !no_tg) return method;
  if (method != Method::abm && method != Method::abm_no_nav &&
      method != Method::abm_no_tg && method != Method::abm_no_nav_no_tg)
    throw std::invalid_argument("ablation flags apply to abm methods only");
  const bool nav_off = no_nav || method == Method::abm_no_nav ||
                       method == Method::abm_no_nav_no_tg;
  const bool tg_off = no_tg || method == Method::abm_no_tg ||
                      method == Method::abm_no_nav_no_tg;
  if (nav_off && tg_off) return Method::abm_no_nav_no_tg;
  if (nav_off) return Method::abm_no_nav;
  if (tg_off) return Method::abm_no_tg;
  return Method::abm;
}

int cmd_simulate(SystemKind system, int trials, std::uint64_t seed,
                 const std::string& out_dir, const CliConfig& cfg) {
  if (trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");
  fs::create_directories(out_dir);
  json manifest;
  manifest["system"] = to_string(system);
  manifest["trials"] = trials;
  manifest["seed"] = seed;
  manifest["p"] = cfg.p;
  manifest["T"] = cfg.T;
  json seeds = json::array();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t world_seed = trial_world_seed(seed, t);
    seeds.push_back(world_seed);
    const TrialData trial = simulate_trial(system, cfg.p, cfg.T, world_seed);
    char name[64];
    std::snprintf(name, sizeof(name), "trial_%03d", t);
    const fs::path base = fs::path(out_dir) / name;
    if (system == SystemKind::kuramoto) {
      write_phase_csv(base.string() + ".csv", trial.series);
      write_truth_json(base.string() + "_truth.json", trial.truth, true);
    } else {
      write_trajectory_csv(base.string() + ".csv", trial.series);
      write_truth_json(base.string() + "_truth.json", trial.truth, false);
    }
  }
  manifest["trial_seeds"] = seeds;
  detail::open_out((fs::path(out_dir) / "manifest.json").string())
      << manifest.dump(2) << '\n';
  std::cout << "wrote " << trials << " trials to " << out_dir << "\n";
  return 0;
}

TrajectorySeries load_series(const std::string& input, bool phase, double dt) {
  return phase ? read_phase_csv(input, dt) : read_trajectory_csv(input, dt);
}

int cmd_train(SystemKind system, Method method, const std::string& input,
              bool phase, const std::string& truth_path,
              const std::string& out_dir, std::uint64_t seed, CliConfig cfg) {
  if (!method_trains(method))
    throw std::invalid_argument("train: method '" + to_string(method) +
                                "' has no trainable model");
  fs::create_directories(out_dir);
  const TrajectorySeries series = load_series(input, phase, cfg.dt);
  cfg.train.seed = seed;

  AbmModel model = make_model(system, method, series, cfg.train, cfg.model);
  std::vector<double> omega;
  if (model.spec.mode == FeatureMode::phase_coupling) {
    if (!truth_path.empty()) {
      omega = read_truth_json(truth_path).omega;
      if (static_cast<int>(omega.size()) != series.p)
        throw std::invalid_argument("train: omega size mismatch in " + truth_path);
    } else {
      // no intrinsic frequencies available: use each agent's mean rate
      omega.assign(series.p, 0.0);
      for (int i = 0; i < series.p; ++i) {
        for (int t = 0; t < series.T; ++t) omega[i] += series.at(t, i, 1);
        omega[i] /= series.T;
      }
    }
  }
  FeatureTable table = build_feature_table(
      series, model.spec,
      model.spec.mode == FeatureMode::phase_coupling ? &omega : nullptr);
  if (series.kind == SeriesKind::phase) standardize_table(table);
  const TrainResult result = train_model(model, table, cfg.train);

  write_checkpoint_json((fs::path(out_dir) / "checkpoint.json").string(), model);
  write_coefficients_csv((fs::path(out_dir) / "coefficients.csv").string(),
                         result.psi);
  write_loss_csv((fs::path(out_dir) / "loss_history.csv").string(),
                 result.history);
  std::cout << "final loss " << result.history.back().total << " (sigma "
            << result.sigma_used << ") over " << cfg.train.epochs << " epochs\n";
  return 0;
}

int cmd_infer(const std::string& coeffs_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const CoefficientTensor psi = read_coefficients_csv(coeffs_path);
  const GCMatrix gc = aggregate(psi);
  const CausalGraph binary = binarize(gc);
  write_gc_json((fs::path(out_dir) / "gc.json").string(), gc, binary);
  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), effect_trace(psi),
                  psi.K);
  std::cout << "wrote gc.json and trace.csv to " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& gc_path, const std::string& truth_path,
             const std::string& out_path, bool is_signed) {
  CausalGraph binary;
  const GCMatrix gc = read_gc_json(gc_path, binary);
  const GroundTruth truth = read_truth_json(truth_path);
  const MetricReport report = score_gc(gc, binary, truth, is_signed);
  const json j = report.to_json();
  if (!out_path.empty()) {
    fs::create_directories(fs::path(out_path).parent_path());
    detail::open_out(out_path) << j.dump(2) << '\n';
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_experiment(SystemKind system, Method method, int trials,
                   std::uint64_t seed, int jobs, const std::string& out_dir,
                   const CliConfig& cfg, bool dump_coeffs) {
  ExperimentSpec spec;
  spec.system = system;
  spec.method = method;
  spec.trials = trials;
  spec.p = cfg.p;
  spec.T = cfg.T;
  spec.seed = seed;
  spec.jobs = jobs;
  spec.out_dir = out_dir;
  spec.train = cfg.train;
  spec.model = cfg.model;
  spec.dump_coefficients = dump_coeffs;
  const Summary summary = run_experiment(spec);
  std::cout << "method " << to_string(method) << " over " << trials
            << " trials: ba " << summary.mean(&MetricReport::ba) << " +- "
            << summary.sd(&MetricReport::ba) << ", acc "
            << summary.mean(&MetricReport::acc) << ", auroc "
            << summary.mean(&MetricReport::auroc) << ", auprc "
            << summary.mean(&MetricReport::auprc) << "\n";
  for (std::size_t t = 0; t < summary.records.size(); ++t)
    if (!summary.records[t].ok)
      std::cerr << "trial " << t << " failed: " << summary.records[t].error
                << "\n";
  if (summary.failed > 0) {
    std::cerr << summary.failed << " trial(s) failed\n";
    return 2;
  }
  return 0;
}

int cmd_grid(SystemKind system, Method method, int val_trials,
             std::uint64_t seed, const std::string& out_path,
             const CliConfig& cfg) {
  const GridChoice choice = grid_search(system, method, val_trials, seed, cfg.p,
                                        cfg.T);
  json j;
  j["system"] = to_string(system);
  j["method"] = to_string(method);
  j["lambda"] = choice.lambda;
  j["beta"] = choice.beta;
  j["gamma"] = choice.gamma;
  j["score"] = choice.score;
  if (!out_path.empty()) detail::open_out(out_path) << j.dump(2) << '\n';
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze(const std::string& input, const std::string& out_dir,
                std::uint64_t seed, CliConfig cfg) {
  fs::create_directories(out_dir);
  if (cfg.fps <= 0.0) cfg.fps = 1.0 / cfg.dt;
  const TrajectorySeries series = load_series(input, false, cfg.dt);
  cfg.train.seed = seed;
  const AnalysisResult result =
      analyze_series(series, cfg.train, cfg.model, cfg.fps, cfg.bin_seconds);
  write_gc_json((fs::path(out_dir) / "gc.json").string(), result.gc,
                result.binary);
  write_coefficients_csv((fs::path(out_dir) / "coefficients.csv").string(),
                         result.training.psi);
  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), result.trace,
                  cfg.train.K);
  write_durations_csv((fs::path(out_dir) / "durations.csv").string(),
                      result.durations);
  write_loss_csv((fs::path(out_dir) / "loss_history.csv").string(),
                 result.training.history);
  std::cout << "analyzed " << input << " (" << series.p << " agents, "
            << series.T << " frames) -> " << out_dir << "\n";
  return 0;
}

// --- validate: schema checks over produced files ---

void validate_csv_header(const fs::path& path, const std::string& expected) {
  std::ifstream in = detail::open_in(path.string());
  std::string line;
  if (!std::getline(in, line) || line != expected)
    throw std::invalid_argument(path.string() + ": expected header '" +
                                expected + "'");
}

void require_keys(const json& j, const std::vector<std::string>& keys,
                  const fs::path& path) {
  for (const std::string& key : keys)
    if (!j.contains(key))
      throw std::invalid_argument(path.string() + ": missing key '" + key + "'");
}

int cmd_validate(const std::string& dir, double dt) {
  int checked = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& path = entry.path();
    const std::string name = path.filename().string();
    if (name == "manifest.json") {
      require_keys(json::parse(detail::open_in(path.string())),
                   {"system", "trials", "seed"}, path);
    } else if (name == "truth.json" || name.ends_with("_truth.json")) {
      read_truth_json(path.string());
    } else if (name == "gc.json") {
      CausalGraph binary;
      read_gc_json(path.string(), binary);
      binary.validate();
    } else if (name == "metrics.json") {
      require_keys(json::parse(detail::open_in(path.string())), {"acc", "ba"},
                   path);
    } else if (name == "summary.json") {
      require_keys(json::parse(detail::open_in(path.string())),
                   {"method", "trials", "ba_mean", "ba_sd"}, path);
    } else if (name == "checkpoint.json") {
      read_checkpoint_json(path.string());
    } else if (name == "chosen.json") {
      require_keys(json::parse(detail::open_in(path.string())),
                   {"lambda", "beta", "gamma"}, path);
    } else if (name == "coefficients.csv") {
      read_coefficients_csv(path.string());
    } else if (name == "trace.csv") {
      validate_csv_header(path, "t,i,j,value");
    } else if (name == "durations.csv") {
      validate_csv_header(path, "bin,sign,duration_seconds");
    } else if (name == "loss_history.csv") {
      validate_csv_header(path,
                          "epoch,prediction,sparsity,theory_guided,smoothing,total");
    } else if (name == "summary.csv") {
      validate_csv_header(
          path,
          "method,trials,failed,acc_mean,acc_sd,ba_mean,ba_sd,auroc_mean,"
          "auroc_sd,auprc_mean,auprc_sd,ba_pos_mean,ba_pos_sd,ba_neg_mean,"
          "ba_neg_sd");
    } else if (name.ends_with(".csv")) {
      std::ifstream in = detail::open_in(path.string());
      std::string header;
      std::getline(in, header);
      if (header == "frame,agent,phase")
        read_phase_csv(path.string(), dt);
      else if (header.rfind("frame,agent,x,y", 0) == 0)
        read_trajectory_csv(path.string(), dt);
      else
        continue;  // unrecognized csv, not ours to validate
    } else {
      continue;
    }
    ++checked;
  }
  std::cout << "validated " << checked << " files under " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signed Granger-causality toolkit for multi-agent trajectories"};
  app.require_subcommand(1);

  std::string system_str = "boid", method_str = "abm", config_path, out_dir;
  std::string input, truth_path, coeffs_path, gc_path, out_path, dir;
  int trials = 10, jobs = 1;
  std::uint64_t seed = 1;
  bool no_nav = false, no_tg = false, phase = false, dump_coeffs = false;
  bool unsigned_method = false;
  double dt_override = 0.0;

  auto add_common = [&](CLI::App* sub, bool with_method) {
    sub->add_option("--system", system_str, "kuramoto or boid");
    if (with_method)
      sub->add_option("--method", method_str,
                      "abm, abm_no_nav, abm_no_tg, abm_no_nav_no_tg, gvar, "
                      "linear_gc, local_te");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_flag("--no-navigation", no_nav, "drop the navigation signs");
    sub->add_flag("--no-tg", no_tg, "drop the no-interaction penalty");
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate synthetic trials");
  add_common(sim, false);
  sim->add_option("--trials", trials, "number of trials");
  sim->add_option("--out", out_dir, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train on one sequence");
  add_common(train, true);
  train->add_option("--input", input, "trajectory or phase CSV")->required();
  train->add_flag("--phase", phase, "input is a phase CSV");
  train->add_option("--truth", truth_path, "ground-truth JSON (for omega)");
  train->add_option("--dt", dt_override, "sampling interval in seconds");
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* infer = app.add_subcommand("infer", "aggregate coefficients");
  infer->add_option("--coeffs", coeffs_path, "coefficients.csv")->required();
  infer->add_option("--out", out_dir, "output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "score a gc.json against truth");
  eval->add_option("--gc", gc_path, "gc.json")->required();
  eval->add_option("--truth", truth_path, "ground-truth JSON")->required();
  eval->add_option("--out", out_path, "metrics.json path");
  eval->add_flag("--unsigned", unsigned_method, "method carries no signs");

  CLI::App* exp = app.add_subcommand("experiment", "replicated end-to-end run");
  add_common(exp, true);
  exp->add_option("--trials", trials, "number of trials");
  exp->add_option("--jobs", jobs, "concurrent trials");
  exp->add_option("--out", out_dir, "output directory");
  exp->add_flag("--dump-coeffs", dump_coeffs, "write coefficients.csv per trial");

  CLI::App* grid = app.add_subcommand("grid", "hyperparameter grid search");
  add_common(grid, true);
  grid->add_option("--trials", trials, "validation trials per cell");
  grid->add_option("--out", out_path, "chosen.json path");

  CLI::App* analyze = app.add_subcommand("analyze", "analyze a trajectory CSV");
  analyze->add_option("--input", input, "trajectory CSV")->required();
  analyze->add_option("--config", config_path, "JSON config file");
  analyze->add_option("--seed", seed, "training seed");
  analyze->add_option("--dt", dt_override, "sampling interval in seconds");
  analyze->add_option("--out", out_dir, "output directory")->required();
  analyze->add_flag("--no-navigation", no_nav, "drop the navigation signs");
  analyze->add_flag("--no-tg", no_tg, "drop the no-interaction penalty");

  CLI::App* validate = app.add_subcommand("validate", "schema-check output files");
  validate->add_option("--dir", dir, "directory to scan")->required();
  validate->add_option("--dt", dt_override, "sampling interval for CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const SystemKind system = parse_system(system_str);
    Method method = parse_method(method_str);
    method = apply_ablations(method, no_nav, no_tg);
    CliConfig cfg = load_config(config_path, system, method);
    if (dt_override > 0.0) cfg.dt = dt_override;
    if (sim->parsed()) return cmd_simulate(system, trials, seed, out_dir, cfg);
    if (train->parsed())
      return cmd_train(phase ? SystemKind::kuramoto : system, method, input,
                       phase, truth_path, out_dir, seed, cfg);
    if (infer->parsed()) return cmd_infer(coeffs_path, out_dir);
    if (eval->parsed())
      return cmd_eval(gc_path, truth_path, out_path, !unsigned_method);
    if (exp->parsed())
      return cmd_experiment(system, method, trials, seed, jobs, out_dir, cfg,
                            dump_coeffs);
    if (grid->parsed()) return cmd_grid(system, method, trials, seed, out_path, cfg);
    if (analyze->parsed()) return cmd_analyze(input, out_dir, seed, cfg);
    if (validate->parsed()) return cmd_validate(dir, dt_override > 0 ? dt_override : cfg.dt);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
