#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "abm/boid.hpp"
#include "abm/gc.hpp"
#include "abm/io.hpp"
#include "abm/kuramoto.hpp"
#include "abm/linear_gc.hpp"
#include "abm/local_te.hpp"
#include "abm/metrics.hpp"
#include "abm/model.hpp"
#include "abm/train.hpp"

namespace abm {

enum class SystemKind { kuramoto, boid };

enum class Method {
  abm,
  abm_no_nav,
  abm_no_tg,
  abm_no_nav_no_tg,
  gvar,
  linear_gc,
  local_te,
};

inline std::string to_string(SystemKind s) {
  return s == SystemKind::kuramoto ? "kuramoto" : "boid";
}

inline SystemKind parse_system(const std::string& s) {
  if (s == "kuramoto") return SystemKind::kuramoto;
  if (s == "boid") return SystemKind::boid;
  throw std::invalid_argument("unknown system '" + s + "'");
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::abm: return "abm";
    case Method::abm_no_nav: return "abm_no_nav";
    case Method::abm_no_tg: return "abm_no_tg";
    case Method::abm_no_nav_no_tg: return "abm_no_nav_no_tg";
    case Method::gvar: return "gvar";
    case Method::linear_gc: return "linear_gc";
    case Method::local_te: return "local_te";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::abm, Method::abm_no_nav, Method::abm_no_tg,
                   Method::abm_no_nav_no_tg, Method::gvar, Method::linear_gc,
                   Method::local_te})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method '" + s + "'");
}

inline bool method_is_signed(Method m) { return m != Method::local_te; }
inline bool method_trains(Method m) {
  return m != Method::linear_gc && m != Method::local_te;
}

/// Tuned defaults per system and method. Grid-search results on held-out
/// validation trials; the `grid` subcommand reproduces the selection.
inline TrainConfig default_train_config(SystemKind system, Method method) {
  TrainConfig cfg;
  if (system == SystemKind::boid) {
    cfg.K = 3;
    cfg.lambda = 0.1;
    cfg.beta = 0.0025;
    cfg.gamma = 100.0;
  } else {
    cfg.K = 5;
    cfg.lambda = 0.01;
    cfg.beta = 0.0025;
    cfg.gamma = 1.0;
  }
  if (method == Method::abm_no_tg || method == Method::abm_no_nav_no_tg ||
      method == Method::gvar)
    cfg.gamma = 0.0;
  return cfg;
}

/// Hyperparameter search ranges (log-spaced candidates over the
/// documented intervals).
inline std::vector<double> grid_lambda(SystemKind system) {
  if (system == SystemKind::boid) return {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
  return {0.0, 0.001, 0.01, 0.1};
}
inline std::vector<double> grid_beta(SystemKind) {
  return {0.0, 0.0025, 0.025};
}
inline std::vector<double> grid_gamma(SystemKind system) {
  if (system == SystemKind::boid) return {1.0, 10.0, 100.0, 1000.0, 10000.0};
  return {0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0};
}

struct TrialData {
  TrajectorySeries series;
  GroundTruth truth;
};

/// Simulates one trial with its own generator stream.
inline TrialData simulate_trial(SystemKind system, int p, int T,
                                std::uint64_t seed) {
  Rng rng(seed);
  TrialData trial;
  if (system == SystemKind::kuramoto) {
    const KuramotoSystem sys = sample_system(p, rng);
    trial.series = simulate(sys, T);
    trial.truth.graph = kuramoto_truth(sys);
    trial.truth.omega = sys.omega;
  } else {
    const BoidWorld world = sample_world(p, rng);
    trial.series = simulate(world, T);
    trial.truth.graph = world.relations;
  }
  return trial;
}

struct MetricReport {
  double acc = 0.0, ba = 0.0, ba_pos = 0.0, ba_neg = 0.0;
  double auroc = 0.0, auprc = 0.0;
  bool has_ranking = false;  // false when the truth is single-class
  bool is_signed = true;

  json to_json() const {
    json j;
    j["acc"] = acc;
    j["ba"] = ba;
    if (is_signed) {
      j["ba_pos"] = ba_pos;
      j["ba_neg"] = ba_neg;
    }
    if (has_ranking) {
      j["auroc"] = auroc;
      j["auprc"] = auprc;
    }
    return j;
  }
};

inline MetricReport score_gc(const GCMatrix& gc, const CausalGraph& binary,
                             const GroundTruth& truth, bool is_signed) {
  MetricReport report;
  report.is_signed = is_signed;
  const ThresholdedMetrics tm = accuracy_metrics(binary, truth.graph);
  report.acc = tm.acc;
  report.ba = tm.ba;
  report.ba_pos = tm.ba_pos;
  report.ba_neg = tm.ba_neg;
  std::vector<double> scores;
  std::vector<int> labels;
  ranking_inputs(gc.magnitude, truth.graph, scores, labels);
  bool has_pos = false, has_neg = false;
  for (int y : labels) (y != 0 ? has_pos : has_neg) = true;
  if (has_pos && has_neg) {
    report.auroc = auroc(scores, labels);
    report.auprc = auprc(scores, labels);
    report.has_ranking = true;
  }
  return report;
}

/// Model wiring knobs that sit outside TrainConfig.
struct ModelOptions {
  double nav_gain_speed = 1e-2;
  double nav_gain_dist = 1e-6;
  double ignore_threshold = 0.0;
  bool learn_ignore = false;
};

inline AbmModel make_model(SystemKind system, Method method,
                           const TrajectorySeries& series, const TrainConfig& cfg,
                           const ModelOptions& opts) {
  if (!method_trains(method))
    throw std::invalid_argument("make_model: method has no trainable model");
  FeatureSpec spec;
  ModelMode mode = ModelMode::full;
  if (method == Method::gvar) {
    const int d_out = system == SystemKind::kuramoto ? 1 : series.spatial_dims();
    const int state_dim = system == SystemKind::kuramoto ? 1 : series.d;
    spec = FeatureSpec::raw_state(series.p, state_dim, d_out);
    mode = ModelMode::gvar;
  } else if (system == SystemKind::kuramoto) {
    spec = FeatureSpec::phase_coupling(series.p);
    mode = method == Method::abm_no_nav || method == Method::abm_no_nav_no_tg
               ? ModelMode::no_navigation
               : ModelMode::full;
  } else {
    spec = FeatureSpec::interaction(series.p, series.spatial_dims());
    mode = method == Method::abm_no_nav || method == Method::abm_no_nav_no_tg
               ? ModelMode::no_navigation
               : ModelMode::full;
  }
  AbmModel model(spec, mode, cfg.K, cfg.seed, cfg.hidden);
  model.nav_gain_speed = opts.nav_gain_speed;
  model.nav_gain_dist = opts.nav_gain_dist;
  model.ignore_threshold = opts.ignore_threshold;
  model.learn_ignore = opts.learn_ignore;
  return model;
}

struct TrialResult {
  GCMatrix gc{0};
  CausalGraph binary;
  MetricReport report;
  std::optional<TrainResult> training;
  std::optional<CoefficientTensor> psi;
};

/// Runs one method on one trial: train (when the method trains), aggregate,
/// binarize, score.
inline TrialResult run_method_on_trial(SystemKind system, Method method,
                                       const TrialData& trial,
                                       const TrainConfig& cfg,
                                       const ModelOptions& opts = {},
                                       bool keep_coefficients = false) {
  TrialResult out;
  if (method == Method::linear_gc) {
    auto [var, gc] = fit_linear_gc(trial.series, cfg.K);
    out.gc = std::move(gc);
  } else if (method == Method::local_te) {
    auto [est, gc] = local_te(trial.series);
    out.gc = std::move(gc);
  } else {
    AbmModel model = make_model(system, method, trial.series, cfg, opts);
    const std::vector<double>* omega =
        model.spec.mode == FeatureMode::phase_coupling ? &trial.truth.omega
                                                       : nullptr;
    FeatureTable table = build_feature_table(trial.series, model.spec, omega);
    if (trial.series.kind == SeriesKind::phase) standardize_table(table);
    TrainResult tr = train_model(model, table, cfg);
    out.gc = aggregate(tr.psi);
    if (keep_coefficients) out.psi = tr.psi;
    out.training = std::move(tr);
  }
  out.binary = binarize(out.gc);
  out.report = score_gc(out.gc, out.binary, trial.truth, method_is_signed(method));
  return out;
}

struct ExperimentSpec {
  SystemKind system = SystemKind::boid;
  Method method = Method::abm;
  int trials = 10;
  int p = 5;
  int T = 200;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir;
  TrainConfig train;  // seed field is repopulated per trial
  ModelOptions model;
  bool write_files = true;
  bool dump_coefficients = false;
};

inline ExperimentSpec make_experiment_spec(SystemKind system, Method method) {
  ExperimentSpec spec;
  spec.system = system;
  spec.method = method;
  spec.train = default_train_config(system, method);
  return spec;
}

struct TrialRecord {
  bool ok = false;
  std::string error;
  MetricReport report;
};

struct Summary {
  std::vector<TrialRecord> records;
  int failed = 0;
  double mean(double MetricReport::* field) const {
    double acc = 0.0;
    int n = 0;
    for (const TrialRecord& r : records)
      if (r.ok) {
        acc += r.report.*field;
        ++n;
      }
    return n > 0 ? acc / n : 0.0;
  }
  double sd(double MetricReport::* field) const {
    const double mu = mean(field);
    double acc = 0.0;
    int n = 0;
    for (const TrialRecord& r : records)
      if (r.ok) {
        const double diff = r.report.*field - mu;
        acc += diff * diff;
        ++n;
      }
    return n > 1 ? std::sqrt(acc / (n - 1)) : 0.0;
  }
};

inline std::uint64_t trial_world_seed(std::uint64_t master, int trial) {
  return Rng::derive(master, static_cast<std::uint64_t>(trial) * 2);
}
inline std::uint64_t trial_train_seed(std::uint64_t master, int trial) {
  return Rng::derive(master, static_cast<std::uint64_t>(trial) * 2 + 1);
}

inline void write_summary_files(const std::string& dir, const ExperimentSpec& spec,
                                const Summary& summary) {
  namespace fs = std::filesystem;
  json manifest;
  manifest["system"] = to_string(spec.system);
  manifest["method"] = to_string(spec.method);
  manifest["trials"] = spec.trials;
  manifest["p"] = spec.p;
  manifest["T"] = spec.T;
  manifest["seed"] = spec.seed;
  json seeds = json::array();
  for (int t = 0; t < spec.trials; ++t) {
    json s;
    s["world"] = trial_world_seed(spec.seed, t);
    s["train"] = trial_train_seed(spec.seed, t);
    seeds.push_back(s);
  }
  manifest["trial_seeds"] = seeds;
  manifest["train"] = {
      {"K", spec.train.K},         {"epochs", spec.train.epochs},
      {"lr", spec.train.lr},       {"decay", spec.train.decay},
      {"lambda", spec.train.lambda}, {"beta", spec.train.beta},
      {"gamma", spec.train.gamma}, {"alpha", spec.train.alpha},
      {"sigma", spec.train.sigma}, {"hidden", spec.train.hidden},
      {"batch", spec.train.batch},
      {"tg_verbatim_sign", spec.train.tg_verbatim_sign}};
  detail::open_out((fs::path(dir) / "manifest.json").string())
      << manifest.dump(2) << '\n';

  json jsummary;
  jsummary["method"] = to_string(spec.method);
  jsummary["trials"] = spec.trials;
  jsummary["failed"] = summary.failed;
  auto put = [&](const char* name, double MetricReport::* f) {
    jsummary[std::string(name) + "_mean"] = summary.mean(f);
    jsummary[std::string(name) + "_sd"] = summary.sd(f);
  };
  put("acc", &MetricReport::acc);
  put("ba", &MetricReport::ba);
  put("auroc", &MetricReport::auroc);
  put("auprc", &MetricReport::auprc);
  if (method_is_signed(spec.method)) {
    put("ba_pos", &MetricReport::ba_pos);
    put("ba_neg", &MetricReport::ba_neg);
  }
  detail::open_out((fs::path(dir) / "summary.json").string())
      << jsummary.dump(2) << '\n';

  std::ofstream csv = detail::open_out((fs::path(dir) / "summary.csv").string());
  csv << "method,trials,failed,acc_mean,acc_sd,ba_mean,ba_sd,auroc_mean,auroc_sd,"
         "auprc_mean,auprc_sd,ba_pos_mean,ba_pos_sd,ba_neg_mean,ba_neg_sd\n";
  csv << to_string(spec.method) << ',' << spec.trials << ',' << summary.failed;
  auto put_csv = [&](double MetricReport::* f, bool present) {
    if (present)
      csv << ',' << detail::fmt_double(summary.mean(f)) << ','
          << detail::fmt_double(summary.sd(f));
    else
      csv << ",,";
  };
  put_csv(&MetricReport::acc, true);
  put_csv(&MetricReport::ba, true);
  put_csv(&MetricReport::auroc, true);
  put_csv(&MetricReport::auprc, true);
  put_csv(&MetricReport::ba_pos, method_is_signed(spec.method));
  put_csv(&MetricReport::ba_neg, method_is_signed(spec.method));
  csv << '\n';
}

/// Runs the full per-trial pipeline (simulate, train, aggregate, binarize,
/// score) for every trial and aggregates mean and SD. Failures are
/// recorded per trial and leave the summary intact. Trials run
/// concurrently up to spec.jobs; outputs are written per trial, so the
/// result does not depend on scheduling.
inline Summary run_experiment(const ExperimentSpec& spec) {
  namespace fs = std::filesystem;
  if (spec.trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");
  if (!spec.out_dir.empty()) fs::create_directories(spec.out_dir);

  Summary summary;
  summary.records.resize(spec.trials);

  auto run_one = [&](int t) {
    TrialRecord& record = summary.records[t];
    try {
      const TrialData trial = simulate_trial(spec.system, spec.p, spec.T,
                                             trial_world_seed(spec.seed, t));
      TrainConfig cfg = spec.train;
      cfg.seed = trial_train_seed(spec.seed, t);
      const TrialResult result = run_method_on_trial(
          spec.system, spec.method, trial, cfg, spec.model,
          spec.dump_coefficients);
      record.ok = true;
      record.report = result.report;
      if (!spec.out_dir.empty() && spec.write_files) {
        const fs::path dir = fs::path(spec.out_dir) /
                             ("trial_" + std::to_string(t));
        fs::create_directories(dir);
        if (spec.system == SystemKind::kuramoto) {
          write_phase_csv((dir / "trajectory.csv").string(), trial.series);
          write_truth_json((dir / "truth.json").string(), trial.truth, true);
        } else {
          write_trajectory_csv((dir / "trajectory.csv").string(), trial.series);
          write_truth_json((dir / "truth.json").string(), trial.truth, false);
        }
        write_gc_json((dir / "gc.json").string(), result.gc, result.binary);
        detail::open_out((dir / "metrics.json").string())
            << result.report.to_json().dump(2) << '\n';
        if (result.training)
          write_loss_csv((dir / "loss_history.csv").string(),
                         result.training->history);
        if (result.psi)
          write_coefficients_csv((dir / "coefficients.csv").string(), *result.psi);
      }
    } catch (const std::exception& e) {
      record.ok = false;
      record.error = e.what();
    }
  };

  const int jobs = std::max(1, spec.jobs);
  if (jobs == 1) {
    for (int t = 0; t < spec.trials; ++t) run_one(t);
  } else {
    for (int base = 0; base < spec.trials; base += jobs) {
      std::vector<std::thread> pool;
      for (int t = base; t < std::min(base + jobs, spec.trials); ++t)
        pool.emplace_back(run_one, t);
      for (std::thread& th : pool) th.join();
    }
  }
  for (const TrialRecord& r : summary.records)
    if (!r.ok) ++summary.failed;

  if (!spec.out_dir.empty() && spec.write_files)
    write_summary_files(spec.out_dir, spec, summary);
  return summary;
}

struct GridChoice {
  double lambda = 0.0, beta = 0.0, gamma = 0.0;
  double score = 0.0;  // mean balanced accuracy on validation trials
};

/// Scores every (lambda, beta, gamma) cell on freshly simulated validation
/// trials and keeps the best mean balanced accuracy (ties keep the first,
/// i.e. the sparser candidate order). Methods without a TG term skip the
/// gamma axis.
inline GridChoice grid_search(SystemKind system, Method method, int val_trials,
                              std::uint64_t seed, int p = 5, int T = 200,
                              std::vector<double> lambdas = {},
                              std::vector<double> betas = {},
                              std::vector<double> gammas = {}) {
  if (!method_trains(method))
    throw std::invalid_argument("grid_search: method has no hyperparameters");
  if (lambdas.empty()) lambdas = grid_lambda(system);
  if (betas.empty()) betas = grid_beta(system);
  if (gammas.empty()) gammas = grid_gamma(system);
  const bool uses_tg = method == Method::abm || method == Method::abm_no_nav;
  if (!uses_tg) gammas = {0.0};

  std::vector<TrialData> trials;
  trials.reserve(val_trials);
  for (int t = 0; t < val_trials; ++t)
    trials.push_back(simulate_trial(system, p, T,
                                    Rng::derive(seed, 1000003 + t)));

  GridChoice best;
  bool first = true;
  for (double lambda : lambdas)
    for (double beta : betas)
      for (double gamma : gammas) {
        double acc = 0.0;
        int n = 0;
        for (int t = 0; t < val_trials; ++t) {
          TrainConfig cfg = default_train_config(system, method);
          cfg.lambda = lambda;
          cfg.beta = beta;
          cfg.gamma = gamma;
          cfg.seed = Rng::derive(seed, 2000003 + t);
          try {
            const TrialResult r =
                run_method_on_trial(system, method, trials[t], cfg);
            acc += r.report.ba;
            ++n;
          } catch (const std::exception&) {
            // failed cell: counts as zero
          }
        }
        const double score = n > 0 ? acc / n : 0.0;
        if (first || score > best.score) {
          best = GridChoice{lambda, beta, gamma, score};
          first = false;
        }
      }
  return best;
}

/// Full analysis of one sequence: train, aggregate, binarize, trace and
/// binned interaction durations.
struct AnalysisResult {
  TrainResult training;
  GCMatrix gc{0};
  CausalGraph binary;
  EffectTrace trace;
  std::vector<DurationBin> durations;
};

inline AnalysisResult analyze_series(const TrajectorySeries& series,
                                     const TrainConfig& cfg,
                                     const ModelOptions& opts, double fps,
                                     double bin_seconds) {
  AnalysisResult out;
  const FeatureSpec spec = FeatureSpec::interaction(series.p, series.spatial_dims());
  AbmModel model(spec, ModelMode::full, cfg.K, cfg.seed, cfg.hidden);
  model.nav_gain_speed = opts.nav_gain_speed;
  model.nav_gain_dist = opts.nav_gain_dist;
  model.ignore_threshold = opts.ignore_threshold;
  model.learn_ignore = opts.learn_ignore;
  const FeatureTable table = build_feature_table(series, spec);
  out.training = train_model(model, table, cfg);
  out.gc = aggregate(out.training.psi);
  out.binary = binarize(out.gc);
  out.trace = effect_trace(out.training.psi);
  out.durations = interaction_durations(out.trace, fps, bin_seconds);
  return out;
}

}  // namespace abm
