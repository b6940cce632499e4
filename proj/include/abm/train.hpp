#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "abm/cholesky.hpp"
#include "abm/features.hpp"
#include "abm/loss.hpp"
#include "abm/mlp.hpp"
#include "abm/model.hpp"

namespace abm {

/// Training hyperparameters. sigma <= 0 resolves to the median squared
/// no-interaction residual of the training steps. batch = 0 runs full
/// batch (one optimizer step per epoch); a positive batch takes
/// sequential chunks of that many windows per step.
struct TrainConfig {
  int K = 3;
  int epochs = 500;
  double lr = 1e-4;
  double decay = 0.995;
  double lambda = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double alpha = 0.5;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  int hidden = 50;
  int batch = 0;
  bool tg_verbatim_sign = false;
  bool warm_start = true;  // seed output biases at the linearized ridge fit
};

struct TrainResult {
  CoefficientTensor psi;
  std::vector<LossBreakdown> history;  // one entry per epoch, pre-update
  double sigma_used = 0.0;
};

namespace detail {

/// All per-epoch buffers for the fused forward/backward pass. Windows
/// 0..count-2 carry the prediction, sparsity and no-interaction terms;
/// the final window exists so the last smoothing pair has its t+1 side.
struct Trainer {
  const AbmModel& model;
  const FeatureTable& table;
  const TrainConfig& cfg;
  int count;        // T - K windows
  int train_count;  // count - 1
  std::size_t slice;  // d_out * d_h
  bool nav;

  std::vector<double> signs_all;   // [T][p][p-1]
  std::vector<double> raw;         // mlp outputs   [count][p][K][slice]
  std::vector<double> psi;         // signed coeffs [count][p][K][slice]
  std::vector<double> hidden;      // [count][p][K][hidden]
  std::vector<double> xhat;        // [train_count][p][d_out]
  std::vector<double> gpsi;        // gradient wrt psi
  std::vector<double> weights;     // tg weight per window
  double sigma = 0.0;

  Trainer(const AbmModel& m, const FeatureTable& t, const TrainConfig& c)
      : model(m), table(t), cfg(c) {
    count = table.T - model.K;
    train_count = count - 1;
    slice = static_cast<std::size_t>(model.spec.d_out) * model.spec.d_h;
    nav = model.navigation_active();
    const int p = model.spec.p;
    const std::size_t per_window = static_cast<std::size_t>(p) * model.K * slice;
    raw.assign(static_cast<std::size_t>(count) * per_window, 0.0);
    psi.assign(static_cast<std::size_t>(count) * per_window, 0.0);
    gpsi.assign(static_cast<std::size_t>(count) * per_window, 0.0);
    hidden.assign(static_cast<std::size_t>(count) * p * model.K * model.hidden, 0.0);
    xhat.assign(static_cast<std::size_t>(train_count) * p * model.spec.d_out, 0.0);
    if (nav) signs_all.assign(static_cast<std::size_t>(table.T) * p * (p - 1), 1.0);
    resolve_sigma();
    weights.assign(train_count, 1.0);
    for (int m2 = 0; m2 < train_count; ++m2)
      weights[m2] = tg_weight(table.residual2[m2 + model.K], sigma,
                              cfg.tg_verbatim_sign);
  }

  void resolve_sigma() {
    if (cfg.sigma > 0.0) {
      sigma = cfg.sigma;
      return;
    }
    std::vector<double> r2(train_count);
    for (int m = 0; m < train_count; ++m) r2[m] = table.residual2[m + model.K];
    std::sort(r2.begin(), r2.end());
    sigma = train_count > 0 ? r2[(train_count - 1) / 2] : 0.0;
    if (sigma <= 0.0) sigma = 1e-12;
  }

  std::size_t slice_base(int m, int i, int k_row) const {
    return ((static_cast<std::size_t>(m) * model.spec.p + i) * model.K + k_row) *
           slice;
  }
  std::size_t hidden_base(int m, int i, int k_row) const {
    return ((static_cast<std::size_t>(m) * model.spec.p + i) * model.K + k_row) *
           model.hidden;
  }
  int feature_step(int m, int k_row) const { return m + model.K - 1 - k_row; }

  double sign_at(int t, int i, int r) const {
    return signs_all[(static_cast<std::size_t>(t) * model.spec.p + i) *
                         (model.spec.p - 1) +
                     r];
  }

  void compute_signs() {
    const int p = model.spec.p;
    for (int t = 0; t < table.T; ++t)
      for (int i = 0; i < p; ++i) {
        const double* ar = table.approach_row(t, i);
        const double* dr = table.distance_row(t, i);
        double* srow =
            &signs_all[(static_cast<std::size_t>(t) * p + i) * (p - 1)];
        for (int r = 0; r < p - 1; ++r)
          srow[r] = navigation_sign_one(ar[r], dr[r], model.nav_gain_speed,
                                        model.nav_gain_dist,
                                        model.ignore_threshold);
      }
  }

  void forward() {
    const int p = model.spec.p;
    const int d_out = model.spec.d_out;
    const int d_h = model.spec.d_h;
    std::fill(xhat.begin(), xhat.end(), 0.0);
    MlpCache cache;
    for (int m = 0; m < count; ++m)
      for (int i = 0; i < p; ++i)
        for (int k_row = 0; k_row < model.K; ++k_row) {
          const int u = feature_step(m, k_row);
          const double* f = table.feature_row(u, i);
          mlp_forward(model.mlp(i, k_row), f, cache);
          double* rawp = &raw[slice_base(m, i, k_row)];
          double* psip = &psi[slice_base(m, i, k_row)];
          std::copy(cache.out.begin(), cache.out.end(), rawp);
          std::copy(cache.hidden.begin(), cache.hidden.end(),
                    &hidden[hidden_base(m, i, k_row)]);
          std::copy(cache.out.begin(), cache.out.end(), psip);
          if (nav) {
            for (int uo = 0; uo < d_out; ++uo) {
              double* row = psip + static_cast<std::size_t>(uo) * d_h;
              for (int r = 0; r < p - 1; ++r) {
                const double s = sign_at(u, i, r);
                const int col = model.spec.self_width + model.spec.other_width * r;
                for (int q = 0; q < model.spec.other_width; ++q) row[col + q] *= s;
              }
            }
          }
          if (m < train_count) {
            double* xh = &xhat[(static_cast<std::size_t>(m) * p + i) * d_out];
            for (int uo = 0; uo < d_out; ++uo) {
              const double* row = psip + static_cast<std::size_t>(uo) * d_h;
              double acc = 0.0;
              for (int q = 0; q < d_h; ++q) acc += row[q] * f[q];
              xh[uo] += acc;
            }
          }
        }
  }

  /// Loss over a window range [lo, hi) of training windows; smoothing runs
  /// over pairs (m, m+1) for m in [lo, min(hi, count-1)).
  LossBreakdown loss_range(int lo, int hi) const {
    const int p = model.spec.p;
    const int d_out = model.spec.d_out;
    LossBreakdown lb;
    const int n = hi - lo;
    double pred = 0.0, sp = 0.0, tg = 0.0, sm = 0.0;
    const std::size_t per_window = static_cast<std::size_t>(p) * model.K * slice;
    for (int m = lo; m < hi; ++m) {
      for (int i = 0; i < p; ++i)
        for (int uo = 0; uo < d_out; ++uo) {
          const double diff =
              xhat[(static_cast<std::size_t>(m) * p + i) * d_out + uo] -
              table.target_at(m + model.K, i, uo);
          pred += diff * diff;
        }
      const double* base = &psi[static_cast<std::size_t>(m) * per_window];
      double l1 = 0.0, sq = 0.0, sqp = 0.0;
      for (int i = 0; i < p; ++i)
        for (int k_row = 0; k_row < model.K; ++k_row) {
          const double* sl = base + (static_cast<std::size_t>(i) * model.K + k_row) * slice;
          for (int uo = 0; uo < d_out; ++uo) {
            const double* row = sl + static_cast<std::size_t>(uo) * model.spec.d_h;
            for (int q = 0; q < model.spec.d_h; ++q) {
              const double v = row[q];
              l1 += std::abs(v);
              sq += v * v;
              if (q >= model.spec.self_width) sqp += v * v;
            }
          }
        }
      sp += cfg.alpha * l1 + (1.0 - cfg.alpha) * sq;
      tg += weights[m] * sqp;
    }
    const int pair_hi = std::min(hi, count - 1);
    int pairs = 0;
    for (int m = lo; m < pair_hi; ++m) {
      const double* a = &psi[static_cast<std::size_t>(m) * per_window];
      const double* b = &psi[(static_cast<std::size_t>(m) + 1) * per_window];
      for (std::size_t idx = 0; idx < per_window; ++idx) {
        const double diff = b[idx] - a[idx];
        sm += diff * diff;
      }
      ++pairs;
    }
    lb.prediction = n > 0 ? pred / (static_cast<double>(n) * p * d_out) : 0.0;
    lb.sparsity = n > 0 ? sp / n : 0.0;
    lb.theory_guided = n > 0 ? tg / n : 0.0;
    lb.smoothing = pairs > 0 ? sm / pairs : 0.0;
    lb.finalize(cfg.lambda, cfg.gamma, cfg.beta);
    return lb;
  }

  /// Fills gpsi for the window range; window pair_hi participates through
  /// its smoothing pair only.
  void gradient_wrt_psi(int lo, int hi) {
    const int p = model.spec.p;
    const int d_out = model.spec.d_out;
    const int d_h = model.spec.d_h;
    const std::size_t per_window = static_cast<std::size_t>(p) * model.K * slice;
    std::fill(gpsi.begin(), gpsi.end(), 0.0);
    const int n = hi - lo;
    if (n <= 0) return;
    const double pred_scale = 2.0 / (static_cast<double>(n) * p * d_out);
    const double sp_scale = cfg.lambda / n;
    const double tg_scale = cfg.gamma / n;
    for (int m = lo; m < hi; ++m) {
      for (int i = 0; i < p; ++i) {
        const double* xh = &xhat[(static_cast<std::size_t>(m) * p + i) * d_out];
        for (int k_row = 0; k_row < model.K; ++k_row) {
          const int u = feature_step(m, k_row);
          const double* f = table.feature_row(u, i);
          double* g = &gpsi[slice_base(m, i, k_row)];
          const double* ps = &psi[slice_base(m, i, k_row)];
          for (int uo = 0; uo < d_out; ++uo) {
            const double e =
                pred_scale * (xh[uo] - table.target_at(m + model.K, i, uo));
            double* grow = g + static_cast<std::size_t>(uo) * d_h;
            const double* prow = ps + static_cast<std::size_t>(uo) * d_h;
            for (int q = 0; q < d_h; ++q) {
              double acc = e * f[q];
              const double v = prow[q];
              const double sgn = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
              acc += sp_scale * (cfg.alpha * sgn + 2.0 * (1.0 - cfg.alpha) * v);
              if (q >= model.spec.self_width)
                acc += tg_scale * weights[m] * 2.0 * v;
              grow[q] += acc;
            }
          }
        }
      }
    }
    const int pair_hi = std::min(hi, count - 1);
    int pairs = pair_hi - lo;
    if (pairs > 0 && cfg.beta != 0.0) {
      const double sm_scale = 2.0 * cfg.beta / pairs;
      for (int m = lo; m < pair_hi; ++m) {
        double* ga = &gpsi[static_cast<std::size_t>(m) * per_window];
        double* gb = &gpsi[(static_cast<std::size_t>(m) + 1) * per_window];
        const double* a = &psi[static_cast<std::size_t>(m) * per_window];
        const double* b = &psi[(static_cast<std::size_t>(m) + 1) * per_window];
        for (std::size_t idx = 0; idx < per_window; ++idx) {
          const double diff = sm_scale * (b[idx] - a[idx]);
          gb[idx] += diff;
          ga[idx] -= diff;
        }
      }
    }
  }

  /// Backpropagates gpsi into parameter gradients. Covers windows
  /// [lo, hi_incl) where hi_incl includes the smoothing-only final window.
  void backward(int lo, int hi_incl, std::vector<MlpGrads>& grads,
                double& thr_grad) {
    const int p = model.spec.p;
    const int d_out = model.spec.d_out;
    const int d_h = model.spec.d_h;
    std::vector<double> scratch;
    for (int m = lo; m < hi_incl; ++m)
      for (int i = 0; i < p; ++i)
        for (int k_row = 0; k_row < model.K; ++k_row) {
          const int u = feature_step(m, k_row);
          const double* f = table.feature_row(u, i);
          double* g = &gpsi[slice_base(m, i, k_row)];
          const double* rw = &raw[slice_base(m, i, k_row)];
          if (nav) {
            if (model.learn_ignore) {
              const double* ar = table.approach_row(u, i);
              const double* dr = table.distance_row(u, i);
              for (int r = 0; r < p - 1; ++r) {
                double ds = 0.0;
                const int col = model.spec.self_width + model.spec.other_width * r;
                for (int uo = 0; uo < d_out; ++uo)
                  for (int q = 0; q < model.spec.other_width; ++q) {
                    const std::size_t idx =
                        static_cast<std::size_t>(uo) * d_h + col + q;
                    ds += g[idx] * rw[idx];
                  }
                thr_grad += ds * navigation_sign_dthreshold(
                                     ar[r], dr[r], model.nav_gain_speed,
                                     model.nav_gain_dist, model.ignore_threshold);
              }
            }
            for (int uo = 0; uo < d_out; ++uo) {
              double* grow = g + static_cast<std::size_t>(uo) * d_h;
              for (int r = 0; r < p - 1; ++r) {
                const double s = sign_at(u, i, r);
                const int col = model.spec.self_width + model.spec.other_width * r;
                for (int q = 0; q < model.spec.other_width; ++q)
                  grow[col + q] *= s;
              }
            }
          }
          mlp_backward_scratch(model.mlp(i, k_row), f,
                               &hidden[hidden_base(m, i, k_row)], g,
                               grads[static_cast<std::size_t>(i) * model.K + k_row],
                               scratch);
        }
  }
};

}  // namespace detail

/// Extracts the coefficient tensor over every window with the model's
/// current parameters. When the table was standardized for training, the
/// coefficients are mapped back to raw units
/// (psi_raw = psi_std * target_sd / feature_sd), so downstream aggregation
/// reads physical coefficients; constant columns carry no information and
/// map to zero.
inline CoefficientTensor extract_coefficients(const AbmModel& model,
                                              const FeatureTable& table) {
  CoefficientTensor tensor;
  tensor.spec = model.spec;
  tensor.K = model.K;
  tensor.count = table.T - model.K;
  tensor.psi.assign(static_cast<std::size_t>(tensor.count) * model.spec.p *
                        model.K * tensor.slice_size(),
                    0.0);
  MlpCache cache;
  const int p = model.spec.p;
  const int d_h = model.spec.d_h;
  const int d_out = model.spec.d_out;
  for (int m = 0; m < tensor.count; ++m)
    for (int i = 0; i < p; ++i)
      for (int k_row = 0; k_row < model.K; ++k_row) {
        const int u = m + model.K - 1 - k_row;
        const double* f = table.feature_row(u, i);
        mlp_forward(model.mlp(i, k_row), f, cache);
        double* out = &tensor.psi[tensor.index(m, i, k_row)];
        std::copy(cache.out.begin(), cache.out.end(), out);
        if (model.navigation_active()) {
          const std::vector<double> s =
              model.signs(table.approach_row(u, i), table.distance_row(u, i));
          model.apply_signs(s, out);
        }
        (void)d_out;
      }
  return tensor;
}

/// Full-batch (or sequential-chunk) gradient descent with Adam and
/// per-epoch learning-rate decay. Deterministic given (model seed, data,
/// config). Throws if the loss leaves the finite range.
inline TrainResult train_model(AbmModel& model, const FeatureTable& table,
                               const TrainConfig& cfg) {
  if (table.T < model.K + 2)
    throw std::invalid_argument("train_model: series shorter than K+2");
  if (cfg.lambda < 0.0 || cfg.beta < 0.0 || cfg.gamma < 0.0)
    throw std::invalid_argument("train_model: penalty weights must be >= 0");

  detail::Trainer tr(model, table, cfg);

  std::vector<MlpGrads> grads;
  grads.reserve(model.mlps.size());
  for (const Mlp& m : model.mlps) grads.emplace_back(m);
  double thr_grad = 0.0;

  ParamView view;
  for (std::size_t idx = 0; idx < model.mlps.size(); ++idx) {
    view.add(model.mlps[idx].w1, grads[idx].w1);
    view.add(model.mlps[idx].b1, grads[idx].b1);
    view.add(model.mlps[idx].w2, grads[idx].w2);
    view.add(model.mlps[idx].b2, grads[idx].b2);
  }
  if (model.learn_ignore && model.navigation_active())
    view.add_scalar(&model.ignore_threshold, &thr_grad);

  AdamState adam(view.total());
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.decay = cfg.decay;

  TrainResult result;
  result.sigma_used = tr.sigma;
  result.history.reserve(cfg.epochs);

  const int batch = cfg.batch > 0 ? std::min(cfg.batch, tr.train_count)
                                  : tr.train_count;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (tr.nav && (epoch == 0 || model.learn_ignore)) tr.compute_signs();
    LossBreakdown epoch_loss;
    bool first_chunk = true;
    for (int lo = 0; lo < tr.train_count; lo += batch) {
      const int hi = std::min(lo + batch, tr.train_count);
      tr.forward();
      const LossBreakdown lb = tr.loss_range(lo, hi);
      if (!std::isfinite(lb.total))
        throw std::runtime_error(
            "train_model: non-finite loss at epoch " + std::to_string(epoch) +
            " (prediction=" + std::to_string(lb.prediction) +
            ", sparsity=" + std::to_string(lb.sparsity) +
            ", theory_guided=" + std::to_string(lb.theory_guided) +
            ", smoothing=" + std::to_string(lb.smoothing) + ")");
      if (first_chunk) {
        epoch_loss = lb;
        first_chunk = false;
      }
      tr.gradient_wrt_psi(lo, hi);
      for (MlpGrads& g : grads) g.zero();
      thr_grad = 0.0;
      const int hi_incl = std::min(hi + 1, tr.count);
      tr.backward(lo, hi_incl, grads, thr_grad);
      adam_step(view, adam, epoch, adam_cfg);
      if (tr.nav && model.learn_ignore) tr.compute_signs();
    }
    result.history.push_back(epoch_loss);
  }

  result.psi = extract_coefficients(model, table);
  return result;
}

}  // namespace abm
