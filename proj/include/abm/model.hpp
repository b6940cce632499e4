#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "abm/features.hpp"
#include "abm/mlp.hpp"
#include "abm/rng.hpp"

namespace abm {

/// Generalized coefficients for a whole sequence, indexed by
/// (window, target agent, lag, output dim, source column). Window m holds
/// the coefficients that predict step m+K. Source columns follow the
/// FeatureSpec block layout.
struct CoefficientTensor {
  FeatureSpec spec;
  int count = 0;  // windows (T - K)
  int K = 0;
  std::vector<double> psi;  // [count][p][K][d_out][d_h]

  std::size_t slice_size() const {
    return static_cast<std::size_t>(spec.d_out) * spec.d_h;
  }
  std::size_t index(int m, int i, int k_row) const {
    return ((static_cast<std::size_t>(m) * spec.p + i) * K + k_row) * slice_size();
  }
  /// k_row is 0-based: lag k = k_row + 1.
  double at(int m, int i, int k_row, int u, int q) const {
    return psi[index(m, i, k_row) + static_cast<std::size_t>(u) * spec.d_h + q];
  }
  double& at(int m, int i, int k_row, int u, int q) {
    return psi[index(m, i, k_row) + static_cast<std::size_t>(u) * spec.d_h + q];
  }
};

enum class ModelMode { full, no_navigation, gvar };

/// Signed visibility-times-approach factor for one other agent:
///   s = sigmoid_{gain_dist}(1/distance - ignore_threshold)
///       * (sigmoid_{gain_speed}(approach) - 1/2) * 2
/// Lies in (-1, 1), is zero for zero approach speed, and increases with
/// the approach speed at fixed distance.
inline double navigation_sign_one(double approach, double distance,
                                  double gain_speed, double gain_dist,
                                  double ignore_threshold) {
  const double inv_dist = distance > 1e-12 ? 1.0 / distance : 1e12;
  const double vis = 1.0 / (1.0 + std::exp(-gain_dist * (inv_dist - ignore_threshold)));
  const double app = 1.0 / (1.0 + std::exp(-gain_speed * approach));
  return vis * (app - 0.5) * 2.0;
}

/// Vector version over a NavFeature row ([p-1] approach speeds/distances).
inline std::vector<double> navigation_sign(const std::vector<double>& approach,
                                           const std::vector<double>& distance,
                                           double gain_speed, double gain_dist,
                                           double ignore_threshold) {
  if (gain_speed <= 0.0 || gain_dist <= 0.0)
    throw std::invalid_argument("navigation_sign: gains must be > 0");
  std::vector<double> s(approach.size());
  for (std::size_t r = 0; r < approach.size(); ++r)
    s[r] = navigation_sign_one(approach[r], distance[r], gain_speed, gain_dist,
                               ignore_threshold);
  return s;
}

/// d(sign)/d(ignore_threshold) for the learnable-threshold path.
inline double navigation_sign_dthreshold(double approach, double distance,
                                         double gain_speed, double gain_dist,
                                         double ignore_threshold) {
  const double inv_dist = distance > 1e-12 ? 1.0 / distance : 1e12;
  const double vis = 1.0 / (1.0 + std::exp(-gain_dist * (inv_dist - ignore_threshold)));
  const double app = 1.0 / (1.0 + std::exp(-gain_speed * approach));
  return -gain_dist * vis * (1.0 - vis) * (app - 0.5) * 2.0;
}

/// Coefficient-generating model: one motion network per (target agent,
/// lag) that maps the feature vector to a d_out x d_h coefficient matrix,
/// optionally sign-modulated per source block by the navigation factor.
///
/// Modes: `full` applies navigation signs on interaction features;
/// `no_navigation` keeps the theory features but drops the signs; `gvar`
/// pairs raw-state features with no signs.
struct AbmModel {
  FeatureSpec spec;
  ModelMode mode = ModelMode::full;
  int K = 0;
  int hidden = 50;
  double nav_gain_speed = 1e-2;
  double nav_gain_dist = 1e-6;
  double ignore_threshold = 0.0;
  bool learn_ignore = false;
  std::vector<Mlp> mlps;  // [p][K]

  AbmModel() = default;
  AbmModel(const FeatureSpec& spec_, ModelMode mode_, int K_, std::uint64_t seed,
           int hidden_ = 50)
      : spec(spec_), mode(mode_), K(K_), hidden(hidden_) {
    if (K < 1) throw std::invalid_argument("AbmModel: K must be >= 1");
    if (mode == ModelMode::gvar && spec.mode != FeatureMode::raw_state)
      throw std::invalid_argument("AbmModel: gvar mode requires raw_state features");
    Rng rng(seed);
    mlps.reserve(static_cast<std::size_t>(spec.p) * K);
    for (int i = 0; i < spec.p; ++i)
      for (int k = 0; k < K; ++k) {
        Mlp m(spec.d_h, hidden, spec.d_out * spec.d_h);
        m.init(rng);
        mlps.push_back(std::move(m));
      }
  }

  Mlp& mlp(int i, int k_row) { return mlps[static_cast<std::size_t>(i) * K + k_row]; }
  const Mlp& mlp(int i, int k_row) const {
    return mlps[static_cast<std::size_t>(i) * K + k_row];
  }

  bool navigation_active() const {
    return mode == ModelMode::full && spec.mode == FeatureMode::interaction;
  }

  std::size_t param_count() const {
    std::size_t n = learn_ignore ? 1 : 0;
    for (const Mlp& m : mlps) n += m.param_count();
    return n;
  }

  /// Navigation signs for one feature row; all ones when inactive.
  std::vector<double> signs(const double* approach, const double* distance) const {
    std::vector<double> s(spec.p - 1, 1.0);
    if (!navigation_active()) return s;
    for (int r = 0; r < spec.p - 1; ++r)
      s[r] = navigation_sign_one(approach[r], distance[r], nav_gain_speed,
                                 nav_gain_dist, ignore_threshold);
    return s;
  }

  /// One coefficient slice (d_out x d_h) for target i at lag row k_row,
  /// evaluated on a feature row. Other-agent blocks are scaled by their
  /// navigation sign; the self block keeps sign +1.
  std::vector<double> coefficient_slice(int i, int k_row, const double* features,
                                        const std::vector<double>& s) const {
    MlpCache cache;
    mlp_forward(mlp(i, k_row), features, cache);
    std::vector<double> slice = cache.out;
    if (navigation_active()) apply_signs(s, slice.data());
    return slice;
  }

  /// Multiplies the other-agent column blocks of a raw coefficient slice
  /// by the per-source signs, in place.
  void apply_signs(const std::vector<double>& s, double* slice) const {
    for (int u = 0; u < spec.d_out; ++u) {
      double* row = slice + static_cast<std::size_t>(u) * spec.d_h;
      for (int r = 0; r < spec.p - 1; ++r) {
        const int col = spec.self_width + spec.other_width * r;
        for (int q = 0; q < spec.other_width; ++q) row[col + q] *= s[r];
      }
    }
  }
};

/// One-step prediction for every agent from depth-K windows of feature
/// rows (plus matching geometry rows for navigation). Returns the
/// predicted [p][d_out] state and, when `slices` is given, the coefficient
/// slices used (indexed like CoefficientTensor window 0).
///
/// windows[i] rows are ordered oldest first, so row K-1 is lag 1.
inline std::vector<double> predict(
    const AbmModel& model, const std::vector<LagWindow>& feature_windows,
    const std::vector<LagWindow>* approach_windows = nullptr,
    const std::vector<LagWindow>* distance_windows = nullptr,
    std::vector<double>* slices = nullptr) {
  const int p = model.spec.p;
  const int d_out = model.spec.d_out;
  const int d_h = model.spec.d_h;
  std::vector<double> xhat(static_cast<std::size_t>(p) * d_out, 0.0);
  if (slices)
    slices->assign(static_cast<std::size_t>(p) * model.K * d_out * d_h, 0.0);
  std::vector<double> ones(static_cast<std::size_t>(p) - 1, 1.0);
  for (int i = 0; i < p; ++i) {
    const LagWindow& w = feature_windows[i];
    if (w.K != model.K || w.d_h != d_h)
      throw std::invalid_argument("predict: window shape mismatch");
    for (int k = 1; k <= model.K; ++k) {
      const int row = model.K - k;  // lag k lives k rows back from the target
      const double* f = &w.history[static_cast<std::size_t>(row) * d_h];
      std::vector<double> s = ones;
      if (model.navigation_active() && p > 1) {
        if (!approach_windows || !distance_windows)
          throw std::invalid_argument("predict: navigation needs geometry windows");
        const double* ar =
            &(*approach_windows)[i].history[static_cast<std::size_t>(row) * (p - 1)];
        const double* dr =
            &(*distance_windows)[i].history[static_cast<std::size_t>(row) * (p - 1)];
        s = model.signs(ar, dr);
      }
      const std::vector<double> slice =
          model.coefficient_slice(i, k - 1, f, s);
      for (int u = 0; u < d_out; ++u) {
        double acc = 0.0;
        const double* srow = &slice[static_cast<std::size_t>(u) * d_h];
        for (int q = 0; q < d_h; ++q) acc += srow[q] * f[q];
        xhat[static_cast<std::size_t>(i) * d_out + u] += acc;
      }
      if (slices) {
        const std::size_t base =
            ((static_cast<std::size_t>(i) * model.K) + (k - 1)) *
            static_cast<std::size_t>(d_out) * d_h;
        for (std::size_t idx = 0; idx < slice.size(); ++idx)
          (*slices)[base + idx] = slice[idx];
      }
    }
  }
  return xhat;
}

}  // namespace abm
