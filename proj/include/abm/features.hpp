#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "abm/types.hpp"
#include "abm/windows.hpp"

namespace abm {

/// What goes into the per-agent feature vector.
///  - interaction: own velocity plus unit offsets toward every other agent
///    (flocking-style data; navigation signs apply).
///  - phase_coupling: own rate and intrinsic frequency plus sin(phase
///    differences) to every other agent (oscillator data).
///  - raw_state: raw lagged state of self and all others, no structure
///    (generalized-VAR ablation).
enum class FeatureMode { interaction, phase_coupling, raw_state };

/// Fixed layout of a feature vector: the self block first, then one block
/// per other agent in ascending agent index. Block widths are uniform per
/// mode, so coefficient columns map to source agents stably.
struct FeatureSpec {
  FeatureMode mode = FeatureMode::interaction;
  int p = 0;
  int spatial = 0;     // spatial dims for positional data
  int d_out = 0;       // prediction dims per agent
  int self_width = 0;
  int other_width = 0;
  int d_h = 0;

  static FeatureSpec interaction(int p, int spatial) {
    FeatureSpec s;
    s.mode = FeatureMode::interaction;
    s.p = p;
    s.spatial = spatial;
    s.d_out = spatial;
    s.self_width = spatial;
    s.other_width = spatial;
    s.d_h = spatial * p;
    return s;
  }
  static FeatureSpec phase_coupling(int p) {
    FeatureSpec s;
    s.mode = FeatureMode::phase_coupling;
    s.p = p;
    s.spatial = 1;
    s.d_out = 1;
    s.self_width = 2;  // [rate, omega]
    s.other_width = 1;
    s.d_h = p + 1;
    return s;
  }
  static FeatureSpec raw_state(int p, int state_dim, int d_out) {
    FeatureSpec s;
    s.mode = FeatureMode::raw_state;
    s.p = p;
    s.spatial = d_out;
    s.d_out = d_out;
    s.self_width = state_dim;
    s.other_width = state_dim;
    s.d_h = state_dim * p;
    return s;
  }

  /// First column of the block carrying source agent j in target i's
  /// coefficient rows. j == i addresses the self block.
  int block_col(int i, int j) const {
    if (j == i) return 0;
    return self_width + other_width * (j < i ? j : j - 1);
  }
  /// Rank of other agent j among target i's feature blocks (0-based).
  int other_rank(int i, int j) const { return j < i ? j : j - 1; }
  /// Inverse of other_rank.
  int other_agent(int i, int rank) const { return rank < i ? rank : rank + 1; }
};

/// Feature row plus pairwise geometry for one (step, agent).
/// approach[r] is the observer's speed toward other agent r (positive when
/// closing) and distance[r] the separation; both are empty for phase data.
struct AgentFeatures {
  std::vector<double> features;   // [d_h]
  std::vector<double> approach;   // [p-1]
  std::vector<double> distance;   // [p-1]
  bool coincident = false;
};

/// Builds the feature vector for one (step, agent). `omega` is required
/// for phase_coupling mode. A coincident pair (zero separation) yields a
/// zero offset block and sets the coincident flag.
inline AgentFeatures build_features(const TrajectorySeries& series,
                                    const FeatureSpec& spec, int t, int i,
                                    const std::vector<double>* omega = nullptr) {
  AgentFeatures out;
  out.features.assign(spec.d_h, 0.0);
  const int p = spec.p;
  switch (spec.mode) {
    case FeatureMode::interaction: {
      const int ds = spec.spatial;
      out.approach.assign(p - 1, 0.0);
      out.distance.assign(p - 1, 0.0);
      for (int q = 0; q < ds; ++q)
        out.features[q] = series.at(t, i, ds + q);  // own velocity
      for (int j = 0; j < p; ++j) {
        if (j == i) continue;
        const int r = spec.other_rank(i, j);
        double norm2 = 0.0;
        std::vector<double> offset(ds);
        for (int q = 0; q < ds; ++q) {
          offset[q] = series.at(t, j, q) - series.at(t, i, q);
          norm2 += offset[q] * offset[q];
        }
        const double dist = std::sqrt(norm2);
        out.distance[r] = dist;
        const int col = spec.block_col(i, j);
        if (dist < 1e-12) {
          out.coincident = true;  // offset block stays zero
          continue;
        }
        double closing = 0.0;
        for (int q = 0; q < ds; ++q) {
          const double unit = offset[q] / dist;
          out.features[col + q] = unit;
          closing += series.at(t, i, ds + q) * unit;
        }
        out.approach[r] = closing;
      }
      break;
    }
    case FeatureMode::phase_coupling: {
      if (omega == nullptr || static_cast<int>(omega->size()) != p)
        throw std::invalid_argument("build_features: phase mode needs omega[p]");
      out.features[0] = series.at(t, i, 1);  // rate
      out.features[1] = (*omega)[i];
      for (int j = 0; j < p; ++j) {
        if (j == i) continue;
        out.features[spec.block_col(i, j)] =
            std::sin(series.at(t, i, 0) - series.at(t, j, 0));
      }
      break;
    }
    case FeatureMode::raw_state: {
      const int w = spec.self_width;
      const bool phase = series.kind == SeriesKind::phase;
      for (int j = 0; j < p; ++j) {
        const int col = spec.block_col(i, j);
        if (phase) {
          out.features[col] = series.at(t, j, 1);  // rate channel
        } else {
          for (int q = 0; q < w; ++q) out.features[col + q] = series.at(t, j, q);
        }
      }
      break;
    }
  }
  return out;
}

/// Per-sequence tensorized features for training: one feature row per
/// (step, agent), prediction targets, pairwise geometry, and the squared
/// no-interaction residual per step.
struct FeatureTable {
  FeatureSpec spec;
  int T = 0;
  double dt = 0.0;
  std::vector<double> features;   // [T][p][d_h]
  std::vector<double> approach;   // [T][p][p-1]
  std::vector<double> distance;   // [T][p][p-1]
  std::vector<double> targets;    // [T][p][d_out]
  std::vector<double> residual2;  // [T], 0 at t = 0
  bool coincident = false;
  bool standardized = false;
  std::vector<double> feature_scale;  // [p][d_h] sd per column (standardized only)
  std::vector<double> target_scale;   // [p][d_out]

  const double* feature_row(int t, int i) const {
    return &features[(static_cast<std::size_t>(t) * spec.p + i) * spec.d_h];
  }
  const double* approach_row(int t, int i) const {
    return &approach[(static_cast<std::size_t>(t) * spec.p + i) * (spec.p - 1)];
  }
  const double* distance_row(int t, int i) const {
    return &distance[(static_cast<std::size_t>(t) * spec.p + i) * (spec.p - 1)];
  }
  double target_at(int t, int i, int u) const {
    return targets[(static_cast<std::size_t>(t) * spec.p + i) * spec.d_out + u];
  }
};

namespace detail {

/// Z-scores one column (stride spec-dependent) over time and returns the
/// scale used; a constant column maps to zero with scale 0.
inline double standardize_column(double* base, int T, std::size_t stride) {
  double mean = 0.0;
  for (int t = 0; t < T; ++t) mean += base[t * stride];
  mean /= T;
  double var = 0.0;
  for (int t = 0; t < T; ++t) {
    const double d = base[t * stride] - mean;
    var += d * d;
  }
  var /= T;
  const double sd = std::sqrt(var);
  if (sd < 1e-12) {
    for (int t = 0; t < T; ++t) base[t * stride] = 0.0;
    return 0.0;
  }
  for (int t = 0; t < T; ++t) base[t * stride] = (base[t * stride] - mean) / sd;
  return sd;
}

}  // namespace detail

/// Z-scores every feature and target column per (agent, dim) over the
/// sequence. Phase-rate scales run well past the reach of the fixed
/// training recipe, so oscillator data is conditioned this way before
/// training; the coefficient tensor then lives in standardized units,
/// which leaves the relative aggregation and thresholding unchanged.
inline void standardize_table(FeatureTable& table) {
  const int p = table.spec.p;
  const std::size_t fstride = static_cast<std::size_t>(p) * table.spec.d_h;
  const std::size_t tstride = static_cast<std::size_t>(p) * table.spec.d_out;
  table.feature_scale.assign(static_cast<std::size_t>(p) * table.spec.d_h, 1.0);
  table.target_scale.assign(static_cast<std::size_t>(p) * table.spec.d_out, 1.0);
  for (int i = 0; i < p; ++i) {
    for (int q = 0; q < table.spec.d_h; ++q)
      table.feature_scale[static_cast<std::size_t>(i) * table.spec.d_h + q] =
          detail::standardize_column(
              &table.features[static_cast<std::size_t>(i) * table.spec.d_h + q],
              table.T, fstride);
    for (int u = 0; u < table.spec.d_out; ++u)
      table.target_scale[static_cast<std::size_t>(i) * table.spec.d_out + u] =
          detail::standardize_column(
              &table.targets[static_cast<std::size_t>(i) * table.spec.d_out + u],
              table.T, tstride);
  }
  table.standardized = true;
}

inline FeatureTable build_feature_table(const TrajectorySeries& series,
                                        const FeatureSpec& spec,
                                        const std::vector<double>* omega = nullptr) {
  series.validate();
  if (series.p != spec.p)
    throw std::invalid_argument("build_feature_table: agent count mismatch");
  FeatureTable table;
  table.spec = spec;
  table.T = series.T;
  table.dt = series.dt;
  const int p = spec.p;
  table.features.assign(static_cast<std::size_t>(series.T) * p * spec.d_h, 0.0);
  table.approach.assign(static_cast<std::size_t>(series.T) * p * (p - 1), 0.0);
  table.distance.assign(static_cast<std::size_t>(series.T) * p * (p - 1), 0.0);
  table.targets.assign(static_cast<std::size_t>(series.T) * p * spec.d_out, 0.0);
  table.residual2.assign(series.T, 0.0);

  const int ds = series.spatial_dims();
  for (int t = 0; t < series.T; ++t) {
    for (int i = 0; i < p; ++i) {
      AgentFeatures f = build_features(series, spec, t, i, omega);
      table.coincident = table.coincident || f.coincident;
      double* frow =
          &table.features[(static_cast<std::size_t>(t) * p + i) * spec.d_h];
      for (int q = 0; q < spec.d_h; ++q) frow[q] = f.features[q];
      if (!f.approach.empty()) {
        double* arow =
            &table.approach[(static_cast<std::size_t>(t) * p + i) * (p - 1)];
        double* drow =
            &table.distance[(static_cast<std::size_t>(t) * p + i) * (p - 1)];
        for (int r = 0; r < p - 1; ++r) {
          arow[r] = f.approach[r];
          drow[r] = f.distance[r];
        }
      }
      double* trow =
          &table.targets[(static_cast<std::size_t>(t) * p + i) * spec.d_out];
      if (series.kind == SeriesKind::phase) {
        trow[0] = series.at(t, i, 1);
      } else {
        for (int q = 0; q < spec.d_out; ++q) trow[q] = series.at(t, i, ds + q);
      }
    }
    if (t >= 1) {
      const std::vector<double> pred =
          series.kind == SeriesKind::positional
              ? straight_line_prediction(series, t)
              : constant_rate_prediction(series, t);
      table.residual2[t] = state_residual2(series, t, pred);
    }
  }
  return table;
}

}  // namespace abm
