#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "abm/model.hpp"
#include "abm/types.hpp"

namespace abm {

namespace detail {

/// Value with the largest absolute magnitude; a tie between a positive
/// and a negative extreme resolves to the positive one.
inline double absmax_value(std::span<const double> values) {
  if (values.empty()) throw std::domain_error("absmax_value: empty list");
  double hi = values[0], lo = values[0];
  for (double v : values) {
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  return hi >= -lo ? hi : lo;
}

/// Median with the lower-middle convention for even counts, so the result
/// is always an attained value and keeps its sign.
inline double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::domain_error("lower_median: empty list");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  return values[mid];
}

}  // namespace detail

/// Sign of the extremum with the largest absolute value: -1, 0 or +1,
/// zero only when every entry is zero. A tie between equal-magnitude
/// positive and negative extremes returns +1.
inline int signmax(std::span<const double> values) {
  const double v = detail::absmax_value(values);
  return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

inline int signmax(const std::vector<double>& values) {
  return signmax(std::span<const double>(values));
}

/// Signed pairwise strengths. strengths = sign * magnitude entrywise;
/// diagonals stay zero and are never read downstream.
struct GCMatrix {
  int p = 0;
  std::vector<double> strengths;  // [p][p], source-major: [i][j] = i -> j
  std::vector<double> magnitude;  // [p][p]
  std::vector<int> sign;          // [p][p]

  explicit GCMatrix(int p_ = 0)
      : p(p_), strengths(static_cast<std::size_t>(p_) * p_, 0.0),
        magnitude(static_cast<std::size_t>(p_) * p_, 0.0),
        sign(static_cast<std::size_t>(p_) * p_, 0) {}

  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * p + j;
  }
};

/// Per-window signed strengths, for time-resolved effects.
struct EffectTrace {
  int count = 0;
  int p = 0;
  std::vector<double> values;  // [count][p][p], [t][i][j] = effect of i on j at t

  double at(int t, int i, int j) const {
    return values[(static_cast<std::size_t>(t) * p + i) * p + j];
  }
  double& at(int t, int i, int j) {
    return values[(static_cast<std::size_t>(t) * p + i) * p + j];
  }
};

namespace detail {

/// Per-(t, k) block statistics of the cross coefficients for source j in
/// target i's rows: the lower median (sign carrier) and the Frobenius
/// norm (magnitude carrier).
inline void block_stats(const CoefficientTensor& psi, int m, int target,
                        int k_row, int source, double& median, double& fnorm) {
  const FeatureSpec& spec = psi.spec;
  const int col = spec.block_col(target, source);
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(spec.d_out) * spec.other_width);
  double sq = 0.0;
  for (int u = 0; u < spec.d_out; ++u)
    for (int q = 0; q < spec.other_width; ++q) {
      const double v = psi.at(m, target, k_row, u, col + q);
      entries.push_back(v);
      sq += v * v;
    }
  median = lower_median(std::move(entries));
  fnorm = std::sqrt(sq);
}

}  // namespace detail

/// Aggregates a coefficient tensor into pairwise signed strengths: per
/// (t, k) block, the lower median over its entries carries the sign and
/// the Frobenius norm the magnitude; signs collapse through nested
/// largest-|value| selection over lags then windows, magnitudes through
/// nested maxima. Only cross-agent blocks are read.
inline GCMatrix aggregate(const CoefficientTensor& psi) {
  const int p = psi.spec.p;
  GCMatrix gc(p);
  if (psi.count == 0) throw std::invalid_argument("aggregate: empty tensor");
  std::vector<double> med_k(psi.K);
  for (int target = 0; target < p; ++target)
    for (int source = 0; source < p; ++source) {
      if (source == target) continue;
      double best_val = 0.0;  // extremum of per-(t,k) medians
      double best_mag = 0.0;
      for (int m = 0; m < psi.count; ++m) {
        for (int k_row = 0; k_row < psi.K; ++k_row) {
          double med, fn;
          detail::block_stats(psi, m, target, k_row, source, med, fn);
          med_k[k_row] = med;
          best_mag = std::max(best_mag, fn);
        }
        const double v = detail::absmax_value(med_k);
        if (m == 0 || std::abs(v) > std::abs(best_val) ||
            (std::abs(v) == std::abs(best_val) && v > best_val))
          best_val = v;
      }
      const std::size_t idx = gc.idx(source, target);
      gc.sign[idx] = best_val > 0.0 ? 1 : (best_val < 0.0 ? -1 : 0);
      gc.magnitude[idx] = best_mag;
      gc.strengths[idx] = gc.sign[idx] * best_mag;
    }
  return gc;
}

/// Half-maximum threshold rule: keep a pair when its magnitude reaches at
/// least half the largest off-diagonal magnitude. Kept edges carry their
/// sign; an all-zero matrix yields an empty graph.
inline CausalGraph binarize(const GCMatrix& gc) {
  if (gc.p < 2) throw std::invalid_argument("binarize: need at least 2 agents");
  double max_mag = 0.0;
  for (int i = 0; i < gc.p; ++i)
    for (int j = 0; j < gc.p; ++j)
      if (i != j) max_mag = std::max(max_mag, gc.magnitude[gc.idx(i, j)]);
  CausalGraph out(gc.p);
  if (max_mag <= 0.0) return out;
  const double tau = max_mag / 2.0;
  for (int i = 0; i < gc.p; ++i)
    for (int j = 0; j < gc.p; ++j) {
      if (i == j) continue;
      if (gc.magnitude[gc.idx(i, j)] >= tau)
        out.at(i, j) = gc.sign[gc.idx(i, j)] != 0 ? gc.sign[gc.idx(i, j)] : 1;
    }
  return out;
}

/// Per-window version of aggregate: at each window the sign comes from
/// the largest-|value| median over lags and the magnitude from the max
/// block norm over lags.
inline EffectTrace effect_trace(const CoefficientTensor& psi) {
  const int p = psi.spec.p;
  EffectTrace trace;
  trace.count = psi.count;
  trace.p = p;
  trace.values.assign(static_cast<std::size_t>(psi.count) * p * p, 0.0);
  std::vector<double> med_k(psi.K);
  for (int m = 0; m < psi.count; ++m)
    for (int target = 0; target < p; ++target)
      for (int source = 0; source < p; ++source) {
        if (source == target) continue;
        double mag = 0.0;
        for (int k_row = 0; k_row < psi.K; ++k_row) {
          double med, fn;
          detail::block_stats(psi, m, target, k_row, source, med, fn);
          med_k[k_row] = med;
          mag = std::max(mag, fn);
        }
        const int sgn = signmax(med_k);
        trace.at(m, source, target) = sgn * mag;
      }
  return trace;
}

/// Divides every entry by the largest absolute value of the trace, for
/// plot-ready output. A zero trace is returned unchanged.
inline EffectTrace normalize_trace(EffectTrace trace) {
  double max_abs = 0.0;
  for (double v : trace.values) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs > 0.0)
    for (double& v : trace.values) v /= max_abs;
  return trace;
}

/// Seconds of binarized positive/negative effect per fixed-length bin,
/// counted over all ordered pairs. The presence threshold is the same
/// half-maximum rule applied to the trace magnitudes of this sequence.
struct DurationBin {
  double attraction_seconds = 0.0;
  double repulsion_seconds = 0.0;
};

inline std::vector<DurationBin> interaction_durations(const EffectTrace& trace,
                                                      double fps,
                                                      double bin_seconds) {
  if (fps <= 0.0) throw std::invalid_argument("interaction_durations: fps must be > 0");
  if (bin_seconds <= 0.0)
    throw std::invalid_argument("interaction_durations: bin must be > 0");
  double max_abs = 0.0;
  for (int t = 0; t < trace.count; ++t)
    for (int i = 0; i < trace.p; ++i)
      for (int j = 0; j < trace.p; ++j)
        if (i != j) max_abs = std::max(max_abs, std::abs(trace.at(t, i, j)));
  const double tau = max_abs / 2.0;
  const int frames_per_bin = std::max(1, static_cast<int>(bin_seconds * fps + 0.5));
  const int n_bins = (trace.count + frames_per_bin - 1) / frames_per_bin;
  std::vector<DurationBin> bins(static_cast<std::size_t>(std::max(n_bins, 0)));
  if (max_abs <= 0.0) return bins;
  for (int t = 0; t < trace.count; ++t) {
    DurationBin& bin = bins[t / frames_per_bin];
    for (int i = 0; i < trace.p; ++i)
      for (int j = 0; j < trace.p; ++j) {
        if (i == j) continue;
        const double v = trace.at(t, i, j);
        if (std::abs(v) >= tau) {
          if (v > 0.0)
            bin.attraction_seconds += 1.0 / fps;
          else if (v < 0.0)
            bin.repulsion_seconds += 1.0 / fps;
        }
      }
  }
  return bins;
}

}  // namespace abm
