#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "abm/gc.hpp"
#include "abm/types.hpp"

namespace abm {

/// Pointwise transfer entropy per step and ordered pair, in nats.
/// values[t][i][j] is the combined local transfer from i's present to j's
/// next step: the signed local value for scalar channels, the Euclidean
/// norm over (target dim, source dim) channel pairs otherwise.
struct TeEstimate {
  int count = 0;  // T - 1
  int p = 0;
  int bins = 0;
  int backoffs = 0;
  std::vector<double> values;

  double at(int t, int i, int j) const {
    return values[(static_cast<std::size_t>(t) * p + i) * p + j];
  }
  double& at(int t, int i, int j) {
    return values[(static_cast<std::size_t>(t) * p + i) * p + j];
  }
};

namespace detail {

/// Uniform-width binning to integer labels 0..bins-1. A constant channel
/// collapses to label 0.
inline std::vector<int> bin_channel(const std::vector<double>& x, int bins) {
  double lo = x[0], hi = x[0];
  for (double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<int> out(x.size(), 0);
  if (hi <= lo) return out;
  const double w = (hi - lo) / bins;
  for (std::size_t t = 0; t < x.size(); ++t) {
    int b = static_cast<int>((x[t] - lo) / w);
    if (b >= bins) b = bins - 1;
    if (b < 0) b = 0;
    out[t] = b;
  }
  return out;
}

/// Plug-in local transfer entropy on discrete labels:
///   ln p(y_{t+1} | y_t, x_t) - ln p(y_{t+1} | y_t)
/// estimated from joint counts over the whole sequence. An empty
/// conditional cell (possible only for injected count tables) falls back
/// to the marginal and bumps the backoff counter.
inline std::vector<double> local_te_discrete(const std::vector<int>& source,
                                             const std::vector<int>& target,
                                             int bins, int* backoffs = nullptr) {
  if (source.size() != target.size())
    throw std::invalid_argument("local_te_discrete: length mismatch");
  if (source.size() < 2)
    throw std::invalid_argument("local_te_discrete: need at least 2 samples");
  const std::size_t steps = source.size() - 1;
  const std::uint64_t b = static_cast<std::uint64_t>(bins);
  std::unordered_map<std::uint64_t, int> n3, n2yx, n2yy, n1;
  auto key3 = [&](int y1, int y0, int x0) {
    return (static_cast<std::uint64_t>(y1) * b + y0) * b + x0;
  };
  for (std::size_t t = 0; t < steps; ++t) {
    ++n3[key3(target[t + 1], target[t], source[t])];
    ++n2yx[static_cast<std::uint64_t>(target[t]) * b + source[t]];
    ++n2yy[static_cast<std::uint64_t>(target[t + 1]) * b + target[t]];
    ++n1[static_cast<std::uint64_t>(target[t])];
  }
  std::vector<double> out(steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const int joint = n3[key3(target[t + 1], target[t], source[t])];
    const int cond = n2yx[static_cast<std::uint64_t>(target[t]) * b + source[t]];
    const int pair = n2yy[static_cast<std::uint64_t>(target[t + 1]) * b + target[t]];
    const int marg = n1[static_cast<std::uint64_t>(target[t])];
    double p_full;
    if (cond > 0 && joint > 0) {
      p_full = static_cast<double>(joint) / cond;
    } else {
      p_full = static_cast<double>(pair) / marg;
      if (backoffs) ++*backoffs;
    }
    const double p_self = static_cast<double>(pair) / marg;
    out[t] = std::log(p_full / p_self);
  }
  return out;
}

}  // namespace detail

/// Local transfer entropy between every ordered agent pair on uniformly
/// binned channels, plus the pairwise strength matrix
/// (max over steps of the combined local magnitude). Transfer entropy is
/// unsigned, so present pairs carry sign +1.
inline std::pair<TeEstimate, GCMatrix> local_te(const TrajectorySeries& series,
                                                int bins = 8) {
  if (bins < 2) throw std::invalid_argument("local_te: need at least 2 bins");
  if (series.T < 3) throw std::invalid_argument("local_te: series too short");
  const int dpa = series.kind == SeriesKind::phase ? 1 : series.d;
  const int p = series.p;

  // bin labels per (agent, dim)
  std::vector<std::vector<int>> labels(static_cast<std::size_t>(p) * dpa);
  for (int i = 0; i < p; ++i)
    for (int q = 0; q < dpa; ++q) {
      std::vector<double> chan(series.T);
      for (int t = 0; t < series.T; ++t)
        chan[t] = series.kind == SeriesKind::phase ? series.at(t, i, 1)
                                                   : series.at(t, i, q);
      labels[static_cast<std::size_t>(i) * dpa + q] =
          detail::bin_channel(chan, bins);
    }

  TeEstimate est;
  est.count = series.T - 1;
  est.p = p;
  est.bins = bins;
  est.values.assign(static_cast<std::size_t>(est.count) * p * p, 0.0);
  GCMatrix gc(p);

  std::vector<double> combined(est.count);
  for (int src = 0; src < p; ++src)
    for (int tgt = 0; tgt < p; ++tgt) {
      if (src == tgt) continue;
      std::fill(combined.begin(), combined.end(), 0.0);
      const int channel_pairs = dpa * dpa;
      for (int u = 0; u < dpa; ++u)
        for (int q = 0; q < dpa; ++q) {
          const std::vector<double> local = detail::local_te_discrete(
              labels[static_cast<std::size_t>(src) * dpa + q],
              labels[static_cast<std::size_t>(tgt) * dpa + u], bins,
              &est.backoffs);
          if (channel_pairs == 1) {
            for (int t = 0; t < est.count; ++t) combined[t] = local[t];
          } else {
            for (int t = 0; t < est.count; ++t)
              combined[t] += local[t] * local[t];
          }
        }
      double strength = 0.0;
      for (int t = 0; t < est.count; ++t) {
        const double v =
            channel_pairs == 1 ? combined[t] : std::sqrt(combined[t]);
        est.at(t, src, tgt) = v;
        strength = std::max(strength, std::abs(v));
      }
      const std::size_t idx = gc.idx(src, tgt);
      gc.magnitude[idx] = strength;
      gc.sign[idx] = strength > 0.0 ? 1 : 0;
      gc.strengths[idx] = gc.magnitude[idx];
    }
  return {std::move(est), std::move(gc)};
}

}  // namespace abm
