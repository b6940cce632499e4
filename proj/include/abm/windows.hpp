#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "abm/types.hpp"

namespace abm {

/// One autoregression sample: a depth-K window per agent plus the state
/// at the target step.
struct WindowSample {
  std::vector<LagWindow> windows;  // one per agent
  std::vector<double> target;      // [p][d], state at step m+K
};

/// Maps (series, step, agent) to a feature vector.
using Featurizer =
    std::function<std::vector<double>(const TrajectorySeries&, int t, int i)>;

/// Identity featurizer: the agent's raw state row.
inline std::vector<double> raw_state_features(const TrajectorySeries& s, int t,
                                              int i) {
  std::vector<double> out(s.d);
  for (int q = 0; q < s.d; ++q) out[q] = s.at(t, i, q);
  return out;
}

/// Slices a series into T-K (window, target) pairs. Sample m covers steps
/// m..m+K-1 (oldest first) and targets step m+K. Pure function of its
/// arguments; reruns produce identical output.
inline std::vector<WindowSample> make_lag_windows(const TrajectorySeries& series,
                                                  int K,
                                                  const Featurizer& featurizer) {
  if (K < 1) throw std::invalid_argument("make_lag_windows: K must be >= 1");
  if (series.T < K + 2)
    throw std::invalid_argument("make_lag_windows: series length " +
                                std::to_string(series.T) +
                                " is shorter than K+2 = " +
                                std::to_string(K + 2));
  const int count = series.T - K;
  std::vector<WindowSample> out;
  out.reserve(count);
  for (int m = 0; m < count; ++m) {
    WindowSample sample;
    sample.windows.resize(series.p);
    for (int i = 0; i < series.p; ++i) {
      LagWindow& w = sample.windows[i];
      std::vector<double> first = featurizer(series, m, i);
      w.K = K;
      w.d_h = static_cast<int>(first.size());
      w.history.resize(static_cast<std::size_t>(K) * w.d_h);
      for (int q = 0; q < w.d_h; ++q) w.at(0, q) = first[q];
      for (int row = 1; row < K; ++row) {
        std::vector<double> f = featurizer(series, m + row, i);
        for (int q = 0; q < w.d_h; ++q) w.at(row, q) = f[q];
      }
    }
    sample.target.resize(static_cast<std::size_t>(series.p) * series.d);
    for (int i = 0; i < series.p; ++i)
      for (int q = 0; q < series.d; ++q)
        sample.target[static_cast<std::size_t>(i) * series.d + q] =
            series.at(m + K, i, q);
    out.push_back(std::move(sample));
  }
  return out;
}

/// No-interaction extrapolation of step t from step t-1 for positional
/// data: velocity is held, position advances by velocity * dt. Returns a
/// [p][d] state row. Requires t >= 1 (0-based).
inline std::vector<double> straight_line_prediction(const TrajectorySeries& series,
                                                    int t) {
  if (series.kind != SeriesKind::positional)
    throw std::domain_error("straight_line_prediction: positional series required");
  if (t < 1 || t >= series.T)
    throw std::domain_error("straight_line_prediction: step has no predecessor");
  const int ds = series.spatial_dims();
  std::vector<double> out(static_cast<std::size_t>(series.p) * series.d);
  for (int i = 0; i < series.p; ++i) {
    for (int q = 0; q < ds; ++q) {
      const double pos = series.at(t - 1, i, q);
      const double vel = series.at(t - 1, i, ds + q);
      out[static_cast<std::size_t>(i) * series.d + q] = pos + vel * series.dt;
      out[static_cast<std::size_t>(i) * series.d + ds + q] = vel;
    }
  }
  return out;
}

/// Phase analogue of straight-line motion: the rate is held and the phase
/// advances by rate * dt. Used for the no-interaction prior on phase data.
inline std::vector<double> constant_rate_prediction(const TrajectorySeries& series,
                                                    int t) {
  if (series.kind != SeriesKind::phase)
    throw std::domain_error("constant_rate_prediction: phase series required");
  if (t < 1 || t >= series.T)
    throw std::domain_error("constant_rate_prediction: step has no predecessor");
  std::vector<double> out(static_cast<std::size_t>(series.p) * series.d);
  for (int i = 0; i < series.p; ++i) {
    const double phase = series.at(t - 1, i, 0);
    const double rate = series.at(t - 1, i, 1);
    out[static_cast<std::size_t>(i) * series.d + 0] = phase + rate * series.dt;
    out[static_cast<std::size_t>(i) * series.d + 1] = rate;
  }
  return out;
}

/// Squared distance between the observed state at step t and a predicted
/// state row, summed over all agents and dims.
inline double state_residual2(const TrajectorySeries& series, int t,
                              const std::vector<double>& predicted) {
  double r2 = 0.0;
  for (int i = 0; i < series.p; ++i)
    for (int q = 0; q < series.d; ++q) {
      const double diff =
          series.at(t, i, q) - predicted[static_cast<std::size_t>(i) * series.d + q];
      r2 += diff * diff;
    }
  return r2;
}

}  // namespace abm
