#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace abm {

enum class SeriesKind { positional, phase };

/// Multi-agent time series: T steps, p agents, d state dims per agent.
///
/// Positional data stores [position dims; velocity dims] per agent, so
/// d = 2 * spatial_dims (meters and meters/second). Phase data stores
/// [phase, phase rate] per agent (radians, radians/second), d = 2.
struct TrajectorySeries {
  int T = 0;
  int p = 0;
  int d = 0;
  double dt = 0.0;
  SeriesKind kind = SeriesKind::positional;
  std::vector<double> values;  // [T][p][d]

  double& at(int t, int i, int q) {
    return values[(static_cast<std::size_t>(t) * p + i) * d + q];
  }
  double at(int t, int i, int q) const {
    return values[(static_cast<std::size_t>(t) * p + i) * d + q];
  }

  int spatial_dims() const {
    return kind == SeriesKind::positional ? d / 2 : 1;
  }

  void validate() const {
    if (T < 1 || p < 1 || d < 1)
      throw std::invalid_argument("TrajectorySeries: empty shape");
    if (dt <= 0.0) throw std::invalid_argument("TrajectorySeries: dt must be > 0");
    if (values.size() != static_cast<std::size_t>(T) * p * d)
      throw std::invalid_argument("TrajectorySeries: value buffer shape mismatch");
    for (double v : values)
      if (!std::isfinite(v))
        throw std::invalid_argument("TrajectorySeries: non-finite value");
  }
};

/// Signed adjacency over agents; edges[i][j] is the effect of agent i on
/// agent j, in {-1, 0, +1}. The diagonal is never read by any consumer.
struct CausalGraph {
  int p = 0;
  std::vector<int> edges;  // [p][p]

  CausalGraph() = default;
  explicit CausalGraph(int p_) : p(p_), edges(static_cast<std::size_t>(p_) * p_, 0) {}

  int& at(int i, int j) { return edges[static_cast<std::size_t>(i) * p + j]; }
  int at(int i, int j) const { return edges[static_cast<std::size_t>(i) * p + j]; }

  void validate() const {
    if (edges.size() != static_cast<std::size_t>(p) * p)
      throw std::invalid_argument("CausalGraph: shape mismatch");
    for (int e : edges)
      if (e < -1 || e > 1)
        throw std::invalid_argument("CausalGraph: entries must be in {-1,0,+1}");
  }
};

/// Per-agent lag history, ordered from lag K (oldest, row 0) to lag 1
/// (newest, row K-1). d_h is the feature dimension.
struct LagWindow {
  int K = 0;
  int d_h = 0;
  std::vector<double> history;  // [K][d_h]

  double& at(int row, int q) {
    return history[static_cast<std::size_t>(row) * d_h + q];
  }
  double at(int row, int q) const {
    return history[static_cast<std::size_t>(row) * d_h + q];
  }
};

}  // namespace abm
