#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "abm/rng.hpp"
#include "abm/types.hpp"

namespace abm {

/// Zone-based flocking world with directed, signed interaction rules.
/// relations.at(i, j) is the effect of agent i on agent j: +1 attraction,
/// -1 repulsion, 0 masked (j ignores i entirely). Zone radii are stored
/// per (observer, neighbor) ordered pair; an observer's radii carry its
/// own per-agent noise offsets, and the repulsion radius additionally
/// depends on the relation (1 m attractive, 10 m repulsive).
struct BoidWorld {
  int p = 0;
  double dt = 0.01;          // seconds per step
  double arena = 30.0;       // square side, meters
  double max_turn = 30.0 * 3.14159265358979323846 / 180.0;  // beta, rad/step
  std::vector<double> speed;                 // [p], m/s
  std::vector<double> r_r, r_o, r_a;         // [observer][neighbor]
  CausalGraph relations;                     // [source][target]
  std::vector<double> init_positions;        // [p][2]
  std::vector<double> init_directions;       // [p][2], unit

  double rr(int observer, int neighbor) const {
    return r_r[static_cast<std::size_t>(observer) * p + neighbor];
  }
  double ro(int observer, int neighbor) const {
    return r_o[static_cast<std::size_t>(observer) * p + neighbor];
  }
  double ra(int observer, int neighbor) const {
    return r_a[static_cast<std::size_t>(observer) * p + neighbor];
  }
};

struct BoidState {
  std::vector<double> positions;   // [p][2]
  std::vector<double> directions;  // [p][2], unit
};

struct BoidSimStats {
  int wall_reflections = 0;
};

namespace detail {

inline void reflect_into_arena(double& x, double& dir_x, double arena, int* count) {
  // Mirror until inside; a single pass suffices for step sizes << arena.
  while (x < 0.0 || x > arena) {
    if (x < 0.0) x = -x;
    if (x > arena) x = 2.0 * arena - x;
    dir_x = -dir_x;
    if (count) ++*count;
  }
}

inline void normalize2(double& x, double& y) {
  const double n = std::sqrt(x * x + y * y);
  if (n < 1e-15) return;
  x /= n;
  y /= n;
}

}  // namespace detail

/// Draws a world: relations uniform over {-1,0,+1} per ordered pair,
/// base radii (r_o, r_a) = (2, 8) and r_r = 1 or 10 by relation, per-agent
/// Gaussian noise (sd 0.2) on speed and the three radii, radii floored at
/// 0.1 m. Initial positions sit on a circle of uniform radius in [6,16) m
/// about the arena center; initial headings are uniform on the unit circle.
inline BoidWorld sample_world(int p, Rng& rng) {
  if (p < 2) throw std::invalid_argument("sample_world: need at least 2 agents");
  BoidWorld w;
  w.p = p;
  w.relations = CausalGraph(p);
  w.speed.resize(p);
  w.r_r.assign(static_cast<std::size_t>(p) * p, 0.0);
  w.r_o.assign(static_cast<std::size_t>(p) * p, 0.0);
  w.r_a.assign(static_cast<std::size_t>(p) * p, 0.0);
  w.init_positions.resize(static_cast<std::size_t>(p) * 2);
  w.init_directions.resize(static_cast<std::size_t>(p) * 2);

  const double two_pi = 6.283185307179586476925286766559;
  const double circle_radius = rng.uniform(6.0, 16.0);
  const double cx = w.arena / 2.0, cy = w.arena / 2.0;

  std::vector<double> noise_speed(p), noise_rr(p), noise_ro(p), noise_ra(p);
  for (int i = 0; i < p; ++i) {
    const double angle = rng.uniform(0.0, two_pi);
    double px = cx + circle_radius * std::cos(angle);
    double py = cy + circle_radius * std::sin(angle);
    double unused = 0.0;  // the start circle may poke outside the arena
    detail::reflect_into_arena(px, unused, w.arena, nullptr);
    detail::reflect_into_arena(py, unused, w.arena, nullptr);
    w.init_positions[2 * i] = px;
    w.init_positions[2 * i + 1] = py;
    const double heading = rng.uniform(0.0, two_pi);
    w.init_directions[2 * i] = std::cos(heading);
    w.init_directions[2 * i + 1] = std::sin(heading);
    noise_speed[i] = rng.normal(0.0, 0.2);
    noise_rr[i] = rng.normal(0.0, 0.2);
    noise_ro[i] = rng.normal(0.0, 0.2);
    noise_ra[i] = rng.normal(0.0, 0.2);
    w.speed[i] = 1.0 + noise_speed[i];
    if (w.speed[i] < 0.1) w.speed[i] = 0.1;
  }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      if (i == j) continue;
      w.relations.at(i, j) = static_cast<int>(rng.uniform_int(3)) - 1;
    }
  for (int observer = 0; observer < p; ++observer)
    for (int neighbor = 0; neighbor < p; ++neighbor) {
      if (observer == neighbor) continue;
      const int rel = w.relations.at(neighbor, observer);
      const double base_rr = rel < 0 ? 10.0 : 1.0;
      const std::size_t idx = static_cast<std::size_t>(observer) * p + neighbor;
      w.r_r[idx] = std::max(0.1, base_rr + noise_rr[observer]);
      w.r_o[idx] = std::max(0.1, 2.0 + noise_ro[observer]);
      w.r_a[idx] = std::max(0.1, 8.0 + noise_ra[observer]);
    }
  return w;
}

inline BoidState initial_state(const BoidWorld& w) {
  return BoidState{w.init_positions, w.init_directions};
}

/// Zone rule for one observer. Repulsion (highest priority): point away
/// from the mean unit offset of neighbors inside the repulsion zone.
/// Otherwise average the orientation-shell headings and attraction-shell
/// unit offsets, halving when both shells are occupied. Masked neighbors
/// never contribute; with no neighbors in any zone the current heading is
/// kept.
inline std::vector<double> desired_direction(const BoidWorld& w,
                                             const BoidState& s, int i) {
  double rep_x = 0.0, rep_y = 0.0;
  double ori_x = 0.0, ori_y = 0.0;
  double att_x = 0.0, att_y = 0.0;
  int n_rep = 0, n_ori = 0, n_att = 0;
  const double px = s.positions[2 * i], py = s.positions[2 * i + 1];
  for (int j = 0; j < w.p; ++j) {
    if (j == i || w.relations.at(j, i) == 0) continue;
    const double ox = s.positions[2 * j] - px;
    const double oy = s.positions[2 * j + 1] - py;
    const double dist = std::sqrt(ox * ox + oy * oy);
    if (dist < 1e-12) continue;  // coincident, no defined offset
    if (dist <= w.rr(i, j)) {
      rep_x += ox / dist;
      rep_y += oy / dist;
      ++n_rep;
    } else if (dist <= w.ro(i, j)) {
      ori_x += s.directions[2 * j];
      ori_y += s.directions[2 * j + 1];
      ++n_ori;
    } else if (dist <= w.ra(i, j)) {
      att_x += ox / dist;
      att_y += oy / dist;
      ++n_att;
    }
  }
  double dx, dy;
  if (n_rep > 0) {
    dx = -rep_x / n_rep;
    dy = -rep_y / n_rep;
  } else if (n_ori > 0 && n_att > 0) {
    dx = 0.5 * (ori_x / n_ori + att_x / n_att);
    dy = 0.5 * (ori_y / n_ori + att_y / n_att);
  } else if (n_ori > 0) {
    dx = ori_x / n_ori;
    dy = ori_y / n_ori;
  } else if (n_att > 0) {
    dx = att_x / n_att;
    dy = att_y / n_att;
  } else {
    return {s.directions[2 * i], s.directions[2 * i + 1]};
  }
  const double norm = std::sqrt(dx * dx + dy * dy);
  if (norm < 1e-12)  // contributions cancelled exactly
    return {s.directions[2 * i], s.directions[2 * i + 1]};
  return {dx / norm, dy / norm};
}

/// Limits the per-step heading change to beta. Under the cap the desired
/// heading is returned as-is; above it, the current heading rotates by
/// exactly beta toward the desired side. An exact 180-degree conflict
/// rotates counterclockwise.
inline std::vector<double> clamp_turn(const std::vector<double>& current,
                                      const std::vector<double>& desired,
                                      double beta) {
  const double dot = current[0] * desired[0] + current[1] * desired[1];
  const double cross = current[0] * desired[1] - current[1] * desired[0];
  const double angle = std::atan2(std::abs(cross), dot);
  if (angle <= beta) return desired;
  const double sign = cross > 0.0 ? 1.0 : (cross < 0.0 ? -1.0 : 1.0);
  const double a = sign * beta;
  double x = current[0] * std::cos(a) - current[1] * std::sin(a);
  double y = current[0] * std::sin(a) + current[1] * std::cos(a);
  detail::normalize2(x, y);
  return {x, y};
}

/// Advances one synchronous step: every agent picks a desired heading from
/// the shared current state, turns at most beta toward it, then moves at
/// its constant speed. Out-of-bounds moves reflect off the arena walls.
inline void step(const BoidWorld& w, BoidState& s, BoidSimStats* stats = nullptr) {
  std::vector<double> next_dir(static_cast<std::size_t>(w.p) * 2);
  for (int i = 0; i < w.p; ++i) {
    const std::vector<double> cur{s.directions[2 * i], s.directions[2 * i + 1]};
    const std::vector<double> des = desired_direction(w, s, i);
    const std::vector<double> turned = clamp_turn(cur, des, w.max_turn);
    next_dir[2 * i] = turned[0];
    next_dir[2 * i + 1] = turned[1];
  }
  int* count = stats ? &stats->wall_reflections : nullptr;
  for (int i = 0; i < w.p; ++i) {
    double x = s.positions[2 * i] + w.speed[i] * next_dir[2 * i] * w.dt;
    double y = s.positions[2 * i + 1] + w.speed[i] * next_dir[2 * i + 1] * w.dt;
    detail::reflect_into_arena(x, next_dir[2 * i], w.arena, count);
    detail::reflect_into_arena(y, next_dir[2 * i + 1], w.arena, count);
    s.positions[2 * i] = x;
    s.positions[2 * i + 1] = y;
    s.directions[2 * i] = next_dir[2 * i];
    s.directions[2 * i + 1] = next_dir[2 * i + 1];
  }
}

/// Runs T steps and records positions plus velocity = speed * heading,
/// giving a positional series with d = 4 per agent.
inline TrajectorySeries simulate(const BoidWorld& w, int T,
                                 BoidSimStats* stats = nullptr) {
  if (T < 2) throw std::invalid_argument("simulate: need at least 2 steps");
  TrajectorySeries series;
  series.T = T;
  series.p = w.p;
  series.d = 4;
  series.dt = w.dt;
  series.kind = SeriesKind::positional;
  series.values.resize(static_cast<std::size_t>(T) * w.p * 4);
  BoidState s = initial_state(w);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < w.p; ++i) {
      if (!std::isfinite(s.positions[2 * i]) || !std::isfinite(s.positions[2 * i + 1]))
        throw std::runtime_error("simulate: non-finite position at step " +
                                 std::to_string(t));
      series.at(t, i, 0) = s.positions[2 * i];
      series.at(t, i, 1) = s.positions[2 * i + 1];
      series.at(t, i, 2) = w.speed[i] * s.directions[2 * i];
      series.at(t, i, 3) = w.speed[i] * s.directions[2 * i + 1];
    }
    if (t + 1 < T) step(w, s, stats);
  }
  return series;
}

}  // namespace abm
