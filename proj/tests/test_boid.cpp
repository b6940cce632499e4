#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "abm/boid.hpp"

using namespace abm;

namespace {

// bare world with uniform radii and no sampling noise
BoidWorld plain_world(int p, double rr, double ro, double ra) {
  BoidWorld w;
  w.p = p;
  w.relations = CausalGraph(p);
  w.speed.assign(p, 1.0);
  w.r_r.assign(static_cast<std::size_t>(p) * p, rr);
  w.r_o.assign(static_cast<std::size_t>(p) * p, ro);
  w.r_a.assign(static_cast<std::size_t>(p) * p, ra);
  w.init_positions.assign(static_cast<std::size_t>(p) * 2, 15.0);
  w.init_directions.assign(static_cast<std::size_t>(p) * 2, 0.0);
  for (int i = 0; i < p; ++i) w.init_directions[2 * i] = 1.0;
  return w;
}

}  // namespace

TEST_CASE("sampled worlds honor the relation-dependent radii") {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const BoidWorld w = sample_world(5, rng);
    for (int i = 0; i < 5; ++i) REQUIRE(w.relations.at(i, i) == 0);
    for (int observer = 0; observer < 5; ++observer) {
      double ro_seen = -1.0;
      for (int neighbor = 0; neighbor < 5; ++neighbor) {
        if (observer == neighbor) continue;
        const int rel = w.relations.at(neighbor, observer);
        REQUIRE(rel >= -1);
        REQUIRE(rel <= 1);
        // per-agent noise: r_o identical across neighbors of one observer
        if (ro_seen < 0.0)
          ro_seen = w.ro(observer, neighbor);
        else
          REQUIRE(w.ro(observer, neighbor) == ro_seen);
        REQUIRE(w.ro(observer, neighbor) == Catch::Approx(2.0).margin(1.0));
        REQUIRE(w.ra(observer, neighbor) == Catch::Approx(8.0).margin(1.0));
        if (rel > 0)
          REQUIRE(w.rr(observer, neighbor) == Catch::Approx(1.0).margin(1.0));
        else if (rel < 0) {
          REQUIRE(w.rr(observer, neighbor) == Catch::Approx(10.0).margin(1.0));
          REQUIRE(w.rr(observer, neighbor) > w.ra(observer, neighbor));
        }
      }
      REQUIRE(w.speed[observer] == Catch::Approx(1.0).margin(1.0));
      REQUIRE(w.speed[observer] > 0.0);
    }
    for (int i = 0; i < 5; ++i) {
      const double nx = w.init_directions[2 * i], ny = w.init_directions[2 * i + 1];
      REQUIRE(std::abs(std::sqrt(nx * nx + ny * ny) - 1.0) < 1e-12);
      REQUIRE(w.init_positions[2 * i] >= 0.0);
      REQUIRE(w.init_positions[2 * i] <= 30.0);
    }
  }
  REQUIRE_THROWS_AS(sample_world(1, rng), std::invalid_argument);
}

TEST_CASE("repulsion points away from a close neighbor") {
  BoidWorld w = plain_world(2, 1.5, 2.0, 8.0);
  w.relations.at(1, 0) = 1;  // neighbor 1 affects observer 0
  BoidState s = initial_state(w);
  s.positions = {0.0, 0.0, 1.0, 0.0};  // offset (1, 0) within r_r
  s.directions = {1.0, 0.0, 1.0, 0.0};
  const auto d = desired_direction(w, s, 0);
  REQUIRE(d[0] == Catch::Approx(-1.0));
  REQUIRE(d[1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("empty zones keep the current heading") {
  BoidWorld w = plain_world(2, 1.0, 2.0, 8.0);
  w.relations.at(1, 0) = 1;
  BoidState s = initial_state(w);
  s.positions = {0.0, 0.0, 20.0, 0.0};  // far outside every zone
  s.directions = {0.6, 0.8, 1.0, 0.0};
  const auto d = desired_direction(w, s, 0);
  REQUIRE(d[0] == 0.6);
  REQUIRE(d[1] == 0.8);
}

TEST_CASE("orientation and attraction shells combine with the half factor") {
  BoidWorld w = plain_world(3, 1.0, 2.0, 8.0);
  w.relations.at(1, 0) = 1;
  w.relations.at(2, 0) = 1;
  BoidState s = initial_state(w);
  // neighbor 1 in the orientation shell heading (0,1); neighbor 2 in the
  // attraction shell at offset (1,0) scaled beyond r_o
  s.positions = {0.0, 0.0, 0.0, 1.5, 5.0, 0.0};
  s.directions = {1.0, 0.0, 0.0, 1.0, 1.0, 0.0};
  const auto d = desired_direction(w, s, 0);
  const double inv_sqrt2 = 0.7071067811865476;
  REQUIRE(d[0] == Catch::Approx(inv_sqrt2).epsilon(1e-12));
  REQUIRE(d[1] == Catch::Approx(inv_sqrt2).epsilon(1e-12));
}

TEST_CASE("masked neighbors never influence the desired direction") {
  BoidWorld with_mask = plain_world(3, 2.0, 3.0, 8.0);
  with_mask.relations.at(1, 0) = 1;
  with_mask.relations.at(2, 0) = 0;  // masked
  BoidState s = initial_state(with_mask);
  s.positions = {0.0, 0.0, 1.0, 0.0, 0.5, 0.5};
  s.directions = {1.0, 0.0, 0.0, 1.0, -1.0, 0.0};
  const auto masked = desired_direction(with_mask, s, 0);
  BoidWorld without = plain_world(2, 2.0, 3.0, 8.0);
  without.relations.at(1, 0) = 1;
  BoidState s2;
  s2.positions = {0.0, 0.0, 1.0, 0.0};
  s2.directions = {1.0, 0.0, 0.0, 1.0};
  const auto removed = desired_direction(without, s2, 0);
  REQUIRE(masked[0] == removed[0]);
  REQUIRE(masked[1] == removed[1]);
}

TEST_CASE("clamp_turn passes small turns through and caps large ones") {
  const double beta = 30.0 * M_PI / 180.0;
  // 10 degrees: under the cap
  const std::vector<double> cur{1.0, 0.0};
  const double a10 = 10.0 * M_PI / 180.0;
  const std::vector<double> des10{std::cos(a10), std::sin(a10)};
  REQUIRE(clamp_turn(cur, des10, beta) == des10);
  // 45 degrees: lands at exactly 30 on the desired side
  const double a45 = M_PI / 4.0;
  const std::vector<double> des45{std::cos(a45), std::sin(a45)};
  const auto out = clamp_turn(cur, des45, beta);
  REQUIRE(out[0] * cur[0] + out[1] * cur[1] == Catch::Approx(std::cos(beta)).epsilon(1e-12));
  REQUIRE(out[1] > 0.0);
  // mirrored side
  const std::vector<double> des45m{std::cos(-a45), std::sin(-a45)};
  const auto outm = clamp_turn(cur, des45m, beta);
  REQUIRE(outm[1] < 0.0);
}

TEST_CASE("a 180 degree conflict turns counterclockwise") {
  const double beta = 30.0 * M_PI / 180.0;
  const std::vector<double> cur{1.0, 0.0};
  const std::vector<double> des{-1.0, 0.0};
  const auto out = clamp_turn(cur, des, beta);
  // oracle: dot with current is cos(beta); counterclockwise means y > 0
  REQUIRE(out[0] * cur[0] + out[1] * cur[1] == Catch::Approx(std::cos(beta)).epsilon(1e-12));
  REQUIRE(out[1] == Catch::Approx(std::sin(beta)).epsilon(1e-12));
}

TEST_CASE("an isolated agent moves in a straight line at speed*dt") {
  BoidWorld w = plain_world(2, 1.0, 2.0, 8.0);  // relations all zero
  w.speed = {0.8, 1.2};
  BoidState s = initial_state(w);
  s.positions = {10.0, 10.0, 20.0, 20.0};
  s.directions = {0.6, 0.8, 1.0, 0.0};
  w.init_positions = s.positions;
  w.init_directions = s.directions;
  const TrajectorySeries series = simulate(w, 100);
  for (int t = 0; t + 1 < 100; ++t)
    for (int i = 0; i < 2; ++i) {
      const double dx = series.at(t + 1, i, 0) - series.at(t, i, 0);
      const double dy = series.at(t + 1, i, 1) - series.at(t, i, 1);
      REQUIRE(std::sqrt(dx * dx + dy * dy) ==
              Catch::Approx(w.speed[i] * w.dt).epsilon(1e-12));
    }
}

TEST_CASE("headings stay unit length and turns stay capped over a real trial") {
  Rng rng(4242);
  const BoidWorld w = sample_world(5, rng);
  BoidSimStats stats;
  const TrajectorySeries series = simulate(w, 200, &stats);
  REQUIRE(stats.wall_reflections == 0);  // chosen seed stays interior
  for (int t = 0; t < 200; ++t)
    for (int i = 0; i < 5; ++i) {
      const double vx = series.at(t, i, 2) / w.speed[i];
      const double vy = series.at(t, i, 3) / w.speed[i];
      REQUIRE(std::abs(std::sqrt(vx * vx + vy * vy) - 1.0) < 1e-9);
    }
  for (int t = 0; t + 1 < 200; ++t)
    for (int i = 0; i < 5; ++i) {
      const double ax = series.at(t, i, 2) / w.speed[i];
      const double ay = series.at(t, i, 3) / w.speed[i];
      const double bx = series.at(t + 1, i, 2) / w.speed[i];
      const double by = series.at(t + 1, i, 3) / w.speed[i];
      double dot = ax * bx + ay * by;
      dot = std::min(1.0, std::max(-1.0, dot));
      REQUIRE(std::acos(dot) <= w.max_turn + 1e-9);
    }
}

TEST_CASE("an ignored agent can be removed without changing the others") {
  BoidWorld big = plain_world(3, 1.0, 2.0, 8.0);
  // agents 0 and 1 interact; agent 2 is masked in every direction
  big.relations.at(0, 1) = 1;
  big.relations.at(1, 0) = -1;
  big.init_positions = {14.0, 15.0, 16.0, 15.0, 15.0, 18.0};
  big.init_directions = {1.0, 0.0, -1.0, 0.0, 0.0, 1.0};
  big.r_r.assign(9, 1.0);
  const TrajectorySeries with3 = simulate(big, 150);

  BoidWorld small = plain_world(2, 1.0, 2.0, 8.0);
  small.relations.at(0, 1) = 1;
  small.relations.at(1, 0) = -1;
  small.init_positions = {14.0, 15.0, 16.0, 15.0};
  small.init_directions = {1.0, 0.0, -1.0, 0.0};
  const TrajectorySeries with2 = simulate(small, 150);

  for (int t = 0; t < 150; ++t)
    for (int i = 0; i < 2; ++i)
      for (int q = 0; q < 4; ++q)
        REQUIRE(with3.at(t, i, q) == with2.at(t, i, q));
}

TEST_CASE("mutually repulsive agents separate") {
  BoidWorld w = plain_world(2, 10.0, 2.0, 8.0);
  w.relations.at(0, 1) = -1;
  w.relations.at(1, 0) = -1;
  w.init_positions = {14.0, 15.0, 16.0, 15.0};
  w.init_directions = {1.0, 0.0, -1.0, 0.0};  // head-on approach
  const TrajectorySeries series = simulate(w, 50);
  const double d0 = std::abs(series.at(0, 1, 0) - series.at(0, 0, 0));
  const double dx = series.at(49, 1, 0) - series.at(49, 0, 0);
  const double dy = series.at(49, 1, 1) - series.at(49, 0, 1);
  REQUIRE(std::sqrt(dx * dx + dy * dy) > d0);
}

TEST_CASE("boid simulate validates its inputs") {
  BoidWorld w = plain_world(2, 1.0, 2.0, 8.0);
  REQUIRE_THROWS_AS(simulate(w, 1), std::invalid_argument);
}
