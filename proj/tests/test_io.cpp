#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "abm/boid.hpp"
#include "abm/io.hpp"
#include "abm/kuramoto.hpp"
#include "abm/train.hpp"

using namespace abm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("abm_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int counter() {
    static int c = 0;
    return c++;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

TEST_CASE("trajectory csv round trip preserves positions") {
  TempDir tmp;
  Rng rng(2);
  const BoidWorld w = sample_world(3, rng);
  const TrajectorySeries series = simulate(w, 50);
  const std::string path = tmp.file("traj.csv");
  write_trajectory_csv(path, series);
  const TrajectorySeries loaded = read_trajectory_csv(path, series.dt);
  REQUIRE(loaded.T == series.T);
  REQUIRE(loaded.p == series.p);
  REQUIRE(loaded.d == 4);
  for (int t = 0; t < series.T; ++t)
    for (int i = 0; i < series.p; ++i)
      for (int q = 0; q < 2; ++q)
        REQUIRE(loaded.at(t, i, q) == Catch::Approx(series.at(t, i, q)).epsilon(1e-15));
  // velocities are forward differences, last step reuses the previous one
  for (int t = 0; t + 1 < series.T; ++t)
    REQUIRE(loaded.at(t, 0, 2) ==
            Catch::Approx((loaded.at(t + 1, 0, 0) - loaded.at(t, 0, 0)) / series.dt));
  REQUIRE(loaded.at(series.T - 1, 0, 2) == loaded.at(series.T - 2, 0, 2));
}

TEST_CASE("trajectory csv errors name their line") {
  TempDir tmp;
  const std::string path = tmp.file("bad.csv");
  write_lines(path, {"frame,agent,x,y", "0,0,1.0,2.0", "0,1,3.0", "1,0,1,2"});
  try {
    read_trajectory_csv(path, 0.1);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    REQUIRE(std::string(e.what()).find(":3") != std::string::npos);
  }
  write_lines(path, {"frame,agent,x,y", "0,0,1.0,oops", "0,1,1,1"});
  REQUIRE_THROWS_AS(read_trajectory_csv(path, 0.1), std::invalid_argument);
  write_lines(path, {"frame,agent,x", "0,0,1.0"});
  REQUIRE_THROWS_AS(read_trajectory_csv(path, 0.1), std::invalid_argument);
  // missing (frame, agent) combination
  write_lines(path, {"frame,agent,x,y", "0,0,1,1", "0,1,2,2", "1,0,3,3"});
  REQUIRE_THROWS_AS(read_trajectory_csv(path, 0.1), std::invalid_argument);
  // duplicate row
  write_lines(path,
              {"frame,agent,x,y", "0,0,1,1", "0,0,2,2", "1,0,3,3", "1,1,4,4"});
  REQUIRE_THROWS_AS(read_trajectory_csv(path, 0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(read_trajectory_csv(path, 0.0), std::invalid_argument);
}

TEST_CASE("phase csv round trip preserves phases") {
  TempDir tmp;
  Rng rng(3);
  const KuramotoSystem sys = sample_system(4, rng);
  const TrajectorySeries series = simulate(sys, 40);
  const std::string path = tmp.file("phase.csv");
  write_phase_csv(path, series);
  const TrajectorySeries loaded = read_phase_csv(path, series.dt);
  REQUIRE(loaded.kind == SeriesKind::phase);
  for (int t = 0; t < series.T; ++t)
    for (int i = 0; i < series.p; ++i)
      REQUIRE(loaded.at(t, i, 0) == Catch::Approx(series.at(t, i, 0)).epsilon(1e-15));
}

TEST_CASE("ground truth json round trips for both systems") {
  TempDir tmp;
  GroundTruth truth;
  truth.graph = CausalGraph(3);
  truth.graph.at(0, 1) = 1;
  truth.graph.at(1, 2) = -1;
  truth.omega = {1.5, 2.5, 3.5};
  const std::string osc = tmp.file("truth_osc.json");
  write_truth_json(osc, truth, true);
  const GroundTruth osc_loaded = read_truth_json(osc);
  REQUIRE(osc_loaded.graph.edges == truth.graph.edges);
  REQUIRE(osc_loaded.omega == truth.omega);
  const std::string pos = tmp.file("truth_pos.json");
  write_truth_json(pos, truth, false);
  const GroundTruth pos_loaded = read_truth_json(pos);
  REQUIRE(pos_loaded.graph.edges == truth.graph.edges);
  REQUIRE(pos_loaded.omega.empty());
}

TEST_CASE("gc json carries strengths, signs and the binary graph") {
  TempDir tmp;
  GCMatrix gc(2);
  gc.magnitude[gc.idx(0, 1)] = 2.0;
  gc.sign[gc.idx(0, 1)] = -1;
  gc.strengths[gc.idx(0, 1)] = -2.0;
  const CausalGraph binary = binarize(gc);
  const std::string path = tmp.file("gc.json");
  write_gc_json(path, gc, binary);
  CausalGraph loaded_binary;
  const GCMatrix loaded = read_gc_json(path, loaded_binary);
  REQUIRE(loaded.strengths == gc.strengths);
  REQUIRE(loaded.sign == gc.sign);
  REQUIRE(loaded_binary.edges == binary.edges);
}

TEST_CASE("coefficient csv round trips through the documented schema") {
  TempDir tmp;
  CoefficientTensor psi;
  psi.spec = FeatureSpec::interaction(3, 2);
  psi.K = 2;
  psi.count = 4;
  psi.psi.resize(static_cast<std::size_t>(4) * 3 * 2 * psi.slice_size());
  Rng rng(9);
  for (double& v : psi.psi) v = rng.uniform(-1.0, 1.0);
  const std::string path = tmp.file("coefficients.csv");
  write_coefficients_csv(path, psi);
  const CoefficientTensor loaded = read_coefficients_csv(path);
  REQUIRE(loaded.count == psi.count);
  REQUIRE(loaded.K == psi.K);
  REQUIRE(loaded.spec.p == 3);
  REQUIRE(loaded.spec.self_width == psi.spec.self_width);
  REQUIRE(loaded.spec.other_width == psi.spec.other_width);
  for (std::size_t i = 0; i < psi.psi.size(); ++i)
    REQUIRE(loaded.psi[i] == psi.psi[i]);
}

TEST_CASE("checkpoints restore the exact model") {
  TempDir tmp;
  const FeatureSpec spec = FeatureSpec::interaction(3, 2);
  AbmModel model(spec, ModelMode::full, 2, 31337);
  model.ignore_threshold = 0.25;
  model.learn_ignore = true;
  const std::string path = tmp.file("checkpoint.json");
  write_checkpoint_json(path, model);
  const AbmModel loaded = read_checkpoint_json(path);
  REQUIRE(loaded.spec.p == model.spec.p);
  REQUIRE(loaded.K == model.K);
  REQUIRE(loaded.ignore_threshold == model.ignore_threshold);
  REQUIRE(loaded.learn_ignore);
  for (std::size_t i = 0; i < model.mlps.size(); ++i) {
    REQUIRE(loaded.mlps[i].w1 == model.mlps[i].w1);
    REQUIRE(loaded.mlps[i].b1 == model.mlps[i].b1);
    REQUIRE(loaded.mlps[i].w2 == model.mlps[i].w2);
    REQUIRE(loaded.mlps[i].b2 == model.mlps[i].b2);
  }
  // identical coefficient slices on a probe input
  std::vector<double> f(spec.d_h, 0.3);
  const std::vector<double> s(2, 0.5);
  REQUIRE(model.coefficient_slice(1, 0, f.data(), s) ==
          loaded.coefficient_slice(1, 0, f.data(), s));
}

TEST_CASE("durations and loss csv writers emit the documented headers") {
  TempDir tmp;
  const std::string dpath = tmp.file("durations.csv");
  write_durations_csv(dpath, {{1.5, 0.5}, {0.0, 2.0}});
  std::ifstream din(dpath);
  std::string line;
  std::getline(din, line);
  REQUIRE(line == "bin,sign,duration_seconds");
  std::getline(din, line);
  REQUIRE(line == "0,attraction,1.5");

  const std::string lpath = tmp.file("loss_history.csv");
  LossBreakdown lb;
  lb.prediction = 1.0;
  lb.finalize(0.0, 0.0, 0.0);
  write_loss_csv(lpath, {lb});
  std::ifstream lin(lpath);
  std::getline(lin, line);
  REQUIRE(line == "epoch,prediction,sparsity,theory_guided,smoothing,total");
}
