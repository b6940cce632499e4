#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "abm/gc.hpp"
#include "abm/loss.hpp"
#include "abm/model.hpp"
#include "abm/types.hpp"

namespace abm {

using json = nlohmann::json;

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(where + ": bad numeric value '" + s + "'");
  }
}

inline long parse_long(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(where + ": bad integer value '" + s + "'");
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return in;
}

}  // namespace detail

/// Reads `frame,agent,x,y[,z]` rows into a positional series. Frames must
/// be contiguous from 0 with every agent 0..p-1 present once per frame.
/// Velocities are forward differences v_t = (p_{t+1} - p_t) / dt, with the
/// final step reusing the previous velocity.
inline TrajectorySeries read_trajectory_csv(const std::string& path, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("read_trajectory_csv: dt must be > 0");
  std::ifstream in = detail::open_in(path);
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ": empty file");
  ++line_no;
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 4 || header.size() > 5 || header[0] != "frame" ||
      header[1] != "agent" || header[2] != "x" || header[3] != "y" ||
      (header.size() == 5 && header[4] != "z"))
    throw std::invalid_argument(path + ":1: expected header frame,agent,x,y[,z]");
  const int ds = static_cast<int>(header.size()) - 2;

  struct Row {
    long frame, agent;
    double coord[3];
  };
  std::vector<Row> rows;
  long max_frame = -1, max_agent = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != ds + 2)
      throw std::invalid_argument(where + ": expected " + std::to_string(ds + 2) +
                                  " columns, got " + std::to_string(cells.size()));
    Row r{};
    r.frame = detail::parse_long(cells[0], where);
    r.agent = detail::parse_long(cells[1], where);
    for (int q = 0; q < ds; ++q)
      r.coord[q] = detail::parse_double(cells[2 + q], where);
    if (r.frame < 0 || r.agent < 0)
      throw std::invalid_argument(where + ": negative frame or agent");
    max_frame = std::max(max_frame, r.frame);
    max_agent = std::max(max_agent, r.agent);
    rows.push_back(r);
  }
  const long T = max_frame + 1, p = max_agent + 1;
  if (T < 2 || p < 1) throw std::invalid_argument(path + ": not enough data");
  if (static_cast<long>(rows.size()) != T * p)
    throw std::invalid_argument(path + ": expected " + std::to_string(T * p) +
                                " rows for " + std::to_string(p) + " agents x " +
                                std::to_string(T) + " frames, got " +
                                std::to_string(rows.size()));
  std::vector<char> seen(static_cast<std::size_t>(T) * p, 0);
  TrajectorySeries series;
  series.T = static_cast<int>(T);
  series.p = static_cast<int>(p);
  series.d = 2 * ds;
  series.dt = dt;
  series.kind = SeriesKind::positional;
  series.values.assign(static_cast<std::size_t>(T) * p * series.d, 0.0);
  for (const Row& r : rows) {
    char& flag = seen[static_cast<std::size_t>(r.frame) * p + r.agent];
    if (flag)
      throw std::invalid_argument(path + ": duplicate (frame,agent) = (" +
                                  std::to_string(r.frame) + "," +
                                  std::to_string(r.agent) + ")");
    flag = 1;
    for (int q = 0; q < ds; ++q)
      series.at(static_cast<int>(r.frame), static_cast<int>(r.agent), q) =
          r.coord[q];
  }
  for (int t = 0; t < series.T; ++t)
    for (int i = 0; i < series.p; ++i)
      for (int q = 0; q < ds; ++q) {
        const double v = t + 1 < series.T
                             ? (series.at(t + 1, i, q) - series.at(t, i, q)) / dt
                             : series.at(t - 1, i, ds + q);
        series.at(t, i, ds + q) = v;
      }
  series.validate();
  return series;
}

inline void write_trajectory_csv(const std::string& path,
                                 const TrajectorySeries& series) {
  if (series.kind != SeriesKind::positional)
    throw std::invalid_argument("write_trajectory_csv: positional series required");
  const int ds = series.spatial_dims();
  std::ofstream out = detail::open_out(path);
  out << (ds == 3 ? "frame,agent,x,y,z\n" : "frame,agent,x,y\n");
  for (int t = 0; t < series.T; ++t)
    for (int i = 0; i < series.p; ++i) {
      out << t << ',' << i;
      for (int q = 0; q < ds; ++q)
        out << ',' << detail::fmt_double(series.at(t, i, q));
      out << '\n';
    }
}

/// Reads `frame,agent,phase` rows; the rate channel is the forward
/// difference, final step reusing the previous one.
inline TrajectorySeries read_phase_csv(const std::string& path, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("read_phase_csv: dt must be > 0");
  std::ifstream in = detail::open_in(path);
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  ++line_no;
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() != 3 || header[0] != "frame" || header[1] != "agent" ||
      header[2] != "phase")
    throw std::invalid_argument(path + ":1: expected header frame,agent,phase");
  std::vector<std::tuple<long, long, double>> rows;
  long max_frame = -1, max_agent = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != 3)
      throw std::invalid_argument(where + ": expected 3 columns");
    const long frame = detail::parse_long(cells[0], where);
    const long agent = detail::parse_long(cells[1], where);
    const double phase = detail::parse_double(cells[2], where);
    max_frame = std::max(max_frame, frame);
    max_agent = std::max(max_agent, agent);
    rows.emplace_back(frame, agent, phase);
  }
  const long T = max_frame + 1, p = max_agent + 1;
  if (T < 2 || p < 1) throw std::invalid_argument(path + ": not enough data");
  if (static_cast<long>(rows.size()) != T * p)
    throw std::invalid_argument(path + ": incomplete (frame,agent) grid");
  TrajectorySeries series;
  series.T = static_cast<int>(T);
  series.p = static_cast<int>(p);
  series.d = 2;
  series.dt = dt;
  series.kind = SeriesKind::phase;
  series.values.assign(static_cast<std::size_t>(T) * p * 2, 0.0);
  for (const auto& [frame, agent, phase] : rows)
    series.at(static_cast<int>(frame), static_cast<int>(agent), 0) = phase;
  for (int t = 0; t < series.T; ++t)
    for (int i = 0; i < series.p; ++i)
      series.at(t, i, 1) =
          t + 1 < series.T
              ? (series.at(t + 1, i, 0) - series.at(t, i, 0)) / dt
              : series.at(t - 1, i, 1);
  series.validate();
  return series;
}

inline void write_phase_csv(const std::string& path, const TrajectorySeries& series) {
  if (series.kind != SeriesKind::phase)
    throw std::invalid_argument("write_phase_csv: phase series required");
  std::ofstream out = detail::open_out(path);
  out << "frame,agent,phase\n";
  for (int t = 0; t < series.T; ++t)
    for (int i = 0; i < series.p; ++i)
      out << t << ',' << i << ',' << detail::fmt_double(series.at(t, i, 0)) << '\n';
}

/// Ground truth: {p, relations|edges: [[...]], omega: [...] (oscillators)}.
struct GroundTruth {
  CausalGraph graph;
  std::vector<double> omega;  // empty for positional systems
};

inline void write_truth_json(const std::string& path, const GroundTruth& truth,
                             bool oscillator) {
  json j;
  j["p"] = truth.graph.p;
  json mat = json::array();
  for (int i = 0; i < truth.graph.p; ++i) {
    json row = json::array();
    for (int jj = 0; jj < truth.graph.p; ++jj) row.push_back(truth.graph.at(i, jj));
    mat.push_back(row);
  }
  j[oscillator ? "edges" : "relations"] = mat;
  if (oscillator) j["omega"] = truth.omega;
  detail::open_out(path) << j.dump(2) << '\n';
}

inline GroundTruth read_truth_json(const std::string& path) {
  json j = json::parse(detail::open_in(path));
  GroundTruth truth;
  const int p = j.at("p").get<int>();
  truth.graph = CausalGraph(p);
  const json& mat = j.contains("relations") ? j.at("relations") : j.at("edges");
  for (int i = 0; i < p; ++i)
    for (int jj = 0; jj < p; ++jj)
      truth.graph.at(i, jj) = mat.at(i).at(jj).get<int>();
  truth.graph.validate();
  if (j.contains("omega")) truth.omega = j.at("omega").get<std::vector<double>>();
  return truth;
}

inline void write_gc_json(const std::string& path, const GCMatrix& gc,
                          const CausalGraph& binary) {
  json j;
  j["p"] = gc.p;
  auto matrix = [&](auto get) {
    json m = json::array();
    for (int i = 0; i < gc.p; ++i) {
      json row = json::array();
      for (int jj = 0; jj < gc.p; ++jj) row.push_back(get(i, jj));
      m.push_back(row);
    }
    return m;
  };
  j["strengths"] = matrix([&](int i, int jj) { return gc.strengths[gc.idx(i, jj)]; });
  j["signs"] = matrix([&](int i, int jj) { return gc.sign[gc.idx(i, jj)]; });
  j["binary"] = matrix([&](int i, int jj) { return binary.at(i, jj); });
  detail::open_out(path) << j.dump(2) << '\n';
}

/// Coefficient tensor rows `t,i,k,u,j,q,value`: target step t (window
/// index + K), target agent i, lag k in 1..K, output dim u, source agent
/// j (j == i is the self block), in-block column q.
inline void write_coefficients_csv(const std::string& path,
                                   const CoefficientTensor& psi) {
  std::ofstream out = detail::open_out(path);
  out << "t,i,k,u,j,q,value\n";
  const FeatureSpec& spec = psi.spec;
  for (int m = 0; m < psi.count; ++m)
    for (int i = 0; i < spec.p; ++i)
      for (int k_row = 0; k_row < psi.K; ++k_row)
        for (int u = 0; u < spec.d_out; ++u)
          for (int j = 0; j < spec.p; ++j) {
            const int width = j == i ? spec.self_width : spec.other_width;
            const int col = spec.block_col(i, j);
            for (int q = 0; q < width; ++q)
              out << m + psi.K << ',' << i << ',' << k_row + 1 << ',' << u << ','
                  << j << ',' << q << ','
                  << detail::fmt_double(psi.at(m, i, k_row, u, col + q)) << '\n';
          }
}

/// Inverse of write_coefficients_csv. Shapes are recovered from the row
/// indices; the first target step must equal the recovered lag count.
inline CoefficientTensor read_coefficients_csv(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "t,i,k,u,j,q,value")
    throw std::invalid_argument(path + ":1: expected header t,i,k,u,j,q,value");
  struct Row {
    int t, i, k, u, j, q;
    double value;
  };
  std::vector<Row> rows;
  int max_t = 0, min_t = 1 << 30, max_i = 0, max_k = 0, max_u = 0;
  int self_w = 0, other_w = 0;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 7)
      throw std::invalid_argument(where + ": expected 7 columns");
    Row r{};
    r.t = static_cast<int>(detail::parse_long(cells[0], where));
    r.i = static_cast<int>(detail::parse_long(cells[1], where));
    r.k = static_cast<int>(detail::parse_long(cells[2], where));
    r.u = static_cast<int>(detail::parse_long(cells[3], where));
    r.j = static_cast<int>(detail::parse_long(cells[4], where));
    r.q = static_cast<int>(detail::parse_long(cells[5], where));
    r.value = detail::parse_double(cells[6], where);
    max_t = std::max(max_t, r.t);
    min_t = std::min(min_t, r.t);
    max_i = std::max(max_i, std::max(r.i, r.j));
    max_k = std::max(max_k, r.k);
    max_u = std::max(max_u, r.u);
    if (r.i == r.j)
      self_w = std::max(self_w, r.q + 1);
    else
      other_w = std::max(other_w, r.q + 1);
    rows.push_back(r);
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
  CoefficientTensor psi;
  psi.spec.mode = FeatureMode::raw_state;  // layout info only
  psi.spec.p = max_i + 1;
  psi.spec.d_out = max_u + 1;
  psi.spec.self_width = self_w;
  psi.spec.other_width = other_w;
  psi.spec.d_h = self_w + other_w * (psi.spec.p - 1);
  psi.spec.spatial = psi.spec.d_out;
  psi.K = max_k;
  psi.count = max_t - min_t + 1;
  if (min_t != psi.K)
    throw std::invalid_argument(path + ": first target step must equal K");
  psi.psi.assign(static_cast<std::size_t>(psi.count) * psi.spec.p * psi.K *
                     psi.slice_size(),
                 0.0);
  for (const Row& r : rows)
    psi.at(r.t - psi.K, r.i, r.k - 1, r.u, psi.spec.block_col(r.i, r.j) + r.q) =
        r.value;
  return psi;
}

inline GCMatrix read_gc_json(const std::string& path, CausalGraph& binary) {
  json j = json::parse(detail::open_in(path));
  const int p = j.at("p").get<int>();
  GCMatrix gc(p);
  binary = CausalGraph(p);
  for (int i = 0; i < p; ++i)
    for (int jj = 0; jj < p; ++jj) {
      gc.strengths[gc.idx(i, jj)] = j.at("strengths").at(i).at(jj).get<double>();
      gc.sign[gc.idx(i, jj)] = j.at("signs").at(i).at(jj).get<int>();
      gc.magnitude[gc.idx(i, jj)] = std::abs(gc.strengths[gc.idx(i, jj)]);
      binary.at(i, jj) = j.at("binary").at(i).at(jj).get<int>();
    }
  return gc;
}

inline void write_trace_csv(const std::string& path, const EffectTrace& trace,
                            int K) {
  std::ofstream out = detail::open_out(path);
  out << "t,i,j,value\n";
  for (int t = 0; t < trace.count; ++t)
    for (int i = 0; i < trace.p; ++i)
      for (int j = 0; j < trace.p; ++j) {
        if (i == j) continue;
        out << t + K << ',' << i << ',' << j << ','
            << detail::fmt_double(trace.at(t, i, j)) << '\n';
      }
}

inline void write_durations_csv(const std::string& path,
                                const std::vector<DurationBin>& bins) {
  std::ofstream out = detail::open_out(path);
  out << "bin,sign,duration_seconds\n";
  for (std::size_t b = 0; b < bins.size(); ++b) {
    out << b << ",attraction," << detail::fmt_double(bins[b].attraction_seconds)
        << '\n';
    out << b << ",repulsion," << detail::fmt_double(bins[b].repulsion_seconds)
        << '\n';
  }
}

inline void write_loss_csv(const std::string& path,
                           const std::vector<LossBreakdown>& history) {
  std::ofstream out = detail::open_out(path);
  out << "epoch,prediction,sparsity,theory_guided,smoothing,total\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out << e << ',' << detail::fmt_double(history[e].prediction) << ','
        << detail::fmt_double(history[e].sparsity) << ','
        << detail::fmt_double(history[e].theory_guided) << ','
        << detail::fmt_double(history[e].smoothing) << ','
        << detail::fmt_double(history[e].total) << '\n';
}

/// Model checkpoint as a JSON parameter list with a shape header.
inline void write_checkpoint_json(const std::string& path, const AbmModel& model) {
  json j;
  j["feature_mode"] = static_cast<int>(model.spec.mode);
  j["mode"] = static_cast<int>(model.mode);
  j["p"] = model.spec.p;
  j["spatial"] = model.spec.spatial;
  j["d_out"] = model.spec.d_out;
  j["self_width"] = model.spec.self_width;
  j["other_width"] = model.spec.other_width;
  j["d_h"] = model.spec.d_h;
  j["K"] = model.K;
  j["hidden"] = model.hidden;
  j["nav_gain_speed"] = model.nav_gain_speed;
  j["nav_gain_dist"] = model.nav_gain_dist;
  j["ignore_threshold"] = model.ignore_threshold;
  j["learn_ignore"] = model.learn_ignore;
  json nets = json::array();
  for (const Mlp& m : model.mlps) {
    json net;
    net["in"] = m.in_dim;
    net["hidden"] = m.hidden_dim;
    net["out"] = m.out_dim;
    net["w1"] = m.w1;
    net["b1"] = m.b1;
    net["w2"] = m.w2;
    net["b2"] = m.b2;
    nets.push_back(std::move(net));
  }
  j["mlps"] = std::move(nets);
  detail::open_out(path) << j.dump() << '\n';
}

inline AbmModel read_checkpoint_json(const std::string& path) {
  json j = json::parse(detail::open_in(path));
  AbmModel model;
  model.spec.mode = static_cast<FeatureMode>(j.at("feature_mode").get<int>());
  model.mode = static_cast<ModelMode>(j.at("mode").get<int>());
  model.spec.p = j.at("p").get<int>();
  model.spec.spatial = j.at("spatial").get<int>();
  model.spec.d_out = j.at("d_out").get<int>();
  model.spec.self_width = j.at("self_width").get<int>();
  model.spec.other_width = j.at("other_width").get<int>();
  model.spec.d_h = j.at("d_h").get<int>();
  model.K = j.at("K").get<int>();
  model.hidden = j.at("hidden").get<int>();
  model.nav_gain_speed = j.at("nav_gain_speed").get<double>();
  model.nav_gain_dist = j.at("nav_gain_dist").get<double>();
  model.ignore_threshold = j.at("ignore_threshold").get<double>();
  model.learn_ignore = j.at("learn_ignore").get<bool>();
  for (const json& net : j.at("mlps")) {
    Mlp m(net.at("in").get<int>(), net.at("hidden").get<int>(),
          net.at("out").get<int>());
    m.w1 = net.at("w1").get<std::vector<double>>();
    m.b1 = net.at("b1").get<std::vector<double>>();
    m.w2 = net.at("w2").get<std::vector<double>>();
    m.b2 = net.at("b2").get<std::vector<double>>();
    if (m.w1.size() != static_cast<std::size_t>(m.hidden_dim) * m.in_dim ||
        m.w2.size() != static_cast<std::size_t>(m.out_dim) * m.hidden_dim)
      throw std::invalid_argument(path + ": checkpoint shape mismatch");
    model.mlps.push_back(std::move(m));
  }
  if (model.mlps.size() != static_cast<std::size_t>(model.spec.p) * model.K)
    throw std::invalid_argument(path + ": wrong network count");
  return model;
}

}  // namespace abm
