#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "abm/rng.hpp"

namespace abm {

/// Hidden-layer nonlinearity. tanh is the default everywhere; identity
/// exists for closed-form gradient tests.
enum class Activation { tanh, identity };

/// Two-layer perceptron: out = W2 * act(W1 * x + b1) + b2.
/// Parameters are initialized uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
struct Mlp {
  int in_dim = 0, hidden_dim = 0, out_dim = 0;
  Activation act = Activation::tanh;
  std::vector<double> w1;  // [hidden][in]
  std::vector<double> b1;  // [hidden]
  std::vector<double> w2;  // [out][hidden]
  std::vector<double> b2;  // [out]

  Mlp() = default;
  Mlp(int in, int hidden, int out, Activation a = Activation::tanh)
      : in_dim(in), hidden_dim(hidden), out_dim(out), act(a),
        w1(static_cast<std::size_t>(hidden) * in),
        b1(hidden),
        w2(static_cast<std::size_t>(out) * hidden),
        b2(out) {}

  /// First layer: uniform with 1/sqrt(fan_in) scaling. Output layer:
  /// the same shape shrunk by kOutputInitScale, so coefficients start
  /// near zero and only grow where the data demands them. That keeps the
  /// coefficient read-out free of initialization noise under the short
  /// fixed training schedule.
  static constexpr double kOutputInitScale = 1e-3;

  void init(Rng& rng) {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& v : w1) v = rng.uniform(-s1, s1);
    for (double& v : b1) v = rng.uniform(-s1, s1);
    const double s2 =
        kOutputInitScale / std::sqrt(static_cast<double>(hidden_dim));
    for (double& v : w2) v = rng.uniform(-s2, s2);
    for (double& v : b2) v = rng.uniform(-s2, s2);
  }

  std::size_t param_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }
};

/// Per-evaluation scratch kept around for the backward pass.
struct MlpCache {
  std::vector<double> hidden;  // post-activation
  std::vector<double> out;
};

inline void mlp_forward(const Mlp& m, const double* x, MlpCache& cache) {
  cache.hidden.resize(m.hidden_dim);
  cache.out.resize(m.out_dim);
  for (int h = 0; h < m.hidden_dim; ++h) {
    double z = m.b1[h];
    const double* row = &m.w1[static_cast<std::size_t>(h) * m.in_dim];
    for (int q = 0; q < m.in_dim; ++q) z += row[q] * x[q];
    cache.hidden[h] = m.act == Activation::tanh ? std::tanh(z) : z;
  }
  for (int u = 0; u < m.out_dim; ++u) {
    double z = m.b2[u];
    const double* row = &m.w2[static_cast<std::size_t>(u) * m.hidden_dim];
    for (int h = 0; h < m.hidden_dim; ++h) z += row[h] * cache.hidden[h];
    cache.out[u] = z;
  }
}

inline std::vector<double> mlp_forward(const Mlp& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.in_dim)
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  MlpCache cache;
  mlp_forward(m, x.data(), cache);
  return cache.out;
}

/// Gradient buffers shaped like the parameters. Accumulating: callers zero
/// them once per optimization step.
struct MlpGrads {
  std::vector<double> w1, b1, w2, b2;

  explicit MlpGrads(const Mlp& m)
      : w1(m.w1.size(), 0.0), b1(m.b1.size(), 0.0),
        w2(m.w2.size(), 0.0), b2(m.b2.size(), 0.0) {}

  void zero() {
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
    std::fill(w2.begin(), w2.end(), 0.0);
    std::fill(b2.begin(), b2.end(), 0.0);
  }
};

/// Exact reverse-mode gradients of the forward map. `upstream` has out_dim
/// entries; parameter gradients accumulate into `g`; the gradient w.r.t.
/// the input is added to `x_grad` when given. `scratch` avoids per-call
/// allocation in hot loops.
inline void mlp_backward_scratch(const Mlp& m, const double* x,
                                 const double* hidden, const double* upstream,
                                 MlpGrads& g, std::vector<double>& scratch,
                                 double* x_grad = nullptr) {
  scratch.assign(m.hidden_dim, 0.0);
  double* dhidden = scratch.data();
  for (int u = 0; u < m.out_dim; ++u) {
    const double gu = upstream[u];
    g.b2[u] += gu;
    double* w2g = &g.w2[static_cast<std::size_t>(u) * m.hidden_dim];
    const double* w2row = &m.w2[static_cast<std::size_t>(u) * m.hidden_dim];
    for (int h = 0; h < m.hidden_dim; ++h) {
      w2g[h] += gu * hidden[h];
      dhidden[h] += gu * w2row[h];
    }
  }
  for (int h = 0; h < m.hidden_dim; ++h) {
    double dz = dhidden[h];
    if (m.act == Activation::tanh) {
      const double a = hidden[h];
      dz *= 1.0 - a * a;
    }
    g.b1[h] += dz;
    double* w1g = &g.w1[static_cast<std::size_t>(h) * m.in_dim];
    const double* w1row = &m.w1[static_cast<std::size_t>(h) * m.in_dim];
    for (int q = 0; q < m.in_dim; ++q) {
      w1g[q] += dz * x[q];
      if (x_grad) x_grad[q] += dz * w1row[q];
    }
  }
}

inline void mlp_backward(const Mlp& m, const double* x, const MlpCache& cache,
                         const double* upstream, MlpGrads& g,
                         double* x_grad = nullptr) {
  std::vector<double> scratch;
  mlp_backward_scratch(m, x, cache.hidden.data(), upstream, g, scratch, x_grad);
}

/// Adam optimizer state over a flat view of model parameters.
/// The effective learning rate at epoch e is lr * decay^e.
struct AdamConfig {
  double lr = 1e-4;
  double decay = 0.995;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// A mutable view over parameter chunks and their gradient chunks, so the
/// optimizer can treat a whole model as one flat vector.
struct ParamView {
  std::vector<std::pair<double*, std::size_t>> params;
  std::vector<std::pair<const double*, std::size_t>> grads;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& c : params) n += c.second;
    return n;
  }

  void add(std::vector<double>& p, const std::vector<double>& g) {
    params.emplace_back(p.data(), p.size());
    grads.emplace_back(g.data(), g.size());
  }
  void add_scalar(double* p, const double* g) {
    params.emplace_back(p, 1);
    grads.emplace_back(g, 1);
  }
};

inline double adam_effective_lr(const AdamConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.decay, epoch);
}

/// One Adam update with bias correction. Throws on non-finite gradients.
inline void adam_step(const ParamView& view, AdamState& state, int epoch,
                      const AdamConfig& cfg = {}) {
  const double lr = adam_effective_lr(cfg, epoch);
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  std::size_t offset = 0;
  for (std::size_t c = 0; c < view.params.size(); ++c) {
    double* p = view.params[c].first;
    const double* g = view.grads[c].first;
    const std::size_t n = view.params[c].second;
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(g[k]))
        throw std::runtime_error("adam_step: non-finite gradient");
      double& m = state.m[offset + k];
      double& v = state.v[offset + k];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[k];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[k] * g[k];
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    offset += n;
  }
}

}  // namespace abm
