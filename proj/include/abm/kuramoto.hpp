#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "abm/rng.hpp"
#include "abm/types.hpp"

namespace abm {

/// Phase-coupled oscillator network:
///   dphi_i/dt = omega_i + sum_{j != i} k_ij * sin(phi_i - phi_j)
struct KuramotoSystem {
  int p = 0;
  std::vector<double> omega;     // intrinsic frequencies, rad/s
  std::vector<double> coupling;  // [p][p], symmetric, zero diagonal
  std::vector<double> phi0;      // initial phases, rad

  double k(int i, int j) const {
    return coupling[static_cast<std::size_t>(i) * p + j];
  }
};

constexpr double kKuramotoStep = 0.01;  // RK4 step size, seconds

/// Draws a random system: omega ~ U[1,10), phi0 ~ U[0,2pi), and each
/// unordered pair coupled with probability 0.5 at strength 1 (undirected).
inline KuramotoSystem sample_system(int p, Rng& rng) {
  if (p < 2) throw std::invalid_argument("sample_system: need at least 2 oscillators");
  KuramotoSystem sys;
  sys.p = p;
  sys.omega.resize(p);
  sys.phi0.resize(p);
  sys.coupling.assign(static_cast<std::size_t>(p) * p, 0.0);
  for (int i = 0; i < p; ++i) sys.omega[i] = rng.uniform(1.0, 10.0);
  for (int i = 0; i < p; ++i)
    sys.phi0[i] = rng.uniform(0.0, 6.283185307179586476925286766559);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (rng.uniform() < 0.5) {
        sys.coupling[static_cast<std::size_t>(i) * p + j] = 1.0;
        sys.coupling[static_cast<std::size_t>(j) * p + i] = 1.0;
      }
  return sys;
}

/// Right-hand side of the oscillator ODE.
inline std::vector<double> derivative(const KuramotoSystem& sys,
                                      const std::vector<double>& phi) {
  std::vector<double> dphi(sys.p);
  for (int i = 0; i < sys.p; ++i) {
    double acc = sys.omega[i];
    for (int j = 0; j < sys.p; ++j) {
      if (j == i) continue;
      const double kij = sys.k(i, j);
      if (kij != 0.0) acc += kij * std::sin(phi[i] - phi[j]);
    }
    dphi[i] = acc;
  }
  return dphi;
}

/// Integrates T steps of classic RK4 at h = 0.01 and records, per step,
/// the phase and the derivative evaluated at that phase. Phases are left
/// unwrapped so the rate stays continuous.
inline TrajectorySeries simulate(const KuramotoSystem& sys, int T) {
  if (T < 2) throw std::invalid_argument("simulate: need at least 2 steps");
  TrajectorySeries series;
  series.T = T;
  series.p = sys.p;
  series.d = 2;  // [phase, rate]
  series.dt = kKuramotoStep;
  series.kind = SeriesKind::phase;
  series.values.resize(static_cast<std::size_t>(T) * sys.p * 2);

  std::vector<double> phi = sys.phi0;
  const double h = kKuramotoStep;
  for (int t = 0; t < T; ++t) {
    std::vector<double> k1 = derivative(sys, phi);
    for (int i = 0; i < sys.p; ++i) {
      if (!std::isfinite(phi[i]) || !std::isfinite(k1[i]))
        throw std::runtime_error("simulate: non-finite state at step " +
                                 std::to_string(t));
      series.at(t, i, 0) = phi[i];
      series.at(t, i, 1) = k1[i];
    }
    if (t + 1 == T) break;
    std::vector<double> tmp(sys.p);
    for (int i = 0; i < sys.p; ++i) tmp[i] = phi[i] + 0.5 * h * k1[i];
    std::vector<double> k2 = derivative(sys, tmp);
    for (int i = 0; i < sys.p; ++i) tmp[i] = phi[i] + 0.5 * h * k2[i];
    std::vector<double> k3 = derivative(sys, tmp);
    for (int i = 0; i < sys.p; ++i) tmp[i] = phi[i] + h * k3[i];
    std::vector<double> k4 = derivative(sys, tmp);
    for (int i = 0; i < sys.p; ++i)
      phi[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
  }
  return series;
}

/// Ground truth export: +1 wherever a coupling exists. The coupling is
/// undirected, so the graph is symmetric.
inline CausalGraph kuramoto_truth(const KuramotoSystem& sys) {
  CausalGraph g(sys.p);
  for (int i = 0; i < sys.p; ++i)
    for (int j = 0; j < sys.p; ++j)
      if (i != j && sys.k(i, j) != 0.0) g.at(i, j) = 1;
  return g;
}

}  // namespace abm
