#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace abm {

/// The four penalized-loss terms and their weighted total.
struct LossBreakdown {
  double prediction = 0.0;
  double sparsity = 0.0;
  double theory_guided = 0.0;
  double smoothing = 0.0;
  double total = 0.0;

  void finalize(double lambda, double gamma, double beta) {
    total = prediction + lambda * sparsity + gamma * theory_guided +
            beta * smoothing;
  }
};

/// Mean squared error over all entries.
inline double loss_prediction(std::span<const double> xhat,
                              std::span<const double> x) {
  if (xhat.size() != x.size())
    throw std::invalid_argument("loss_prediction: shape mismatch");
  if (xhat.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = xhat[i] - x[i];
    acc += diff * diff;
  }
  return acc / static_cast<double>(x.size());
}

/// Elastic-net penalty for one coefficient slice:
/// alpha * |psi|_1 + (1 - alpha) * |psi|_F^2.
inline double sparsity_term(std::span<const double> psi, double alpha) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("sparsity_term: alpha must be in [0,1]");
  double l1 = 0.0, sq = 0.0;
  for (double v : psi) {
    l1 += std::abs(v);
    sq += v * v;
  }
  return alpha * l1 + (1.0 - alpha) * sq;
}

/// Sparsity penalty averaged over per-step coefficient matrices.
inline double loss_sparsity(const std::vector<std::span<const double>>& psi_t,
                            double alpha) {
  if (psi_t.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& slice : psi_t) acc += sparsity_term(slice, alpha);
  return acc / static_cast<double>(psi_t.size());
}

/// Squared Frobenius distance between consecutive coefficient matrices.
inline double smooth_pair(std::span<const double> psi_next,
                          std::span<const double> psi) {
  if (psi_next.size() != psi.size())
    throw std::invalid_argument("smooth_pair: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double diff = psi_next[i] - psi[i];
    acc += diff * diff;
  }
  return acc;
}

/// Smoothing penalty averaged over the consecutive pairs of a trajectory
/// of coefficient matrices.
inline double loss_smooth(const std::vector<std::span<const double>>& psi_t) {
  if (psi_t.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t m = 0; m + 1 < psi_t.size(); ++m)
    acc += smooth_pair(psi_t[m + 1], psi_t[m]);
  return acc / static_cast<double>(psi_t.size() - 1);
}

/// Weight of the no-interaction penalty at one step. The default kernel
/// exp(-r2/sigma) fades the penalty as the observed state departs from the
/// straight-line extrapolation; `verbatim_sign` flips the exponent to the
/// growing variant for comparison runs.
inline double tg_weight(double residual2, double sigma, bool verbatim_sign = false) {
  if (sigma <= 0.0) throw std::invalid_argument("tg_weight: sigma must be > 0");
  if (residual2 == 0.0) return 1.0;
  const double z = residual2 / sigma;
  return std::exp(verbatim_sign ? z : -z);
}

/// No-interaction penalty for one step: weight times the squared norm of
/// the cross-agent coefficients.
inline double loss_tg(std::span<const double> psi_prime, double residual2,
                      double sigma, bool verbatim_sign = false) {
  const double w = tg_weight(residual2, sigma, verbatim_sign);
  double sq = 0.0;
  for (double v : psi_prime) sq += v * v;
  return w * sq;
}

}  // namespace abm
