#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "abm/cholesky.hpp"
#include "abm/gc.hpp"
#include "abm/types.hpp"

namespace abm {

namespace detail {

/// Channel matrix for the simple baselines: every state dim per agent for
/// positional data, the rate channel for phase data. Row t, column
/// agent-major.
inline std::vector<double> baseline_channels(const TrajectorySeries& series,
                                             int& dims_per_agent) {
  dims_per_agent = series.kind == SeriesKind::phase ? 1 : series.d;
  std::vector<double> out(static_cast<std::size_t>(series.T) * series.p *
                          dims_per_agent);
  for (int t = 0; t < series.T; ++t)
    for (int i = 0; i < series.p; ++i)
      for (int q = 0; q < dims_per_agent; ++q)
        out[(static_cast<std::size_t>(t) * series.p + i) * dims_per_agent + q] =
            series.kind == SeriesKind::phase ? series.at(t, i, 1)
                                             : series.at(t, i, q);
  return out;
}

}  // namespace detail

/// Least-squares vector autoregression with intercept. coeffs[k] maps the
/// lag-(k+1) channel vector to the next-step channel vector.
struct VarModel {
  int K = 0;
  int channels = 0;
  int dims_per_agent = 0;
  int p = 0;
  std::vector<double> coeffs;     // [K][channels][channels]
  std::vector<double> intercept;  // [channels]
  double resid_var = 0.0;
  bool ridge_used = false;

  double coeff(int k_row, int target, int source) const {
    return coeffs[(static_cast<std::size_t>(k_row) * channels + target) * channels +
                  source];
  }
};

/// Fits a VAR(K) by ordinary least squares per target channel and
/// aggregates cross-agent blocks into pairwise strengths: magnitude is
/// the Frobenius norm over the block's lags and dims, the sign the
/// largest-|value| pick over per-lag block medians. A rank-deficient
/// design falls back to a documented ridge of 1e-8.
inline std::pair<VarModel, GCMatrix> fit_linear_gc(const TrajectorySeries& series,
                                                   int K) {
  if (K < 1) throw std::invalid_argument("fit_linear_gc: K must be >= 1");
  int dpa = 0;
  const std::vector<double> chan = detail::baseline_channels(series, dpa);
  const int n = series.p * dpa;
  const int rows = series.T - K;
  const int n_reg = K * n + 1;
  if (rows < 2 || series.T <= K * n)
    throw std::invalid_argument("fit_linear_gc: series too short to identify");

  auto chan_at = [&](int t, int c) {
    return chan[static_cast<std::size_t>(t) * n + c];
  };

  // Normal equations: gram = X^T X, rhs = X^T Y (per target channel).
  std::vector<double> gram(static_cast<std::size_t>(n_reg) * n_reg, 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(n) * n_reg, 0.0);
  std::vector<double> x_row(n_reg, 1.0);  // last entry is the intercept
  for (int t = K; t < series.T; ++t) {
    for (int k = 1; k <= K; ++k)
      for (int c = 0; c < n; ++c)
        x_row[static_cast<std::size_t>(k - 1) * n + c] = chan_at(t - k, c);
    x_row[n_reg - 1] = 1.0;
    for (int a = 0; a < n_reg; ++a) {
      for (int b = a; b < n_reg; ++b)
        gram[static_cast<std::size_t>(a) * n_reg + b] += x_row[a] * x_row[b];
      for (int c = 0; c < n; ++c)
        rhs[static_cast<std::size_t>(c) * n_reg + a] += x_row[a] * chan_at(t, c);
    }
  }
  for (int a = 0; a < n_reg; ++a)
    for (int b = 0; b < a; ++b)
      gram[static_cast<std::size_t>(a) * n_reg + b] =
          gram[static_cast<std::size_t>(b) * n_reg + a];

  VarModel model;
  model.K = K;
  model.channels = n;
  model.dims_per_agent = dpa;
  model.p = series.p;
  model.coeffs.assign(static_cast<std::size_t>(K) * n * n, 0.0);
  model.intercept.assign(n, 0.0);

  std::vector<double> beta = rhs;
  std::vector<double> factor = gram;
  if (!detail::cholesky_solve(factor, beta, n_reg, n)) {
    model.ridge_used = true;
    factor = gram;
    for (int a = 0; a < n_reg; ++a)
      factor[static_cast<std::size_t>(a) * n_reg + a] += 1e-8;
    beta = rhs;
    if (!detail::cholesky_solve(factor, beta, n_reg, n))
      throw std::runtime_error("fit_linear_gc: singular design even with ridge");
  }
  for (int c = 0; c < n; ++c) {
    for (int k = 0; k < K; ++k)
      for (int s = 0; s < n; ++s)
        model.coeffs[(static_cast<std::size_t>(k) * n + c) * n + s] =
            beta[static_cast<std::size_t>(c) * n_reg + k * n + s];
    model.intercept[c] = beta[static_cast<std::size_t>(c) * n_reg + n_reg - 1];
  }

  double resid = 0.0;
  for (int t = K; t < series.T; ++t)
    for (int c = 0; c < n; ++c) {
      double pred = model.intercept[c];
      for (int k = 1; k <= K; ++k)
        for (int s = 0; s < n; ++s)
          pred += model.coeff(k - 1, c, s) * chan_at(t - k, s);
      const double diff = chan_at(t, c) - pred;
      resid += diff * diff;
    }
  model.resid_var = resid / (static_cast<double>(rows) * n);

  GCMatrix gc(series.p);
  std::vector<double> med_k(K);
  for (int src = 0; src < series.p; ++src)
    for (int tgt = 0; tgt < series.p; ++tgt) {
      if (src == tgt) continue;
      double sq = 0.0;
      for (int k = 0; k < K; ++k) {
        std::vector<double> entries;
        entries.reserve(static_cast<std::size_t>(dpa) * dpa);
        for (int u = 0; u < dpa; ++u)
          for (int q = 0; q < dpa; ++q) {
            const double v = model.coeff(k, tgt * dpa + u, src * dpa + q);
            entries.push_back(v);
            sq += v * v;
          }
        med_k[k] = detail::lower_median(std::move(entries));
      }
      const std::size_t idx = gc.idx(src, tgt);
      gc.magnitude[idx] = std::sqrt(sq);
      gc.sign[idx] = signmax(med_k);
      gc.strengths[idx] = gc.sign[idx] * gc.magnitude[idx];
    }
  return {std::move(model), std::move(gc)};
}

}  // namespace abm
