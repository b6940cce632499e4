#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "abm/types.hpp"

namespace abm {

/// Area under the ROC curve by the rank (Mann-Whitney) formulation:
/// the probability that a random positive outranks a random negative,
/// ties counted one half. Requires both classes.
inline double auroc(const std::vector<double>& scores,
                    const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auroc: size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y != 0 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auroc: needs both classes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // midranks over tied groups
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (labels[k] != 0) rank_sum += rank[k];
  const double u = rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * n_neg);
}

/// Area under the precision-recall curve by right-continuous step
/// interpolation over all score thresholds (descending), ties grouped.
/// Requires at least one positive.
inline double auprc(const std::vector<double>& scores,
                    const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auprc: size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y != 0 ? 1 : 0;
  if (n_pos == 0) throw std::invalid_argument("auprc: needs positives");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      ++seen;
      if (labels[order[k]] != 0) ++tp;
    }
    const double recall = static_cast<double>(tp) / n_pos;
    const double precision = static_cast<double>(tp) / seen;
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j + 1;
  }
  return area;
}

/// Thresholded metrics on off-diagonal entries only. acc and ba score
/// edge presence (|entry| != 0); ba_pos and ba_neg are one-vs-rest
/// balanced accuracies for the signed classes +1 and -1. A class rate
/// with an empty denominator drops out of the balanced mean.
struct ThresholdedMetrics {
  double acc = 0.0;
  double ba = 0.0;
  double ba_pos = 0.0;
  double ba_neg = 0.0;
};

namespace detail {

inline double balanced_rate(std::size_t tp, std::size_t pos, std::size_t tn,
                            std::size_t neg) {
  if (pos == 0 && neg == 0) return 0.0;
  if (pos == 0) return static_cast<double>(tn) / neg;
  if (neg == 0) return static_cast<double>(tp) / pos;
  return 0.5 * (static_cast<double>(tp) / pos + static_cast<double>(tn) / neg);
}

}  // namespace detail

inline ThresholdedMetrics accuracy_metrics(const CausalGraph& pred,
                                           const CausalGraph& truth) {
  if (pred.p != truth.p)
    throw std::invalid_argument("accuracy_metrics: agent count mismatch");
  if (pred.p < 2)
    throw std::invalid_argument("accuracy_metrics: need at least 2 agents");
  std::size_t total = 0, correct = 0;
  std::size_t tp = 0, pos = 0, tn = 0, neg = 0;                // presence
  std::size_t tp_p = 0, pos_p = 0, tn_p = 0, neg_p = 0;        // class +1
  std::size_t tp_n = 0, pos_n = 0, tn_n = 0, neg_n = 0;        // class -1
  for (int i = 0; i < pred.p; ++i)
    for (int j = 0; j < pred.p; ++j) {
      if (i == j) continue;
      ++total;
      const bool t_present = truth.at(i, j) != 0;
      const bool p_present = pred.at(i, j) != 0;
      if (t_present == p_present) ++correct;
      if (t_present) {
        ++pos;
        if (p_present) ++tp;
      } else {
        ++neg;
        if (!p_present) ++tn;
      }
      const bool t_pos = truth.at(i, j) > 0;
      const bool p_pos = pred.at(i, j) > 0;
      if (t_pos) {
        ++pos_p;
        if (p_pos) ++tp_p;
      } else {
        ++neg_p;
        if (!p_pos) ++tn_p;
      }
      const bool t_neg = truth.at(i, j) < 0;
      const bool p_neg = pred.at(i, j) < 0;
      if (t_neg) {
        ++pos_n;
        if (p_neg) ++tp_n;
      } else {
        ++neg_n;
        if (!p_neg) ++tn_n;
      }
    }
  ThresholdedMetrics out;
  out.acc = static_cast<double>(correct) / total;
  out.ba = detail::balanced_rate(tp, pos, tn, neg);
  out.ba_pos = detail::balanced_rate(tp_p, pos_p, tn_p, neg_p);
  out.ba_neg = detail::balanced_rate(tp_n, pos_n, tn_n, neg_n);
  return out;
}

/// Off-diagonal score/label extraction for the ranking metrics: scores
/// are strength magnitudes, labels edge presence.
inline void ranking_inputs(const std::vector<double>& magnitude,
                           const CausalGraph& truth,
                           std::vector<double>& scores,
                           std::vector<int>& labels) {
  scores.clear();
  labels.clear();
  for (int i = 0; i < truth.p; ++i)
    for (int j = 0; j < truth.p; ++j) {
      if (i == j) continue;
      scores.push_back(magnitude[static_cast<std::size_t>(i) * truth.p + j]);
      labels.push_back(truth.at(i, j) != 0 ? 1 : 0);
    }
}

}  // namespace abm
