#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "c2fa/errors.hpp"
#include "c2fa/nested.hpp"
#include "c2fa/perturbation.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// Ranking order shared by the metrics: score descending, ties broken toward
// the lower index.
inline std::vector<int> ranking(const Vector& scores) {
  std::vector<int> order(static_cast<size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

// Normalized discounted cumulative gain of a binary relevance vector under
// the score ranking; rank k (1-based) contributes rel_k / log2(k + 1).
inline double ndcg(const Vector& scores, const std::vector<int>& relevance) {
  if (static_cast<size_t>(scores.size()) != relevance.size())
    throw dimension_error("NDCG scores and relevance lengths disagree");
  const int positives =
      static_cast<int>(std::count(relevance.begin(), relevance.end(), 1));
  if (positives == 0)
    throw metric_error("NDCG undefined: relevance has no positive entry");
  const auto order = ranking(scores);
  double dcg = 0.0;
  for (size_t k = 0; k < order.size(); ++k)
    dcg += relevance[static_cast<size_t>(order[k])] / std::log2(k + 2.0);
  double idcg = 0.0;
  for (int k = 0; k < positives; ++k) idcg += 1.0 / std::log2(k + 2.0);
  return dcg / idcg;
}

// Mann-Whitney AUROC: probability a random positive outscores a random
// negative, ties counted 1/2.
inline double auroc(const Vector& scores, const std::vector<int>& labels) {
  if (static_cast<size_t>(scores.size()) != labels.size())
    throw dimension_error("AUROC scores and labels lengths disagree");
  double concordant = 0.0;
  long positives = 0, negatives = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    ++positives;
    for (size_t k = 0; k < labels.size(); ++k) {
      if (labels[k] == 1) continue;
      if (scores[static_cast<Index>(i)] > scores[static_cast<Index>(k)])
        concordant += 1.0;
      else if (scores[static_cast<Index>(i)] == scores[static_cast<Index>(k)])
        concordant += 0.5;
    }
  }
  negatives = static_cast<long>(labels.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw metric_error("AUROC undefined: labels contain a single class");
  return concordant / (static_cast<double>(positives) * static_cast<double>(negatives));
}

enum class CurveMode { insertion, deletion };

// Model response as features are revealed (insertion) or removed (deletion)
// one at a time in attribution order; K+1 points over x in [0, 1].
inline Vector faithfulness_curve(const BlackBoxOracle& oracle,
                                 const Vector& attributions, Level level,
                                 CurveMode mode) {
  const Index k = attributions.size();
  if (k < 1) throw dimension_error("faithfulness curve needs >= 1 attribution");
  const auto order = ranking(attributions);
  Vector mask = mode == CurveMode::insertion ? Vector::Zero(k) : Vector::Ones(k);
  Vector curve(k + 1);
  curve[0] = oracle.evaluate(mask, level);
  for (Index step = 1; step <= k; ++step) {
    mask[order[static_cast<size_t>(step - 1)]] =
        mode == CurveMode::insertion ? 1.0 : 0.0;
    curve[step] = oracle.evaluate(mask, level);
  }
  return curve;
}

inline double trapezoid_auc(const Vector& curve) {
  const Index steps = curve.size() - 1;
  if (steps < 1) return curve[0];
  double area = 0.0;
  for (Index i = 0; i < steps; ++i) area += 0.5 * (curve[i] + curve[i + 1]);
  return area / static_cast<double>(steps);
}

inline double insertion_deletion(const BlackBoxOracle& oracle,
                                 const Vector& attributions, Level level,
                                 CurveMode mode) {
  return trapezoid_auc(faithfulness_curve(oracle, attributions, level, mode));
}

// 1 when the group with the top high-level attribution also owns the top
// low-level attribution. Signed maxima, ties toward the lower index.
inline int mihl_agreement(const AttributionPair& pair, const NestedShape& shape) {
  if (pair.hifa.size() != shape.groups() || pair.lofa.size() != shape.total())
    throw dimension_error("attribution pair does not match shape");
  int top_group = 0;
  for (int j = 1; j < shape.groups(); ++j)
    if (pair.hifa[j] > pair.hifa[top_group]) top_group = j;
  int top_low = 0;
  for (int d = 1; d < shape.total(); ++d)
    if (pair.lofa[d] > pair.lofa[top_low]) top_low = d;
  return shape.group_of(top_low) == top_group ? 1 : 0;
}

// Per-sample scores. Correctness metrics are NaN when the oracle provides no
// usable ground-truth labels.
struct EvalReport {
  double ndcg = std::numeric_limits<double>::quiet_NaN();
  double auroc = std::numeric_limits<double>::quiet_NaN();
  double insertion_low = std::numeric_limits<double>::quiet_NaN();
  double deletion_low = std::numeric_limits<double>::quiet_NaN();
  double insertion_high = std::numeric_limits<double>::quiet_NaN();
  double deletion_high = std::numeric_limits<double>::quiet_NaN();
  double consistency = std::numeric_limits<double>::quiet_NaN();
  int mihl_agree = 0;
  bool converged = true;
};

}  // namespace c2fa
