#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "c2fa/errors.hpp"
#include "c2fa/nested.hpp"
#include "c2fa/perturbation.hpp"
#include "c2fa/rng.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// Oracle with known ground truth so estimators can be scored exactly.
class SyntheticOracle : public BlackBoxOracle {
 public:
  virtual const NestedShape& shape() const noexcept = 0;
  // Binary relevance of each high-level feature (ranking target).
  virtual std::vector<int> instance_labels() const = 0;
  // Binary relevance of each low-level feature (segmentation-style target).
  virtual std::vector<int> low_labels() const = 0;
  // Exact attributions when the oracle is linear; empty otherwise.
  virtual std::optional<AttributionPair> ground_truth() const {
    return std::nullopt;
  }

  // Group j present in the high-level mask -> all its low features present.
  static Vector expand_mask(const NestedShape& shape, const Vector& high_mask) {
    Vector low = Vector::Zero(shape.total());
    for (int j = 0; j < shape.groups(); ++j)
      if (high_mask[j] != 0.0)
        low.segment(shape.group_offset(j), shape.group_size(j)).setOnes();
    return low;
  }

 protected:
  static double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
};

// How to obtain ground-truth low-level coefficients: an explicit vector, or
// random group-structured coefficients rescaled to target_sum.
struct CoeffSpec {
  Vector values;           // empty -> random
  double target_sum = 0.9;
};

namespace detail {

// Random coefficients with a planted structure: roughly half the groups are
// active, each active group carries a few strong features in [0.7, 1], and
// all remaining mass stays below the half-max labeling threshold.
inline Vector random_nested_coeffs(const NestedShape& shape, double target_sum,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> strong(0.7, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> active;
  for (int j = 0; j < shape.groups(); ++j)
    if ((rng() & 1ULL) != 0ULL) active.push_back(j);
  if (active.empty())
    active.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(shape.groups())));
  if (shape.groups() > 1 && static_cast<int>(active.size()) == shape.groups())
    active.pop_back();

  Vector c(shape.total());
  for (int j = 0; j < shape.groups(); ++j) {
    const int dj = shape.group_size(j);
    const int off = shape.group_offset(j);
    const bool is_active =
        std::find(active.begin(), active.end(), j) != active.end();
    const int n_strong = is_active ? std::max(1, dj / 3) : 0;
    std::vector<int> idx(static_cast<size_t>(dj));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int t = 0; t < dj; ++t) {
      const bool pick_strong = t < n_strong;
      c[off + idx[static_cast<size_t>(t)]] =
          pick_strong ? strong(rng) : (0.3 / dj) * unit(rng);
    }
  }
  c *= target_sum / c.sum();
  return c;
}

// Binary labels from a half-of-max threshold.
inline std::vector<int> half_max_labels(const Vector& values) {
  const double threshold = 0.5 * values.maxCoeff();
  std::vector<int> labels(static_cast<size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i)
    labels[static_cast<size_t>(i)] = values[i] >= threshold ? 1 : 0;
  return labels;
}

}  // namespace detail

// Additive oracle: low-level response is the masked coefficient sum (plus
// optional Gaussian noise derived deterministically from the mask), clamped
// to [0, 1]. The high-level response masks whole groups, so the exact
// coefficients are a consistent attribution pair.
class LinearSetOracle : public SyntheticOracle {
 public:
  LinearSetOracle(NestedShape shape, Vector coeffs, double noise_std,
                  std::uint64_t seed)
      : shape_(std::move(shape)),
        coeffs_(std::move(coeffs)),
        noise_std_(noise_std),
        seed_(seed) {
    if (coeffs_.size() != shape_.total())
      throw dimension_error("coefficient length does not match shape");
    const double total = coeffs_.sum();
    if (total < 0.0 || total > 1.0 + 1e-12)
      throw config_error("oracle.coeffs", "full-mask output " +
                                              std::to_string(total) +
                                              " outside [0, 1]");
    if (noise_std_ < 0.0)
      throw config_error("oracle.noise_std", "must be >= 0");
  }

  double evaluate_low(const Vector& mask) const override {
    if (mask.size() != shape_.total())
      throw dimension_error("low-level mask width does not match shape");
    return clamp01(coeffs_.dot(mask) + noise(mask, 0x4cULL));
  }

  double evaluate_high(const Vector& mask) const override {
    if (mask.size() != shape_.groups())
      throw dimension_error("high-level mask width does not match shape");
    return clamp01(coeffs_.dot(expand_mask(shape_, mask)) + noise(mask, 0x48ULL));
  }

  const NestedShape& shape() const noexcept override { return shape_; }
  const Vector& coeffs() const noexcept { return coeffs_; }

  std::optional<AttributionPair> ground_truth() const override {
    Vector alpha(shape_.groups());
    for (int j = 0; j < shape_.groups(); ++j)
      alpha[j] =
          coeffs_.segment(shape_.group_offset(j), shape_.group_size(j)).sum();
    return AttributionPair{alpha, coeffs_};
  }

  std::vector<int> instance_labels() const override {
    return detail::half_max_labels(ground_truth()->hifa);
  }
  std::vector<int> low_labels() const override {
    return detail::half_max_labels(coeffs_);
  }

 private:
  double noise(const Vector& mask, std::uint64_t tag) const {
    if (noise_std_ == 0.0) return 0.0;
    return noise_std_ * gaussian_from(hash_mask(mix_seed(seed_, tag), mask));
  }

  NestedShape shape_;
  Vector coeffs_;
  double noise_std_;
  std::uint64_t seed_;
};

inline LinearSetOracle make_linear_oracle(const NestedShape& shape,
                                          const CoeffSpec& spec,
                                          double noise_std,
                                          std::uint64_t seed) {
  if (spec.values.size() > 0)
    return LinearSetOracle(shape, spec.values, noise_std, seed);
  if (spec.target_sum <= 0.0 || spec.target_sum > 1.0)
    throw config_error("oracle.target_sum", "must lie in (0, 1]");
  std::mt19937_64 rng(mix_seed(seed, 0xc0effULL));
  return LinearSetOracle(
      shape, detail::random_nested_coeffs(shape, spec.target_sum, rng),
      noise_std, seed);
}

// Bag-style oracle with max semantics: the score saturates in the best
// positive group's masked evidence fraction, so the bag reads positive as
// soon as one positive instance is sufficiently visible. Negative groups
// never move the score. bias_gap shifts high-level masking responses away
// from the equivalent low-level ones (missingness bias): removing a positive
// group at the instance level costs up to bias_gap more than removing its
// features one level down.
class MilMaxOracle : public SyntheticOracle {
 public:
  MilMaxOracle(NestedShape shape, std::vector<int> positive_groups,
               double bias_gap, std::uint64_t seed)
      : shape_(std::move(shape)),
        positive_(std::move(positive_groups)),
        bias_gap_(bias_gap) {
    if (positive_.empty())
      throw config_error("oracle.positive_groups", "must be nonempty");
    std::sort(positive_.begin(), positive_.end());
    if (std::adjacent_find(positive_.begin(), positive_.end()) != positive_.end())
      throw config_error("oracle.positive_groups", "contains duplicates");
    if (positive_.front() < 0 || positive_.back() >= shape_.groups())
      throw config_error("oracle.positive_groups", "group index out of range");
    if (bias_gap_ < 0.0 || bias_gap_ > 1.0)
      throw config_error("oracle.bias_gap", "must lie in [0, 1]");

    std::mt19937_64 rng(mix_seed(seed, 0xe71dULL));
    std::uniform_real_distribution<double> strong(0.7, 1.0);
    std::uniform_real_distribution<double> weak(0.05, 0.2);
    evidence_.resize(shape_.total());
    for (int j = 0; j < shape_.groups(); ++j) {
      const int dj = shape_.group_size(j);
      const int off = shape_.group_offset(j);
      const bool pos = is_positive(j);
      const int n_strong = pos ? std::max(1, dj / 3) : 0;
      std::vector<int> idx(static_cast<size_t>(dj));
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int t = 0; t < dj; ++t)
        evidence_[off + idx[static_cast<size_t>(t)]] =
            t < n_strong ? strong(rng) : weak(rng);
    }
    group_mass_.resize(static_cast<size_t>(shape_.groups()));
    for (int j = 0; j < shape_.groups(); ++j)
      group_mass_[static_cast<size_t>(j)] =
          evidence_.segment(shape_.group_offset(j), shape_.group_size(j)).sum();
    // Missingness bias is concentrated on the positive instances.
    omega_ = Vector::Zero(shape_.groups());
    for (int j : positive_) omega_[j] = 1.0 / static_cast<double>(positive_.size());
  }

  double evaluate_low(const Vector& mask) const override {
    if (mask.size() != shape_.total())
      throw dimension_error("low-level mask width does not match shape");
    return base_score(mask);
  }

  double evaluate_high(const Vector& mask) const override {
    if (mask.size() != shape_.groups())
      throw dimension_error("high-level mask width does not match shape");
    double missing = 0.0;
    for (int j = 0; j < shape_.groups(); ++j)
      missing += (1.0 - mask[j]) * omega_[j];
    return clamp01(base_score(expand_mask(shape_, mask)) - bias_gap_ * missing);
  }

  const NestedShape& shape() const noexcept override { return shape_; }
  const std::vector<int>& positive_groups() const noexcept { return positive_; }
  double bias_gap() const noexcept { return bias_gap_; }
  const Vector& evidence() const noexcept { return evidence_; }

  std::vector<int> instance_labels() const override {
    std::vector<int> labels(static_cast<size_t>(shape_.groups()), 0);
    for (int j : positive_) labels[static_cast<size_t>(j)] = 1;
    return labels;
  }

  // A low-level feature is relevant when it carries strong evidence inside a
  // positive group; the 0.5 cut sits between the strong and weak draws.
  std::vector<int> low_labels() const override {
    std::vector<int> labels(static_cast<size_t>(shape_.total()), 0);
    for (int d = 0; d < shape_.total(); ++d)
      labels[static_cast<size_t>(d)] =
          is_positive(shape_.group_of(d)) && evidence_[d] >= 0.5 ? 1 : 0;
    return labels;
  }

 private:
  bool is_positive(int j) const {
    return std::binary_search(positive_.begin(), positive_.end(), j);
  }

  double base_score(const Vector& low_mask) const {
    double best = 0.0;
    for (int j : positive_) {
      const int off = shape_.group_offset(j);
      const int dj = shape_.group_size(j);
      const double visible =
          evidence_.segment(off, dj).dot(low_mask.segment(off, dj));
      best = std::max(best, visible / group_mass_[static_cast<size_t>(j)]);
    }
    return kFloor + (kCeiling - kFloor) * best;
  }

  static constexpr double kFloor = 0.1;
  static constexpr double kCeiling = 0.95;

  NestedShape shape_;
  std::vector<int> positive_;
  double bias_gap_;
  Vector evidence_;
  std::vector<double> group_mass_;
  Vector omega_;
};

inline MilMaxOracle make_mil_oracle(const NestedShape& shape,
                                    std::vector<int> positive_groups,
                                    double bias_gap, std::uint64_t seed) {
  return MilMaxOracle(shape, std::move(positive_groups), bias_gap, seed);
}

}  // namespace c2fa
