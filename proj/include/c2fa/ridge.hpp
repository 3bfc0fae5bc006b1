#pragma once

#include <cstdint>
#include <string>

#include "c2fa/errors.hpp"
#include "c2fa/kernels.hpp"
#include "c2fa/nested.hpp"
#include "c2fa/perturbation.hpp"
#include "c2fa/rng.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// Weighted ridge regression without intercept:
//   minimize 1/2 (y - Z theta)' W (y - Z theta) + lambda |theta|^2
struct RidgeProblem {
  Matrix masks;    // Z, N x K
  Vector outputs;  // y, length N
  Vector weights;  // diagonal of W, length N
  double lambda = 0.0;

  void validate() const {
    if (outputs.size() != masks.rows() || weights.size() != masks.rows())
      throw dimension_error("ridge problem rows disagree");
    if (!weights.array().isFinite().all() || (weights.array() < 0.0).any())
      throw dimension_error("ridge weights must be finite and >= 0");
    if (lambda < 0.0) throw config_error("lambda", "must be >= 0");
  }
};

// Solves the normal equations (Z'WZ + 2 lambda I) theta = Z'W y.
inline Vector solve_ridge(const RidgeProblem& p) {
  p.validate();
  const Index k = p.masks.cols();
  Matrix gram = p.masks.transpose() * p.weights.asDiagonal() * p.masks;
  gram.diagonal().array() += 2.0 * p.lambda;
  const Vector rhs = p.masks.transpose() * (p.weights.asDiagonal() * p.outputs);
  if (p.lambda > 0.0) {
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
  }
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) {
    const int deficiency = static_cast<int>(k - lu.rank());
    throw singular_error("ridge normal matrix is singular: " +
                             std::to_string(deficiency) +
                             " deficient dimension(s) of " + std::to_string(k),
                         deficiency);
  }
  return lu.solve(rhs);
}

// Seed stream for a level's mask sampling; high and low draws are independent
// and methods sharing a seed see the same perturbations.
inline std::uint64_t level_seed(std::uint64_t seed, Level level) {
  return mix_seed(seed, level == Level::high ? 0x48ULL : 0x4cULL);
}

// The separate two-level estimator applied to already collected sets.
inline AttributionPair lime_from_sets(const PerturbationSet& high,
                                      const PerturbationSet& low,
                                      double lambda_high, double lambda_low) {
  return {solve_ridge({high.masks, high.outputs, high.weights, lambda_high}),
          solve_ridge({low.masks, low.outputs, low.weights, lambda_low})};
}

// LIME at each level independently: sample, query, weigh, fit. The returned
// pair is generally inconsistent.
inline AttributionPair lime_two_level(const NestedShape& shape,
                                      const BlackBoxOracle& oracle, int n_high,
                                      int n_low, WeightSpec weight_spec,
                                      double lambda_high, double lambda_low,
                                      std::uint64_t seed) {
  auto high = collect(
      oracle, sample_masks(n_high, shape.groups(), level_seed(seed, Level::high)),
      Level::high);
  auto low = collect(
      oracle, sample_masks(n_low, shape.total(), level_seed(seed, Level::low)),
      Level::low);
  apply_weights(high, weight_spec);
  apply_weights(low, weight_spec);
  return lime_from_sets(high, low, lambda_high, lambda_low);
}

}  // namespace c2fa
