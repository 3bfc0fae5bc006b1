#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "c2fa/errors.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// The black box being explained. Implementations map a binary presence mask
// to the scalar target-class score in [0, 1]; masking semantics (what an
// absent feature looks like) live inside the oracle. Outputs must be
// deterministic per mask.
class BlackBoxOracle {
 public:
  virtual ~BlackBoxOracle() = default;

  virtual double evaluate_high(const Vector& mask) const = 0;
  virtual double evaluate_low(const Vector& mask) const = 0;

  double evaluate(const Vector& mask, Level level) const {
    return level == Level::high ? evaluate_high(mask) : evaluate_low(mask);
  }

  // Row-wise batch evaluation; overrides may vectorize but must preserve
  // row order.
  virtual Vector evaluate_batch(const Matrix& masks, Level level) const {
    Vector out(masks.rows());
    for (Index n = 0; n < masks.rows(); ++n)
      out[n] = evaluate(masks.row(n).transpose(), level);
    return out;
  }

  // Whether one instance may be queried from several threads at once.
  virtual bool shareable() const noexcept { return true; }
};

// A batch of binary simplified inputs plus the model outputs and sample
// weights for one level.
struct PerturbationSet {
  Matrix masks;
  Vector outputs;
  Vector weights;
  Level level = Level::low;

  void validate() const {
    if (outputs.size() != masks.rows() || weights.size() != masks.rows())
      throw dimension_error(
          "perturbation set rows disagree: masks " +
          std::to_string(masks.rows()) + ", outputs " +
          std::to_string(outputs.size()) + ", weights " +
          std::to_string(weights.size()));
    if (!weights.array().isFinite().all() || (weights.array() < 0.0).any())
      throw dimension_error("perturbation weights must be finite and >= 0");
  }
};

// n x width binary matrix with i.i.d. Bernoulli(1/2) entries. All-zero rows
// are redrawn: their cosine weight is undefined and they carry no local
// signal.
inline Matrix sample_masks(int n, int width, std::uint64_t seed) {
  if (n < 1 || width < 1)
    throw dimension_error("sample_masks needs n >= 1 and width >= 1");
  std::mt19937_64 rng(seed);
  Matrix z(n, width);
  for (int i = 0; i < n; ++i) {
    do {
      for (int k = 0; k < width; ++k)
        z(i, k) = static_cast<double>(rng() & 1ULL);
    } while (z.row(i).sum() == 0.0);
  }
  return z;
}

// Evaluates the oracle on every mask row, preserving order. Weights are set
// to ones; apply a kernel afterwards to replace them.
inline PerturbationSet collect(const BlackBoxOracle& oracle, const Matrix& masks,
                               Level level) {
  PerturbationSet set;
  set.masks = masks;
  set.level = level;
  set.outputs.resize(masks.rows());
  set.weights = Vector::Ones(masks.rows());
  for (Index n = 0; n < masks.rows(); ++n) {
    try {
      set.outputs[n] = oracle.evaluate(masks.row(n).transpose(), level);
    } catch (const std::exception& e) {
      throw oracle_error("oracle failed on mask row " + std::to_string(n) +
                             ": " + e.what(),
                         static_cast<long>(n));
    }
  }
  return set;
}

}  // namespace c2fa
