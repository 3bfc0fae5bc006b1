#pragma once

#include <cmath>
#include <string>

#include "c2fa/errors.hpp"
#include "c2fa/perturbation.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

enum class WeightKind { cosine, uniform };

struct WeightSpec {
  WeightKind kind = WeightKind::cosine;
};

inline const char* to_string(WeightKind kind) {
  return kind == WeightKind::cosine ? "cosine" : "uniform";
}

inline WeightKind weight_kind_from_string(const std::string& name) {
  if (name == "cosine") return WeightKind::cosine;
  if (name == "uniform") return WeightKind::uniform;
  throw config_error("weights", "unknown kernel '" + name +
                                    "' (expected cosine or uniform)");
}

// Sample weights for binary mask rows. Cosine: similarity between the row and
// the all-ones (unperturbed) simplified input, sqrt(k/K) for k ones out of K.
// Uniform: all ones.
inline Vector weigh(const Matrix& masks, WeightSpec spec) {
  Vector w(masks.rows());
  const double width = static_cast<double>(masks.cols());
  for (Index n = 0; n < masks.rows(); ++n) {
    if (spec.kind == WeightKind::uniform) {
      w[n] = 1.0;
      continue;
    }
    const double ones = masks.row(n).sum();
    if (ones == 0.0)
      throw singular_error("cosine weight undefined for all-zero mask row " +
                           std::to_string(n));
    w[n] = std::sqrt(ones / width);
  }
  return w;
}

inline void apply_weights(PerturbationSet& set, WeightSpec spec) {
  set.weights = weigh(set.masks, spec);
}

}  // namespace c2fa
