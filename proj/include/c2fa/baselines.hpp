#pragma once

#include <cstdint>
#include <random>

#include "c2fa/errors.hpp"
#include "c2fa/nested.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// Bottom-up estimator: keep the low-level attributions and sum them into
// their groups. Consistent by construction.
inline AttributionPair bu_lime(const Vector& lofa, const AggregationMatrix& m) {
  if (lofa.size() != m.matrix().cols())
    throw dimension_error("low-level attribution length does not match matrix");
  return {m.matrix() * lofa, lofa};
}

// Top-down estimator: keep the high-level attributions, draw each group's
// low-level attributions from Normal(alpha_j, (1/D_j)^2), then overwrite one
// uniformly chosen entry per group so the group sums exactly to alpha_j.
inline AttributionPair td_lime(const Vector& hifa, const NestedShape& shape,
                               std::uint64_t seed) {
  if (hifa.size() != shape.groups())
    throw dimension_error("high-level attribution length does not match shape");
  std::mt19937_64 rng(seed);
  Vector lofa(shape.total());
  for (int j = 0; j < shape.groups(); ++j) {
    const int dj = shape.group_size(j);
    const int off = shape.group_offset(j);
    std::normal_distribution<double> draw(hifa[j], 1.0 / dj);
    for (int t = 0; t < dj; ++t) lofa[off + t] = draw(rng);
    std::uniform_int_distribution<int> pick(0, dj - 1);
    const int adjusted = pick(rng);
    double rest = 0.0;
    for (int t = 0; t < dj; ++t)
      if (t != adjusted) rest += lofa[off + t];
    lofa[off + adjusted] = hifa[j] - rest;
  }
  return {hifa, lofa};
}

}  // namespace c2fa
