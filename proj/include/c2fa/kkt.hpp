#pragma once

#include <string>

#include "c2fa/errors.hpp"
#include "c2fa/nested.hpp"
#include "c2fa/perturbation.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// Closed-form reference for the consistency-constrained joint fit. Assembles
// the stationarity-plus-constraint system
//
//   [ Zh'Wh Zh + 2 lh I        0          I  ] [alpha]   [Zh'Wh yh]
//   [        0          Zl'Wl Zl + 2 ll I -M' ] [beta ] = [Zl'Wl yl]
//   [        I                -M          0  ] [nu   ]   [   0    ]
//
// and factorizes it directly. Deliberately independent of the iterative
// solver so the two paths can check each other.
inline AttributionPair solve_kkt_oracle(const PerturbationSet& high,
                                        const PerturbationSet& low,
                                        const AggregationMatrix& m,
                                        double lambda_high, double lambda_low) {
  high.validate();
  low.validate();
  const Matrix& M = m.matrix();
  const Index j = M.rows();
  const Index d = M.cols();
  if (high.masks.cols() != j)
    throw dimension_error("high-level mask width does not match group count");
  if (low.masks.cols() != d)
    throw dimension_error("low-level mask width does not match feature count");

  const Index n = j + d + j;
  Matrix kkt = Matrix::Zero(n, n);
  kkt.block(0, 0, j, j) =
      high.masks.transpose() * high.weights.asDiagonal() * high.masks;
  kkt.block(0, 0, j, j).diagonal().array() += 2.0 * lambda_high;
  kkt.block(j, j, d, d) =
      low.masks.transpose() * low.weights.asDiagonal() * low.masks;
  kkt.block(j, j, d, d).diagonal().array() += 2.0 * lambda_low;
  kkt.block(0, j + d, j, j).setIdentity();
  kkt.block(j + d, 0, j, j).setIdentity();
  kkt.block(j, j + d, d, j) = -M.transpose();
  kkt.block(j + d, j, j, d) = -M;

  Vector rhs = Vector::Zero(n);
  rhs.head(j) = high.masks.transpose() * (high.weights.asDiagonal() * high.outputs);
  rhs.segment(j, d) = low.masks.transpose() * (low.weights.asDiagonal() * low.outputs);

  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) {
    const int deficiency = static_cast<int>(n - lu.rank());
    throw singular_error("stacked constraint system is singular: " +
                             std::to_string(deficiency) +
                             " deficient dimension(s) of " + std::to_string(n),
                         deficiency);
  }
  const Vector x = lu.solve(rhs);
  return {x.head(j), x.segment(j, d)};
}

}  // namespace c2fa
