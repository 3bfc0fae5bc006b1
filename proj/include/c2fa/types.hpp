#pragma once

#include <vector>

#include <Eigen/Dense>

namespace c2fa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline std::vector<double> to_std(const Vector& v) {
  return {v.data(), v.data() + v.size()};
}

inline Vector from_std(const std::vector<double>& v) {
  Vector out(static_cast<Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = v[i];
  return out;
}

// Which feature granularity a mask or perturbation set refers to.
enum class Level { high, low };

inline const char* to_string(Level level) {
  return level == Level::high ? "high" : "low";
}

}  // namespace c2fa
