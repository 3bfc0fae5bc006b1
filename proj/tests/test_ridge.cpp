#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "c2fa/ridge.hpp"
#include "c2fa/synthetic.hpp"

using namespace c2fa;

namespace {

RidgeProblem random_problem(std::mt19937_64& rng, int n, int k, double lambda) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RidgeProblem p;
  p.masks = sample_masks(n, k, rng());
  p.outputs.resize(n);
  p.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    p.outputs[i] = unit(rng);
    p.weights[i] = 0.25 + unit(rng);
  }
  p.lambda = lambda;
  return p;
}

}  // namespace

TEST_CASE("unweighted normal equations on a 3x2 design") {
  RidgeProblem p;
  p.masks.resize(3, 2);
  p.masks << 1, 0, 0, 1, 1, 1;
  p.outputs = from_std({0.5, 0.3, 0.8});
  p.weights = Vector::Ones(3);
  p.lambda = 0.0;
  const Vector theta = solve_ridge(p);
  CHECK_THAT(theta[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK_THAT(theta[1], Catch::Matchers::WithinAbs(0.3, 1e-12));
}

TEST_CASE("zero outputs give the zero solution") {
  std::mt19937_64 rng(3);
  auto p = random_problem(rng, 20, 4, 0.7);
  p.outputs.setZero();
  CHECK(solve_ridge(p).norm() == 0.0);
}

TEST_CASE("solution norm shrinks monotonically in lambda") {
  std::mt19937_64 rng(4);
  auto p = random_problem(rng, 30, 5, 0.0);
  double last = solve_ridge(p).norm();
  for (double lambda : {0.1, 1.0, 10.0, 100.0}) {
    p.lambda = lambda;
    const double norm = solve_ridge(p).norm();
    CHECK(norm < last);
    last = norm;
  }
}

TEST_CASE("solutions satisfy the stationarity conditions") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 6);
    auto p = random_problem(rng, 8 * k, k, trial % 2 == 0 ? 0.0 : 0.3);
    const Vector theta = solve_ridge(p);
    Matrix gram = p.masks.transpose() * p.weights.asDiagonal() * p.masks;
    gram.diagonal().array() += 2.0 * p.lambda;
    const Vector rhs = p.masks.transpose() * (p.weights.asDiagonal() * p.outputs);
    CHECK((gram * theta - rhs).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("scaling weights and lambda together leaves the solution fixed") {
  std::mt19937_64 rng(6);
  auto p = random_problem(rng, 40, 4, 0.5);
  const Vector base = solve_ridge(p);
  for (double c : {0.1, 3.0, 50.0}) {
    auto scaled = p;
    scaled.weights *= c;
    scaled.lambda *= c;
    CHECK((solve_ridge(scaled) - base).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("rank-deficient unregularized problems are reported") {
  RidgeProblem p;
  p.masks = Matrix::Ones(4, 2);  // duplicate columns
  p.outputs = Vector::Ones(4);
  p.weights = Vector::Ones(4);
  p.lambda = 0.0;
  try {
    solve_ridge(p);
    FAIL("expected singular_error");
  } catch (const singular_error& e) {
    CHECK(e.deficiency() == 1);
  }
}

TEST_CASE("invalid ridge inputs are rejected") {
  RidgeProblem p;
  p.masks = Matrix::Ones(3, 2);
  p.outputs = Vector::Ones(3);
  p.weights = Vector::Ones(3);
  p.lambda = -0.1;
  CHECK_THROWS_AS(solve_ridge(p), config_error);
  p.lambda = 0.0;
  p.outputs = Vector::Ones(2);
  CHECK_THROWS_AS(solve_ridge(p), dimension_error);
}

TEST_CASE("two-level fits of an additive model recover consistent sums") {
  const NestedShape shape({2, 2});
  const auto oracle = make_linear_oracle(
      shape, {from_std({0.3, 0.2, 0.25, 0.15})}, 0.0, 17);
  const auto m = build_aggregation_matrix(shape);
  const auto pair =
      lime_two_level(shape, oracle, 400, 800, {WeightKind::cosine}, 0.0, 0.0, 5);
  for (int j = 0; j < shape.groups(); ++j) {
    const double group_sum =
        pair.lofa.segment(shape.group_offset(j), shape.group_size(j)).sum();
    CHECK_THAT(pair.hifa[j], Catch::Matchers::WithinAbs(group_sum, 1e-6));
  }
  CHECK((pair.lofa - oracle.coeffs()).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("a single low-level feature collapses both levels") {
  const NestedShape shape({1});
  const auto oracle = make_linear_oracle(shape, {from_std({0.7})}, 0.0, 21);
  const auto pair =
      lime_two_level(shape, oracle, 50, 50, {WeightKind::cosine}, 0.0, 0.0, 9);
  CHECK_THAT(pair.hifa[0], Catch::Matchers::WithinAbs(pair.lofa[0], 1e-9));
  CHECK_THAT(pair.hifa[0], Catch::Matchers::WithinAbs(0.7, 1e-9));
}

TEST_CASE("separate fits of a biased bag oracle are inconsistent") {
  const NestedShape shape({4, 4, 4, 4});
  const auto oracle = make_mil_oracle(shape, {0}, 0.2, 23);
  const auto m = build_aggregation_matrix(shape);
  const auto pair =
      lime_two_level(shape, oracle, 12, 20, {WeightKind::cosine}, 0.1, 0.1, 31);
  CHECK(consistency_residual(pair, m) > 0.0);
}
