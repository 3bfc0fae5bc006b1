#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "c2fa/admm.hpp"
#include "c2fa/kernels.hpp"
#include "c2fa/kkt.hpp"
#include "c2fa/ridge.hpp"
#include "c2fa/synthetic.hpp"

using namespace c2fa;

namespace {

struct Instance {
  NestedShape shape;
  AggregationMatrix m;
  PerturbationSet high;
  PerturbationSet low;
};

Instance random_instance(std::mt19937_64& rng, std::vector<int> sizes,
                         int n_high, int n_low) {
  NestedShape shape(std::move(sizes));
  AggregationMatrix m = build_aggregation_matrix(shape);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PerturbationSet high;
  high.level = Level::high;
  high.masks = sample_masks(n_high, shape.groups(), rng());
  high.outputs.resize(n_high);
  for (int i = 0; i < n_high; ++i) high.outputs[i] = unit(rng);
  high.weights = weigh(high.masks, {WeightKind::cosine});
  PerturbationSet low;
  low.level = Level::low;
  low.masks = sample_masks(n_low, shape.total(), rng());
  low.outputs.resize(n_low);
  for (int i = 0; i < n_low; ++i) low.outputs[i] = unit(rng);
  low.weights = weigh(low.masks, {WeightKind::cosine});
  return {std::move(shape), std::move(m), std::move(high), std::move(low)};
}

double pair_distance(const AttributionPair& a, const AttributionPair& b) {
  return std::sqrt((a.hifa - b.hifa).squaredNorm() +
                   (a.lofa - b.lofa).squaredNorm());
}

}  // namespace

TEST_CASE("zero outputs converge to zero in one sweep") {
  std::mt19937_64 rng(2);
  auto inst = random_instance(rng, {2, 3}, 20, 30);
  inst.high.outputs.setZero();
  inst.low.outputs.setZero();
  const auto result = solve_c2fa(inst.high, inst.low, inst.m, SolverConfig{});
  CHECK(result.state.iter == 1);
  CHECK(result.pair.hifa.norm() == 0.0);
  CHECK(result.pair.lofa.norm() == 0.0);
}

TEST_CASE("joint solve matches the closed-form reference") {
  std::mt19937_64 rng(7);
  auto inst = random_instance(rng, {2, 2}, 32, 32);
  SolverConfig cfg;
  cfg.lambda_high = cfg.lambda_low = 0.01;
  cfg.mu2 = 0.1;
  cfg.eps1 = cfg.eps2 = 1e-6;
  cfg.max_iters = 200000;
  const auto admm = solve_c2fa(inst.high, inst.low, inst.m, cfg);
  const auto kkt = solve_kkt_oracle(inst.high, inst.low, inst.m, 0.01, 0.01);
  CHECK(pair_distance(admm.pair, kkt) <= 1e-3);
}

TEST_CASE("joint solve matches the reference across random instances") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> sizes(1 + rng() % 4);
    for (auto& d : sizes) d = 1 + static_cast<int>(rng() % 4);
    NestedShape probe(sizes);
    const int dims = probe.groups() + probe.total();
    auto inst = random_instance(rng, sizes, 4 * dims, 4 * dims);
    const double lambda = trial % 2 == 0 ? 0.1 : 1.0;
    SolverConfig cfg;
    cfg.lambda_high = cfg.lambda_low = lambda;
    cfg.mu2 = trial % 3 == 0 ? 0.01 : 0.1;
    cfg.eps1 = cfg.eps2 = 1e-6;
    cfg.max_iters = 400000;
    const auto admm = solve_c2fa(inst.high, inst.low, inst.m, cfg);
    const auto kkt = solve_kkt_oracle(inst.high, inst.low, inst.m, lambda, lambda);
    CHECK(pair_distance(admm.pair, kkt) <= 1e-3);
  }
}

TEST_CASE("returned pair honors the residual tolerance") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_instance(rng, {3, 2, 4}, 40, 60);
    SolverConfig cfg;  // defaults: eps2 = 1e-4
    cfg.mu2 = trial % 2 == 0 ? 0.01 : 0.1;
    const auto result = solve_c2fa(inst.high, inst.low, inst.m, cfg);
    CHECK(consistency_residual(result.pair, inst.m) <= cfg.eps2);
    const auto& trace = result.trace;
    const int last = trace.iterations() - 1;
    CHECK(trace.h1_sq[last] + trace.h2_sq[last] + trace.h3_sq[last] < cfg.eps2);
    CHECK(trace.change_sq[last] < cfg.eps1);
  }
}

TEST_CASE("vanishing consistency penalty recovers the separate fits") {
  std::mt19937_64 rng(19);
  auto inst = random_instance(rng, {2, 3}, 50, 70);
  const AttributionPair separate =
      lime_from_sets(inst.high, inst.low, 0.1, 0.1);
  for (double mu2 : {1e-6, 1e-8}) {
    SolverConfig cfg;
    cfg.mu2 = mu2;
    cfg.eps1 = 1e-14;
    cfg.eps2 = 1.0;  // the change norm is the binding condition here
    cfg.max_iters = 100000;
    const auto result = solve_c2fa(inst.high, inst.low, inst.m, cfg);
    CHECK(pair_distance(result.pair, separate) <= 1e-3);
  }
}

TEST_CASE("different initializations reach the same solution") {
  std::mt19937_64 rng(23);
  auto inst = random_instance(rng, {2, 2, 2}, 48, 48);
  SolverConfig cfg;
  cfg.lambda_high = cfg.lambda_low = 0.1;
  cfg.mu2 = 0.1;
  cfg.eps1 = cfg.eps2 = 1e-10;
  cfg.max_iters = 400000;
  const auto cold = solve_c2fa(inst.high, inst.low, inst.m, cfg);

  AdmmState warm;
  const int j = inst.shape.groups(), d = inst.shape.total();
  std::normal_distribution<double> normal(0.0, 1.0);
  warm.alpha.resize(j);
  warm.alpha_bar.resize(j);
  warm.v1.resize(j);
  warm.v3.resize(j);
  warm.beta.resize(d);
  warm.beta_bar.resize(d);
  warm.v2.resize(d);
  for (int i = 0; i < j; ++i) {
    warm.alpha[i] = normal(rng);
    warm.alpha_bar[i] = normal(rng);
    warm.v1[i] = normal(rng);
    warm.v3[i] = normal(rng);
  }
  for (int i = 0; i < d; ++i) {
    warm.beta[i] = normal(rng);
    warm.beta_bar[i] = normal(rng);
    warm.v2[i] = normal(rng);
  }
  cfg.init = warm;
  const auto started = solve_c2fa(inst.high, inst.low, inst.m, cfg);
  CHECK(pair_distance(cold.pair, started.pair) <= 1e-4);
}

TEST_CASE("iteration cap raises a convergence error carrying the trace") {
  std::mt19937_64 rng(29);
  auto inst = random_instance(rng, {2, 2}, 24, 24);
  SolverConfig cfg;
  cfg.eps1 = cfg.eps2 = 1e-14;
  cfg.max_iters = 3;
  try {
    solve_c2fa(inst.high, inst.low, inst.m, cfg);
    FAIL("expected convergence_error");
  } catch (const convergence_error& e) {
    CHECK(e.trace().iterations() == 3);
    CHECK(e.last().hifa.size() == 2);
    CHECK(e.last().lofa.size() == 4);
  }
}

TEST_CASE("trace lengths equal iterations run") {
  std::mt19937_64 rng(31);
  auto inst = random_instance(rng, {2, 2}, 24, 24);
  const auto result = solve_c2fa(inst.high, inst.low, inst.m, SolverConfig{});
  const int n = result.trace.iterations();
  CHECK(n == result.state.iter);
  CHECK(result.trace.h2_sq.size() == static_cast<size_t>(n));
  CHECK(result.trace.h3_sq.size() == static_cast<size_t>(n));
  CHECK(result.trace.objective.size() == static_cast<size_t>(n));
  CHECK(result.trace.change_sq.size() == static_cast<size_t>(n));
}

TEST_CASE("penalized objective of the zero problem is zero") {
  std::mt19937_64 rng(37);
  auto inst = random_instance(rng, {2, 2}, 16, 16);
  inst.high.outputs.setZero();
  inst.low.outputs.setZero();
  AttributionPair zero{Vector::Zero(2), Vector::Zero(4)};
  CHECK(penalized_objective(zero, inst.high, inst.low, inst.m, SolverConfig{}) ==
        0.0);
}

TEST_CASE("joint solution wins the penalized objective when separate fits clash") {
  // Low side kept underdetermined so shrinkage makes the separate pair
  // inconsistent and the consistency subspace is nearly free to reach.
  const NestedShape shape({10, 10, 10, 10});
  const auto m = build_aggregation_matrix(shape);
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int trial = 0; trial < 8 && checked < 5; ++trial) {
    const auto oracle =
        make_linear_oracle(shape, {{}, 0.9}, 0.0, 1000 + trial);
    const std::uint64_t seed = 500 + trial;
    auto high = collect(oracle,
                        sample_masks(60, shape.groups(),
                                     level_seed(seed, Level::high)),
                        Level::high);
    auto low = collect(oracle,
                       sample_masks(25, shape.total(),
                                    level_seed(seed, Level::low)),
                       Level::low);
    apply_weights(high, {WeightKind::cosine});
    apply_weights(low, {WeightKind::cosine});
    const AttributionPair separate = lime_from_sets(high, low, 1e-3, 1e-3);
    if (consistency_residual(separate, m) <= 1e-3) continue;
    ++checked;
    for (double mu2 : {0.01, 0.1}) {
      SolverConfig cfg;
      cfg.lambda_high = cfg.lambda_low = 1e-3;
      cfg.mu2 = mu2;
      cfg.eps1 = cfg.eps2 = 1e-10;
      cfg.max_iters = 400000;
      const auto joint = solve_c2fa(high, low, m, cfg);
      const double f_joint =
          penalized_objective(joint.pair, high, low, m, cfg);
      const double f_separate =
          penalized_objective(separate, high, low, m, cfg);
      CHECK(f_joint < f_separate);
      // without the penalty the separate pair is the unconstrained optimum
      const double j_joint =
          f_joint - 0.5 * mu2 * consistency_residual(joint.pair, m);
      const double j_separate =
          f_separate - 0.5 * mu2 * consistency_residual(separate, m);
      CHECK(j_separate <= j_joint + 1e-12);
    }
  }
  CHECK(checked >= 5);
}

TEST_CASE("solver rejects invalid configurations and dimensions") {
  std::mt19937_64 rng(43);
  auto inst = random_instance(rng, {2, 2}, 16, 16);
  SolverConfig cfg;
  cfg.mu1 = 0.0;
  CHECK_THROWS_AS(solve_c2fa(inst.high, inst.low, inst.m, cfg), config_error);
  cfg = SolverConfig{};
  const auto wrong = build_aggregation_matrix(NestedShape({3, 2}));
  CHECK_THROWS_AS(solve_c2fa(inst.high, inst.low, wrong, cfg), dimension_error);
}

// --- closed-form reference ---

TEST_CASE("reference solution collapses to a pooled ridge fit when J=D=1") {
  std::mt19937_64 rng(47);
  auto inst = random_instance(rng, {1}, 30, 40);
  const auto pair = solve_kkt_oracle(inst.high, inst.low, inst.m, 0.2, 0.3);
  CHECK_THAT(pair.hifa[0], Catch::Matchers::WithinAbs(pair.lofa[0], 1e-12));

  RidgeProblem pooled;
  pooled.masks.resize(70, 1);
  pooled.masks << inst.high.masks, inst.low.masks;
  pooled.outputs.resize(70);
  pooled.outputs << inst.high.outputs, inst.low.outputs;
  pooled.weights.resize(70);
  pooled.weights << inst.high.weights, inst.low.weights;
  pooled.lambda = 0.5;  // strengths add once the variables are identified
  const Vector theta = solve_ridge(pooled);
  CHECK_THAT(pair.hifa[0], Catch::Matchers::WithinAbs(theta[0], 1e-10));
}

TEST_CASE("reference solutions satisfy the constraint to machine precision") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> sizes(1 + rng() % 4);
    for (auto& d : sizes) d = 1 + static_cast<int>(rng() % 4);
    NestedShape probe(sizes);
    const int dims = probe.groups() + probe.total();
    auto inst = random_instance(rng, sizes, 4 * dims, 4 * dims);
    const auto pair = solve_kkt_oracle(inst.high, inst.low, inst.m, 0.05, 0.05);
    CHECK((pair.hifa - inst.m.matrix() * pair.lofa).lpNorm<Eigen::Infinity>() <=
          1e-10);
  }
}

TEST_CASE("degenerate unregularized reference systems are reported") {
  std::mt19937_64 rng(59);
  auto inst = random_instance(rng, {2, 2}, 1, 1);
  CHECK_THROWS_AS(solve_kkt_oracle(inst.high, inst.low, inst.m, 0.0, 0.0),
                  singular_error);
}

TEST_CASE("surrogates approximate an additive model uniformly") {
  const NestedShape shape({2, 2, 2});
  const auto oracle =
      make_linear_oracle(shape, {from_std({0.2, 0.1, 0.15, 0.15, 0.2, 0.1})},
                         0.0, 61);
  SolverConfig cfg;
  cfg.lambda_high = cfg.lambda_low = 1e-8;
  cfg.mu2 = 0.1;
  cfg.eps1 = cfg.eps2 = 1e-12;
  cfg.max_iters = 400000;
  const auto result =
      c2fa_two_level(shape, oracle, 120, 200, {WeightKind::cosine}, cfg, 67);
  // enumerate every high-level mask and every low-level mask on a subset
  double worst = 0.0;
  for (int bits = 0; bits < (1 << shape.groups()); ++bits) {
    Vector mask(shape.groups());
    for (int j = 0; j < shape.groups(); ++j) mask[j] = (bits >> j) & 1;
    worst = std::max(worst, std::abs(oracle.evaluate_high(mask) -
                                     result.pair.hifa.dot(mask)));
  }
  CHECK(worst <= 1e-4);
}
