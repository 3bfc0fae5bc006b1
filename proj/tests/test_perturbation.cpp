#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "c2fa/io.hpp"
#include "c2fa/perturbation.hpp"
#include "c2fa/synthetic.hpp"

using namespace c2fa;

namespace {

// Flat additive toy model over two low-level features.
struct TinyLinearOracle : BlackBoxOracle {
  double evaluate_high(const Vector& mask) const override {
    return evaluate_low(mask);
  }
  double evaluate_low(const Vector& mask) const override {
    return 0.5 * mask[0] + 0.3 * mask[1];
  }
};

struct FailingOracle : BlackBoxOracle {
  double evaluate_high(const Vector&) const override { return 0.0; }
  double evaluate_low(const Vector& mask) const override {
    if (mask.sum() >= 3.0) throw std::runtime_error("saturated");
    return 0.0;
  }
};

}  // namespace

TEST_CASE("sampled rows always contain a one") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix z = sample_masks(1, 3, seed);
    CHECK(z.row(0).sum() >= 1.0);
  }
}

TEST_CASE("sampled columns are balanced") {
  const Matrix z = sample_masks(10000, 8, 42);
  for (int k = 0; k < 8; ++k) {
    const double mean = z.col(k).mean();
    CHECK(mean >= 0.47);
    CHECK(mean <= 0.53);
  }
}

TEST_CASE("sampling is deterministic per seed") {
  CHECK(sample_masks(16, 5, 7) == sample_masks(16, 5, 7));
  CHECK(sample_masks(4, 4, 1) != sample_masks(4, 4, 2));
  CHECK_THROWS_AS(sample_masks(0, 3, 1), dimension_error);
  CHECK_THROWS_AS(sample_masks(3, 0, 1), dimension_error);
}

TEST_CASE("collect evaluates rows in order") {
  TinyLinearOracle oracle;
  Matrix masks(2, 2);
  masks << 1, 0, 1, 1;
  const auto set = collect(oracle, masks, Level::low);
  REQUIRE(set.outputs.size() == 2);
  CHECK(set.outputs[0] == 0.5);
  CHECK(set.outputs[1] == 0.8);
  CHECK(set.weights == Vector::Ones(2));
  CHECK(set.level == Level::low);
  set.validate();
}

TEST_CASE("all-zero mask returns the oracle baseline") {
  TinyLinearOracle oracle;
  Matrix masks = Matrix::Zero(1, 2);
  CHECK(collect(oracle, masks, Level::low).outputs[0] == 0.0);
}

TEST_CASE("batch and per-row collection agree") {
  const NestedShape shape({2, 2});
  const auto oracle = make_linear_oracle(shape, {from_std({0.4, 0.1, 0.3, 0.1})},
                                         0.05, 99);
  const Matrix masks = sample_masks(64, 4, 3);
  const auto set = collect(oracle, masks, Level::low);
  CHECK(set.outputs == oracle.evaluate_batch(masks, Level::low));
  // deterministic per mask: querying again reproduces the outputs
  CHECK(set.outputs == collect(oracle, masks, Level::low).outputs);
}

TEST_CASE("collect reports the failing row") {
  FailingOracle oracle;
  Matrix masks = Matrix::Zero(3, 4);
  masks.row(1).setOnes();
  try {
    collect(oracle, masks, Level::low);
    FAIL("expected oracle_error");
  } catch (const oracle_error& e) {
    CHECK(e.row() == 1);
  }
}

TEST_CASE("mask matrices serialize as 0/1 csv") {
  Matrix masks(2, 3);
  masks << 1, 0, 1, 0, 1, 1;
  std::ostringstream out;
  write_mask_csv(out, masks);
  CHECK(out.str() == "1,0,1\n0,1,1\n");
}

TEST_CASE("perturbation set validation") {
  PerturbationSet set;
  set.masks = Matrix::Ones(3, 2);
  set.outputs = Vector::Zero(2);
  set.weights = Vector::Ones(3);
  CHECK_THROWS_AS(set.validate(), dimension_error);
  set.outputs = Vector::Zero(3);
  set.weights[1] = -0.5;
  CHECK_THROWS_AS(set.validate(), dimension_error);
}
