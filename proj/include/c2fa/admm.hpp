#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "c2fa/errors.hpp"
#include "c2fa/kernels.hpp"
#include "c2fa/nested.hpp"
#include "c2fa/perturbation.hpp"
#include "c2fa/ridge.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// Iterate of the splitting scheme: working variables, their auxiliary copies,
// and the three multiplier vectors.
struct AdmmState {
  Vector alpha;      // length J
  Vector alpha_bar;  // length J
  Vector beta;       // length D
  Vector beta_bar;   // length D
  Vector v1;         // length J
  Vector v2;         // length D
  Vector v3;         // length J
  int iter = 0;
};

struct SolverConfig {
  double lambda_high = 0.1;  // l2 strength on the high-level coefficients
  double lambda_low = 0.1;   // l2 strength on the low-level coefficients
  double mu1 = 0.1;          // splitting penalty
  double mu2 = 0.01;         // consistency penalty
  double eps1 = 1e-4;        // change-norm stop threshold
  double eps2 = 1e-4;        // residual stop threshold
  int max_iters = 10000;
  std::optional<AdmmState> init;  // absent: all-zero start

  void validate() const {
    if (lambda_high < 0.0) throw config_error("solver.lambda_high", "must be >= 0");
    if (lambda_low < 0.0) throw config_error("solver.lambda_low", "must be >= 0");
    if (mu1 <= 0.0) throw config_error("solver.mu1", "must be > 0");
    if (mu2 <= 0.0) throw config_error("solver.mu2", "must be > 0");
    if (eps1 <= 0.0) throw config_error("solver.eps1", "must be > 0");
    if (eps2 <= 0.0) throw config_error("solver.eps2", "must be > 0");
    if (max_iters < 1) throw config_error("solver.max_iters", "must be >= 1");
  }
};

// Per-iteration history: squared splitting/consistency residuals, the
// unconstrained objective, and the change norm driving the stop rule.
struct AdmmTrace {
  std::vector<double> h1_sq;
  std::vector<double> h2_sq;
  std::vector<double> h3_sq;
  std::vector<double> objective;
  std::vector<double> change_sq;

  int iterations() const noexcept { return static_cast<int>(h1_sq.size()); }
};

// Raised when the iteration cap is hit; carries the last iterate so callers
// can inspect or record the non-converged solution.
class convergence_error : public error {
 public:
  convergence_error(const std::string& what, AttributionPair last, AdmmTrace trace)
      : error(what), last_(std::move(last)), trace_(std::move(trace)) {}
  const AttributionPair& last() const noexcept { return last_; }
  const AdmmTrace& trace() const noexcept { return trace_; }

 private:
  AttributionPair last_;
  AdmmTrace trace_;
};

struct C2faResult {
  AttributionPair pair;
  AdmmTrace trace;
  AdmmState state;
};

namespace detail {

// Quadratic pieces of a weighted least-squares loss cached as Gram matrices,
// so per-iteration objective evaluation is independent of the sample count:
// 1/2 (y - Z x)' W (y - Z x) = 1/2 (x' G x - 2 b' x + c).
struct QuadCache {
  Matrix gram;
  Vector lin;
  double constant = 0.0;
};

inline QuadCache make_quad(const PerturbationSet& s) {
  QuadCache q;
  q.gram = s.masks.transpose() * s.weights.asDiagonal() * s.masks;
  q.lin = s.masks.transpose() * (s.weights.asDiagonal() * s.outputs);
  q.constant = s.outputs.dot(s.weights.asDiagonal() * s.outputs);
  return q;
}

inline Matrix spd_inverse(Matrix m, const char* what) {
  const Index n = m.rows();
  Eigen::LLT<Matrix> llt(std::move(m));
  if (llt.info() != Eigen::Success)
    throw singular_error(std::string(what) + " precomputation is not positive definite");
  return llt.solve(Matrix::Identity(n, n));
}

}  // namespace detail

// Joint two-level fit under the per-group consistency constraint
// alpha_j = sum of group j's betas, solved by an ADMM splitting.
//
// Precomputes
//   A = (Zh' Wh Zh + (mu1 + mu2) I)^-1,   B = A Zh' Wh yh,
//   C = (Zl' Wl Zl + mu1 I + mu2 M'M)^-1, D = C Zl' Wl yl,
// starts from zero (or cfg.init) and alternates
//   alpha    = B + A (mu2 M beta + mu1 alpha_bar - v1 - v3)
//   alpha_bar= (v1 + mu1 alpha) / (mu1 + 2 lambda_high)
//   beta     = D + C (M'(v3 + mu2 alpha) + mu1 beta_bar - v2)
//   beta_bar = (v2 + mu1 beta) / (mu1 + 2 lambda_low)
//   v1 += mu1 (alpha - alpha_bar); v2 += mu1 (beta - beta_bar);
//   v3 += mu2 (alpha - M beta)
// until both the change norm |d alpha_bar|^2 + |d beta_bar|^2 < eps1 and the
// residual |h1|^2 + |h2|^2 + |h3|^2 < eps2 hold. Returns the auxiliary pair
// (alpha_bar, beta_bar), which must itself meet the eps2 consistency
// tolerance before the iteration stops.
inline C2faResult solve_c2fa(const PerturbationSet& high,
                             const PerturbationSet& low,
                             const AggregationMatrix& m,
                             const SolverConfig& cfg) {
  cfg.validate();
  high.validate();
  low.validate();
  const Matrix& M = m.matrix();
  const Index j = M.rows();
  const Index d = M.cols();
  if (high.masks.cols() != j)
    throw dimension_error("high-level mask width does not match group count");
  if (low.masks.cols() != d)
    throw dimension_error("low-level mask width does not match feature count");

  const detail::QuadCache qh = detail::make_quad(high);
  const detail::QuadCache ql = detail::make_quad(low);

  Matrix a_sys = qh.gram;
  a_sys.diagonal().array() += cfg.mu1 + cfg.mu2;
  const Matrix a_inv = detail::spd_inverse(std::move(a_sys), "high-level");
  const Vector b_vec = a_inv * qh.lin;

  Matrix c_sys = ql.gram + cfg.mu2 * (M.transpose() * M);
  c_sys.diagonal().array() += cfg.mu1;
  const Matrix c_inv = detail::spd_inverse(std::move(c_sys), "low-level");
  const Vector d_vec = c_inv * ql.lin;

  AdmmState s;
  if (cfg.init) {
    s = *cfg.init;
    if (s.alpha.size() != j || s.alpha_bar.size() != j || s.v1.size() != j ||
        s.v3.size() != j || s.beta.size() != d || s.beta_bar.size() != d ||
        s.v2.size() != d)
      throw dimension_error("custom ADMM initialization has wrong dimensions");
  } else {
    s.alpha = Vector::Zero(j);
    s.alpha_bar = Vector::Zero(j);
    s.beta = Vector::Zero(d);
    s.beta_bar = Vector::Zero(d);
    s.v1 = Vector::Zero(j);
    s.v2 = Vector::Zero(d);
    s.v3 = Vector::Zero(j);
  }

  AdmmTrace trace;
  const int reserve = std::min(cfg.max_iters, 1 << 14);
  trace.h1_sq.reserve(reserve);
  trace.h2_sq.reserve(reserve);
  trace.h3_sq.reserve(reserve);
  trace.objective.reserve(reserve);
  trace.change_sq.reserve(reserve);

  Vector prev_alpha_bar(j), prev_beta_bar(d);
  Vector m_beta(j), work_j(j), work_d(d), gx_j(j), gx_d(d);
  const double inv_bar_h = 1.0 / (cfg.mu1 + 2.0 * cfg.lambda_high);
  const double inv_bar_l = 1.0 / (cfg.mu1 + 2.0 * cfg.lambda_low);

  for (int t = 1; t <= cfg.max_iters; ++t) {
    prev_alpha_bar = s.alpha_bar;
    prev_beta_bar = s.beta_bar;

    m_beta.noalias() = M * s.beta;
    work_j = cfg.mu2 * m_beta + cfg.mu1 * s.alpha_bar - s.v1 - s.v3;
    s.alpha = b_vec;
    s.alpha.noalias() += a_inv * work_j;
    s.alpha_bar = inv_bar_h * (s.v1 + cfg.mu1 * s.alpha);
    work_j = s.v3 + cfg.mu2 * s.alpha;
    work_d.noalias() = M.transpose() * work_j;
    work_d += cfg.mu1 * s.beta_bar - s.v2;
    s.beta = d_vec;
    s.beta.noalias() += c_inv * work_d;
    s.beta_bar = inv_bar_l * (s.v2 + cfg.mu1 * s.beta);
    s.v1 += cfg.mu1 * (s.alpha - s.alpha_bar);
    s.v2 += cfg.mu1 * (s.beta - s.beta_bar);
    m_beta.noalias() = M * s.beta;
    s.v3 += cfg.mu2 * (s.alpha - m_beta);
    s.iter = t;

    const double h1 = (s.alpha - s.alpha_bar).squaredNorm();
    const double h2 = (s.beta - s.beta_bar).squaredNorm();
    const double h3 = (s.alpha - m_beta).squaredNorm();
    const double change = (prev_alpha_bar - s.alpha_bar).squaredNorm() +
                          (prev_beta_bar - s.beta_bar).squaredNorm();
    gx_j.noalias() = qh.gram * s.alpha;
    gx_d.noalias() = ql.gram * s.beta;
    const double objective =
        0.5 * (s.alpha.dot(gx_j) - 2.0 * qh.lin.dot(s.alpha) + qh.constant) +
        0.5 * (s.beta.dot(gx_d) - 2.0 * ql.lin.dot(s.beta) + ql.constant) +
        cfg.lambda_high * s.alpha.squaredNorm() +
        cfg.lambda_low * s.beta.squaredNorm();
    trace.h1_sq.push_back(h1);
    trace.h2_sq.push_back(h2);
    trace.h3_sq.push_back(h3);
    trace.objective.push_back(objective);
    trace.change_sq.push_back(change);

    if (!s.alpha.allFinite() || !s.beta.allFinite())
      throw singular_error("ADMM iterates are not finite at iteration " +
                           std::to_string(t));
    if (change < cfg.eps1 && h1 + h2 + h3 < cfg.eps2) {
      // The returned pair is the auxiliary one, whose consistency gap can sit
      // a hair above the residual measured at the working variables; keep
      // iterating until the returned pair itself meets the tolerance.
      m_beta.noalias() = M * s.beta_bar;
      if ((s.alpha_bar - m_beta).squaredNorm() <= cfg.eps2)
        return {{s.alpha_bar, s.beta_bar}, std::move(trace), std::move(s)};
    }
  }

  const std::string message =
      "ADMM did not converge within " + std::to_string(cfg.max_iters) +
      " iterations (change " + std::to_string(trace.change_sq.back()) +
      ", residual " +
      std::to_string(trace.h1_sq.back() + trace.h2_sq.back() +
                     trace.h3_sq.back()) +
      ")";
  AttributionPair last{s.alpha_bar, s.beta_bar};
  throw convergence_error(message, std::move(last), std::move(trace));
}

// Value of the consistency-penalized objective at an arbitrary pair:
// the two weighted losses, both l2 terms, and mu2/2 |alpha - M beta|^2.
inline double penalized_objective(const AttributionPair& pair,
                                  const PerturbationSet& high,
                                  const PerturbationSet& low,
                                  const AggregationMatrix& m,
                                  const SolverConfig& cfg) {
  if (pair.hifa.size() != m.matrix().rows() ||
      pair.lofa.size() != m.matrix().cols())
    throw dimension_error("attribution pair does not match aggregation matrix");
  auto weighted_loss = [](const PerturbationSet& s, const Vector& x) {
    const Vector r = s.outputs - s.masks * x;
    return 0.5 * r.dot(s.weights.asDiagonal() * r);
  };
  return weighted_loss(high, pair.hifa) + weighted_loss(low, pair.lofa) +
         cfg.lambda_high * pair.hifa.squaredNorm() +
         cfg.lambda_low * pair.lofa.squaredNorm() +
         0.5 * cfg.mu2 * (pair.hifa - m.matrix() * pair.lofa).squaredNorm();
}

// Full pipeline convenience mirroring lime_two_level: sample, query, weigh,
// then run the joint solver.
inline C2faResult c2fa_two_level(const NestedShape& shape,
                                 const BlackBoxOracle& oracle, int n_high,
                                 int n_low, WeightSpec weight_spec,
                                 const SolverConfig& cfg, std::uint64_t seed) {
  auto high = collect(
      oracle, sample_masks(n_high, shape.groups(), level_seed(seed, Level::high)),
      Level::high);
  auto low = collect(
      oracle, sample_masks(n_low, shape.total(), level_seed(seed, Level::low)),
      Level::low);
  apply_weights(high, weight_spec);
  apply_weights(low, weight_spec);
  return solve_c2fa(high, low, build_aggregation_matrix(shape), cfg);
}

}  // namespace c2fa
