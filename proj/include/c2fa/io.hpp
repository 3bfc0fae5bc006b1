#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2fa/admm.hpp"
#include "c2fa/errors.hpp"
#include "c2fa/metrics.hpp"
#include "c2fa/nested.hpp"
#include "c2fa/types.hpp"

namespace c2fa {

// Fixed shortest-width formatting that round-trips doubles; keeps CSV output
// byte-stable run to run.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json to_json(const NestedShape& shape) {
  return {{"group_sizes", shape.group_sizes()}};
}

inline NestedShape shape_from_json(const nlohmann::json& j) {
  if (!j.contains("group_sizes") || !j["group_sizes"].is_array())
    throw config_error("group_sizes", "expected an array of positive integers");
  return NestedShape(j["group_sizes"].get<std::vector<int>>());
}

inline nlohmann::json to_json(const AttributionPair& pair) {
  return {{"hifa", to_std(pair.hifa)}, {"lofa", to_std(pair.lofa)}};
}

inline AttributionPair pair_from_json(const nlohmann::json& j) {
  if (!j.contains("hifa") || !j.contains("lofa"))
    throw config_error("hifa/lofa", "attribution pair needs both arrays");
  return {from_std(j["hifa"].get<std::vector<double>>()),
          from_std(j["lofa"].get<std::vector<double>>())};
}

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"ndcg", r.ndcg},
          {"auroc", r.auroc},
          {"insertion_low", r.insertion_low},
          {"deletion_low", r.deletion_low},
          {"insertion_high", r.insertion_high},
          {"deletion_high", r.deletion_high},
          {"consistency", r.consistency},
          {"mihl_agree", r.mihl_agree},
          {"converged", r.converged}};
}

// 0/1 CSV dump of a mask matrix for audit.
inline void write_mask_csv(std::ostream& out, const Matrix& masks) {
  for (Index n = 0; n < masks.rows(); ++n) {
    for (Index k = 0; k < masks.cols(); ++k) {
      if (k > 0) out << ',';
      out << (masks(n, k) != 0.0 ? '1' : '0');
    }
    out << '\n';
  }
}

inline void write_mask_csv(const std::string& path, const Matrix& masks) {
  std::ofstream out(path);
  if (!out) throw error("cannot open " + path + " for writing");
  write_mask_csv(out, masks);
}

// Convergence history as CSV, one row per iteration.
inline void write_trace_csv(std::ostream& out, const AdmmTrace& trace) {
  out << "iter,h1,h2,h3,objective\n";
  for (int t = 0; t < trace.iterations(); ++t) {
    const auto i = static_cast<size_t>(t);
    out << (t + 1) << ',' << fmt_g17(trace.h1_sq[i]) << ','
        << fmt_g17(trace.h2_sq[i]) << ',' << fmt_g17(trace.h3_sq[i]) << ','
        << fmt_g17(trace.objective[i]) << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const AdmmTrace& trace) {
  std::ofstream out(path);
  if (!out) throw error("cannot open " + path + " for writing");
  write_trace_csv(out, trace);
}

}  // namespace c2fa
