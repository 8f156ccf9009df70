#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace speclab {

/// One executable inequality: lhs <= constant * rhs_base (or lhs <= rhs when the
/// constant is baked in). When the inequality has no pinned constant, the
/// report carries the observed ratio and `empirical` is set instead of a value.
struct BoundReport {
  std::string bound_id;
  double lhs = 0.0;
  double rhs = 0.0;
  std::optional<double> constant_used;  // empty = "empirical"
  bool holds = false;
  double margin = 0.0;  // rhs - lhs
  std::string inputs_digest;
  std::vector<std::pair<std::string, double>> extras;

  double extra(const std::string& key) const;
  void finish() { margin = rhs - lhs; }
};

/// Deterministic JSON rendering (fixed key order, shortest-roundtrip doubles).
std::string to_json_string(const BoundReport& r);
std::string to_json_string(const std::vector<BoundReport>& rs);

}  // namespace speclab
