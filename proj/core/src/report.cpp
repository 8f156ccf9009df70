#include "speclab/report.hpp"

#include "json.hpp"

#include <stdexcept>

namespace speclab {

using json = nlohmann::ordered_json;

namespace detail {

json report_json(const BoundReport& r) {
  json j;
  j["bound_id"] = r.bound_id;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  if (r.constant_used) j["constant_used"] = *r.constant_used;
  else j["constant_used"] = "empirical";
  j["holds"] = r.holds;
  j["margin"] = r.margin;
  j["grid_digest"] = r.inputs_digest;
  for (const auto& [k, v] : r.extras) j[k] = v;
  return j;
}

}  // namespace detail

double BoundReport::extra(const std::string& key) const {
  for (const auto& [k, v] : extras)
    if (k == key) return v;
  throw std::out_of_range("speclab: report '" + bound_id + "' has no extra '" + key + "'");
}

std::string to_json_string(const BoundReport& r) { return detail::report_json(r).dump(2); }

std::string to_json_string(const std::vector<BoundReport>& rs) {
  json arr = json::array();
  for (const auto& r : rs) arr.push_back(detail::report_json(r));
  return arr.dump(2);
}

}  // namespace speclab
