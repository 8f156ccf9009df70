#pragma once

#include "speclab/report.hpp"

#include "json.hpp"

namespace speclab::detail {

nlohmann::ordered_json report_json(const BoundReport& r);

}  // namespace speclab::detail
