#pragma once

#include <json.hpp>

#include "disf/diagnostics.hpp"
#include "disf/selector.hpp"

namespace disf {

nlohmann::json to_json(const SelectionResult& result);
nlohmann::json to_json(const DiversityReport& report);
nlohmann::json to_json(const SubmodularityStats& stats);
nlohmann::json to_json(const MonotonicityCurve& curve);

}  // namespace disf
