#pragma once

#include <json.hpp>

#include "flockplan/domain.hpp"

namespace flockplan {

void to_json(nlohmann::json& j, const DayPlan& p);
void from_json(const nlohmann::json& j, DayPlan& p);
void to_json(nlohmann::json& j, const InitialConditions& ic);
void from_json(const nlohmann::json& j, InitialConditions& ic);

} // namespace flockplan
