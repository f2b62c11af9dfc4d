#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "flockplan/domain_json.hpp"
#include "flockplan/planner/integration.hpp"

namespace flockplan::planner {

/// {schema_version, weeks:[{week, genome, expanded_days}], i_c, fcr_est, fcr_res}
nlohmann::json plan_to_json(const FinalActionPlan& plan, double fcr_est, double fcr_res);
/// Reads the genomes and i_c back; the expanded days are checked against the
/// genomes.
FinalActionPlan plan_from_json(const nlohmann::json& j);

void save_plan(const FinalActionPlan& plan, double fcr_est, double fcr_res, const std::filesystem::path& path);
FinalActionPlan load_plan(const std::filesystem::path& path);

/// Flat CSV of the 40 day plans: day,t_min,t_avg,t_max,h_min,h_avg,h_max.
void write_plan_csv(const std::vector<DayPlan>& plans, std::ostream& out);

nlohmann::json report_to_json(const PlannerReport& report);

/// Day-by-day trajectory CSV: day,mdw,dfcpb,nlbpa,fcr.
void write_trajectory_csv(const std::vector<Outputs>& days, std::ostream& out);

} // namespace flockplan::planner
