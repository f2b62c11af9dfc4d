#include "flockplan/domain_json.hpp"

namespace flockplan {

using nlohmann::json;

void to_json(json& j, const DayPlan& p) {
    j = json{{"day", p.day},     {"t_min", p.t_min}, {"t_avg", p.t_avg}, {"t_max", p.t_max},
             {"h_min", p.h_min}, {"h_avg", p.h_avg}, {"h_max", p.h_max}};
}

void from_json(const json& j, DayPlan& p) {
    j.at("day").get_to(p.day);
    j.at("t_min").get_to(p.t_min);
    j.at("t_avg").get_to(p.t_avg);
    j.at("t_max").get_to(p.t_max);
    j.at("h_min").get_to(p.h_min);
    j.at("h_avg").get_to(p.h_avg);
    j.at("h_max").get_to(p.h_max);
}

void to_json(json& j, const InitialConditions& ic) {
    j = json{{"mdw0", ic.mdw0}, {"dfcpb0", ic.dfcpb0}, {"nlbpa0", ic.nlbpa0}};
}

void from_json(const json& j, InitialConditions& ic) {
    j.at("mdw0").get_to(ic.mdw0);
    j.at("dfcpb0").get_to(ic.dfcpb0);
    j.at("nlbpa0").get_to(ic.nlbpa0);
}

} // namespace flockplan
