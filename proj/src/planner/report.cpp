#include "flockplan/planner/report.hpp"

#include <fstream>
#include <ostream>

namespace flockplan::planner {

using nlohmann::json;

json plan_to_json(const FinalActionPlan& plan, double fcr_est, double fcr_res) {
    const auto days = plan.expand();
    json weeks = json::array();
    std::size_t d = 0;
    for (int w = 1; w <= kWeeks; ++w) {
        const auto len = static_cast<std::size_t>(dataset::week_span(w).length);
        json expanded = json::array();
        for (std::size_t k = 0; k < len; ++k) expanded.push_back(days[d++]);
        weeks.push_back({{"week", w}, {"genome", plan.genomes[static_cast<std::size_t>(w - 1)]}, {"expanded_days", expanded}});
    }
    return json{{"schema_version", 1}, {"weeks", weeks}, {"i_c", plan.i_c}, {"fcr_est", fcr_est}, {"fcr_res", fcr_res}};
}

FinalActionPlan plan_from_json(const json& j) {
    if (j.value("schema_version", 0) != 1) throw SchemaVersionError("plan document must have schema_version 1");
    FinalActionPlan plan;
    const auto& weeks = j.at("weeks");
    if (!weeks.is_array() || weeks.size() != kWeeks) throw ShapeError("plan document must list 6 weeks");
    for (const auto& wk : weeks) {
        const int w = wk.at("week").get<int>();
        if (w < 1 || w > kWeeks) throw ShapeError("plan week " + std::to_string(w) + " outside 1..6");
        plan.genomes[static_cast<std::size_t>(w - 1)] = wk.at("genome").get<std::vector<double>>();
    }
    plan.i_c = j.at("i_c").get<InitialConditions>();
    const auto days = plan.expand();
    for (const auto& wk : weeks) {
        if (!wk.contains("expanded_days")) continue;
        for (const auto& e : wk.at("expanded_days")) {
            const auto p = e.get<DayPlan>();
            if (p.day < 1 || p.day > kFlockDays || days[static_cast<std::size_t>(p.day - 1)] != p) {
                throw ParseError("expanded day " + std::to_string(p.day) + " disagrees with its genome", 0, "expanded_days");
            }
        }
    }
    return plan;
}

void save_plan(const FinalActionPlan& plan, double fcr_est, double fcr_res, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw StorageError("cannot write " + path.string());
    f << plan_to_json(plan, fcr_est, fcr_res).dump(2) << '\n';
}

FinalActionPlan load_plan(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw StorageError("cannot read " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("plan is not valid JSON: ") + e.what(), 0, "");
    }
    return plan_from_json(j);
}

void write_plan_csv(const std::vector<DayPlan>& plans, std::ostream& out) {
    out << "day,t_min,t_avg,t_max,h_min,h_avg,h_max\n";
    out.precision(17);
    for (const auto& p : plans) {
        out << p.day << ',' << p.t_min << ',' << p.t_avg << ',' << p.t_max << ',' << p.h_min << ',' << p.h_avg << ','
            << p.h_max << '\n';
    }
}

json report_to_json(const PlannerReport& r) {
    json boundary = json::array();
    for (const auto& b : r.boundary) {
        boundary.push_back({{"week", b.week},
                            {"predicted", b.predicted},
                            {"target", b.target},
                            {"absolute", b.absolute},
                            {"relative_pct", b.relative_pct}});
    }
    json runs = json::array();
    for (const auto& w : r.runs) {
        json hist = json::array();
        for (const auto& h : w.history) hist.push_back({h.generation, h.best, h.mean, h.evaluations});
        runs.push_back({{"week", w.week},
                        {"best_fitness", w.best_fitness},
                        {"stop_reason", evolve::to_string(w.reason)},
                        {"generations", w.generations},
                        {"evaluations", w.evaluations},
                        {"seconds", w.seconds},
                        {"restrictions", {{"lower", w.restrictions.lower}, {"upper", w.restrictions.upper}}},
                        {"start_fcr", w.start_fcr.active() ? json{w.start_fcr.lo, w.start_fcr.hi} : json(nullptr)},
                        {"history", hist}});
    }
    json traj = json::array();
    for (const auto& d : r.trajectory) traj.push_back(d);
    return json{{"schema_version", 1},
                {"fcr_est", r.fcr_est},
                {"fcr_res", r.fcr_res},
                {"gap_relative", r.gap_relative()},
                {"worst_boundary_relative_pct", r.worst_relative_pct()},
                {"boundary", boundary},
                {"runs", runs},
                {"trajectory", traj},
                {"seconds", r.seconds}};
}

void write_trajectory_csv(const std::vector<Outputs>& days, std::ostream& out) {
    out << "day,mdw,dfcpb,nlbpa,fcr\n";
    out.precision(17);
    for (std::size_t d = 0; d < days.size(); ++d) {
        const auto& y = days[d];
        out << d + 1 << ',' << y[0] << ',' << y[1] << ',' << y[2] << ',' << fcr_normalized(y[1], y[2], y[0]) << '\n';
    }
}

} // namespace flockplan::planner
