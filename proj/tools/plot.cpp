#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "flockplan/domain_json.hpp"

namespace flockplan::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

struct Band {
    std::string name;
    std::vector<double> x, lo, hi;
};

struct Chart {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<Series> series;
    std::vector<Band> bands;
};

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

// Round-number tick spacing for a span.
double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

std::string render(const Chart& c) {
    const double W = 720, H = 420, L = 70, R = 170, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto grow = [&](double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    };
    for (const auto& s : c.series)
        for (auto [x, y] : s.points) grow(x, y);
    for (const auto& b : c.bands)
        for (std::size_t i = 0; i < b.x.size(); ++i) {
            grow(b.x[i], b.lo[i]);
            grow(b.x[i], b.hi[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream o;
    o << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">)", W, H)
      << "\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << fmt::format(R"(<text x="{}" y="22" font-size="14" text-anchor="middle">{}</text>)", (L + W - R) / 2, esc(c.title)) << "\n";

    const double xs = nice_step(x1 - x0, 8), ys = nice_step(y1 - y0, 6);
    for (double t = std::ceil(y0 / ys) * ys; t <= y1; t += ys) {
        o << fmt::format(R"(<line x1="{}" x2="{}" y1="{:.1f}" y2="{:.1f}" stroke="#e5e5e5"/>)", L, W - R, py(t), py(t));
        o << fmt::format(R"(<text x="{}" y="{:.1f}" text-anchor="end">{:g}</text>)", L - 6, py(t) + 4, t) << "\n";
    }
    for (double t = std::ceil(x0 / xs) * xs; t <= x1; t += xs) {
        o << fmt::format(R"(<line x1="{:.1f}" x2="{:.1f}" y1="{}" y2="{}" stroke="#e5e5e5"/>)", px(t), px(t), T, H - B);
        o << fmt::format(R"(<text x="{:.1f}" y="{}" text-anchor="middle">{:g}</text>)", px(t), H - B + 16, t) << "\n";
    }
    o << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>)", L, T, W - L - R, H - T - B) << "\n";
    o << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{}</text>)", (L + W - R) / 2, H - 12, esc(c.xlabel)) << "\n";
    o << fmt::format(R"svg(<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>)svg", (T + H - B) / 2,
                     (T + H - B) / 2, esc(c.ylabel))
      << "\n";

    int legend = 0;
    auto key = [&](const std::string& name, const std::string& color, bool area) {
        const double y = T + 10 + 16 * legend++;
        if (area)
            o << fmt::format(R"(<rect x="{}" y="{}" width="18" height="8" fill="{}" fill-opacity="0.25"/>)", W - R + 12, y - 6, color);
        else
            o << fmt::format(R"(<line x1="{}" x2="{}" y1="{}" y2="{}" stroke="{}" stroke-width="2"/>)", W - R + 12, W - R + 30, y - 2, y - 2, color);
        o << fmt::format(R"(<text x="{}" y="{}">{}</text>)", W - R + 36, y + 2, esc(name)) << "\n";
    };

    int colour = 0;
    for (const auto& b : c.bands) {
        const std::string col = kPalette[colour++ % 7];
        std::string pts;
        for (std::size_t i = 0; i < b.x.size(); ++i) pts += fmt::format("{:.1f},{:.1f} ", px(b.x[i]), py(b.hi[i]));
        for (std::size_t i = b.x.size(); i-- > 0;) pts += fmt::format("{:.1f},{:.1f} ", px(b.x[i]), py(b.lo[i]));
        o << fmt::format(R"(<polygon points="{}" fill="{}" fill-opacity="0.25" stroke="none"/>)", pts, col) << "\n";
        key(b.name, col, true);
    }
    for (const auto& s : c.series) {
        const std::string col = kPalette[colour++ % 7];
        std::string pts;
        for (auto [x, y] : s.points)
            if (std::isfinite(y)) pts += fmt::format("{:.1f},{:.1f} ", px(x), py(y));
        o << fmt::format(R"(<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"{}/>)", pts, col,
                         s.dashed ? R"( stroke-dasharray="5,3")" : "")
          << "\n";
        key(s.name, col, false);
    }
    o << "</svg>\n";
    return o.str();
}

// Grouped bars, one group per category.
std::string render_bars(const std::string& title, const std::string& ylabel, const std::vector<std::string>& groups,
                        const std::vector<std::string>& names, const std::vector<std::vector<double>>& values) {
    const double W = 720, H = 420, L = 70, R = 170, T = 40, B = 50;
    double top = 0.0;
    for (const auto& g : values)
        for (double v : g) top = std::max(top, std::abs(v));
    if (top == 0.0) top = 1.0;
    top *= 1.1;
    auto py = [&](double y) { return H - B - y / top * (H - T - B); };
    const double gw = (W - L - R) / static_cast<double>(std::max<std::size_t>(1, groups.size()));
    const double bw = gw * 0.8 / static_cast<double>(std::max<std::size_t>(1, names.size()));

    std::ostringstream o;
    o << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">)", W, H)
      << "\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << fmt::format(R"(<text x="{}" y="22" font-size="14" text-anchor="middle">{}</text>)", (L + W - R) / 2, esc(title)) << "\n";
    const double ys = nice_step(top, 6);
    for (double t = 0.0; t <= top; t += ys) {
        o << fmt::format(R"(<line x1="{}" x2="{}" y1="{:.1f}" y2="{:.1f}" stroke="#e5e5e5"/>)", L, W - R, py(t), py(t));
        o << fmt::format(R"(<text x="{}" y="{:.1f}" text-anchor="end">{:g}</text>)", L - 6, py(t) + 4, t) << "\n";
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double gx = L + gw * static_cast<double>(g) + gw * 0.1;
        for (std::size_t k = 0; k < names.size(); ++k) {
            const double v = std::abs(values[g][k]);
            o << fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="{}"/>)",
                             gx + bw * static_cast<double>(k), py(v), bw - 1, H - B - py(v), kPalette[k % 7]);
        }
        o << fmt::format(R"(<text x="{:.1f}" y="{}" text-anchor="middle">{}</text>)", gx + gw * 0.4, H - B + 16, esc(groups[g])) << "\n";
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
        const double y = T + 10 + 16 * static_cast<double>(k);
        o << fmt::format(R"(<rect x="{}" y="{}" width="18" height="8" fill="{}"/>)", W - R + 12, y - 6, kPalette[k % 7]);
        o << fmt::format(R"(<text x="{}" y="{}">{}</text>)", W - R + 36, y + 2, esc(names[k])) << "\n";
    }
    o << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>)", L, T, W - L - R, H - T - B) << "\n";
    o << fmt::format(R"svg(<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>)svg", (T + H - B) / 2,
                     (T + H - B) / 2, esc(ylabel))
      << "\n</svg>\n";
    return o.str();
}

void save(const fs::path& p, const std::string& svg, std::vector<fs::path>& written) {
    std::ofstream out(p);
    if (!out) throw ConfigDomain("cannot write " + p.string());
    out << svg;
    written.push_back(p);
}

} // namespace

std::vector<fs::path> write_plots(const json& doc, const std::vector<FlockSample>& corpus, const fs::path& dir) {
    fs::create_directories(dir);
    const json& report = doc.contains("report") ? doc.at("report") : doc;
    const json* plan = doc.contains("plan") ? &doc.at("plan") : (doc.contains("weeks") ? &doc : nullptr);
    std::vector<fs::path> written;

    if (report.contains("runs")) {
        Chart week6{"Week 6 search: predicted day-40 FCR", "generation", "best fitness (FCR)", {}, {}};
        Chart boundary{"Weeks 1-5 search: boundary gap", "generation", "best fitness (mean normalised gap)", {}, {}};
        for (const auto& run : report.at("runs")) {
            const int week = run.at("week").get<int>();
            Series s{"week " + std::to_string(week), {}};
            for (const auto& h : run.at("history")) s.points.emplace_back(h.at(0).get<double>(), h.at(1).get<double>());
            (week == kWeeks ? week6 : boundary).series.push_back(std::move(s));
        }
        save(dir / "convergence_week6.svg", render(week6), written);
        save(dir / "convergence_boundary.svg", render(boundary), written);
    }

    if (report.contains("trajectory") && !report.at("trajectory").empty()) {
        Chart fcr{"Chained rollout of the plan", "day", "FCR", {}, {}};
        Chart mdw{"Chained rollout of the plan", "day", "mean bird weight (g)", {}, {}};
        Series f{"FCR", {}}, m{"MdW", {}};
        int day = 1;
        for (const auto& y : report.at("trajectory")) {
            const double w = y.at(0), feed = y.at(1), dens = y.at(2);
            f.points.emplace_back(day, fcr_normalized(feed, dens, w));
            m.points.emplace_back(day, w);
            ++day;
        }
        fcr.series.push_back(f);
        mdw.series.push_back(m);
        save(dir / "trajectory_fcr.svg", render(fcr), written);
        save(dir / "trajectory_mdw.svg", render(mdw), written);
    }

    if (report.contains("boundary") && !report.at("boundary").empty()) {
        std::vector<std::string> groups;
        std::vector<std::vector<double>> values;
        for (const auto& b : report.at("boundary")) {
            const int w = b.at("week").get<int>();
            groups.push_back(fmt::format("{}|{}", w, w + 1));
            values.push_back(b.at("relative_pct").get<std::vector<double>>());
        }
        save(dir / "boundary_errors.svg",
             render_bars("Week boundary relative error", "relative error (%)", groups, {"MdW", "dFCpB", "NlBpA"}, values),
             written);
    }

    std::vector<DayPlan> days;
    if (plan) {
        for (const auto& w : plan->at("weeks"))
            for (const auto& d : w.at("expanded_days")) days.push_back(d.get<DayPlan>());
        Chart t{"Optimised plan: temperature", "day", "temperature (C)", {}, {}};
        Chart h{"Optimised plan: humidity", "day", "relative humidity (%)", {}, {}};
        Series tn{"Tmin", {}, true}, ta{"Tavg", {}}, tx{"Tmax", {}, true};
        Series hn{"Hmin", {}, true}, ha{"Havg", {}}, hx{"Hmax", {}, true};
        for (const auto& d : days) {
            tn.points.emplace_back(d.day, d.t_min);
            ta.points.emplace_back(d.day, d.t_avg);
            tx.points.emplace_back(d.day, d.t_max);
            hn.points.emplace_back(d.day, d.h_min);
            ha.points.emplace_back(d.day, d.h_avg);
            hx.points.emplace_back(d.day, d.h_max);
        }
        t.series = {tn, ta, tx};
        h.series = {hn, ha, hx};
        save(dir / "plan_temperature.svg", render(t), written);
        save(dir / "plan_humidity.svg", render(h), written);
    }

    if (!corpus.empty()) {
        Chart t{"Corpus range of applied Tavg", "day", "temperature (C)", {}, {}};
        Chart w{"Corpus range of mean bird weight", "day", "MdW (g)", {}, {}};
        Band tb{"corpus Tavg", {}, {}, {}}, wb{"corpus MdW", {}, {}, {}};
        for (int d = 0; d < kFlockDays; ++d) {
            double tl = 1e300, th = -1e300, wl = 1e300, wh = -1e300;
            for (const auto& s : corpus) {
                tl = std::min(tl, s.plans[static_cast<std::size_t>(d)].t_avg);
                th = std::max(th, s.plans[static_cast<std::size_t>(d)].t_avg);
                wl = std::min(wl, s.outcomes[static_cast<std::size_t>(d)].mdw);
                wh = std::max(wh, s.outcomes[static_cast<std::size_t>(d)].mdw);
            }
            tb.x.push_back(d + 1);
            tb.lo.push_back(tl);
            tb.hi.push_back(th);
            wb.x.push_back(d + 1);
            wb.lo.push_back(wl);
            wb.hi.push_back(wh);
        }
        t.bands.push_back(tb);
        w.bands.push_back(wb);
        if (!days.empty()) {
            Series p{"plan Tavg", {}};
            for (const auto& d : days) p.points.emplace_back(d.day, d.t_avg);
            t.series.push_back(p);
        }
        if (report.contains("trajectory")) {
            Series p{"plan rollout", {}};
            int day = 1;
            for (const auto& y : report.at("trajectory")) p.points.emplace_back(day++, y.at(0).get<double>());
            w.series.push_back(p);
        }
        save(dir / "corpus_tavg.svg", render(t), written);
        save(dir / "corpus_mdw.svg", render(w), written);
    }
    return written;
}

} // namespace flockplan::tools
