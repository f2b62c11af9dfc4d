#include "flockplan/dataset/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

namespace flockplan::dataset {

namespace {

std::string num(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string num(std::int64_t v) { return std::to_string(v); }

struct FlockMeta {
    int house = 0;
    HouseGeometry geometry;
    std::int64_t initial_birds = 0;
    double mdw0 = 0.0;
    std::size_t line = 0;
};

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, const std::string& field) {
    text = trim(text);
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ParseError("line " + std::to_string(line) + ": field '" + field + "' is not a number: '" +
                             std::string(text) + "'",
                         line, field);
    }
    return value;
}

FlockMeta parse_meta(std::string_view body, std::size_t line, int& flock_id) {
    FlockMeta m;
    m.line = line;
    bool have_id = false;
    for (auto token : split(body, ' ')) {
        token = trim(token);
        if (token.empty()) continue;
        auto eq = token.find('=');
        if (eq == std::string_view::npos) throw ParseError("line " + std::to_string(line) + ": malformed metadata", line, std::string(token));
        std::string key(token.substr(0, eq));
        auto value = token.substr(eq + 1);
        if (key == "flock") {
            flock_id = parse_number<int>(value, line, key);
            have_id = true;
        } else if (key == "house") {
            m.house = parse_number<int>(value, line, key);
        } else if (key == "length_m") {
            m.geometry.length_m = parse_number<double>(value, line, key);
        } else if (key == "width_m") {
            m.geometry.width_m = parse_number<double>(value, line, key);
        } else if (key == "capacity") {
            m.geometry.capacity = parse_number<std::int64_t>(value, line, key);
        } else if (key == "initial_birds") {
            m.initial_birds = parse_number<std::int64_t>(value, line, key);
        } else if (key == "mdw0_g") {
            m.mdw0 = parse_number<double>(value, line, key);
        }
    }
    if (!have_id) throw ParseError("line " + std::to_string(line) + ": metadata without flock id", line, "flock");
    if (m.initial_birds <= 0 || m.geometry.area_m2() <= 0.0 || m.mdw0 <= 0.0) {
        throw ParseError("line " + std::to_string(line) + ": flock metadata needs positive geometry, birds and mdw0",
                         line, "initial_birds");
    }
    return m;
}

} // namespace

void write_samples(std::ostream& out, const std::vector<FlockSample>& samples) {
    out << "# schema_version=1\n";
    for (const auto& s : samples) {
        out << "# flock=" << s.flock_id << " house=" << s.house << " length_m=" << num(s.geometry.length_m)
            << " width_m=" << num(s.geometry.width_m) << " capacity=" << s.geometry.capacity
            << " initial_birds=" << s.initial_birds << " mdw0_g=" << num(s.initial.mdw0) << '\n';
    }
    out << kCsvHeader << '\n';
    for (const auto& s : samples) {
        for (std::size_t t = 0; t < s.plans.size(); ++t) {
            const auto& p = s.plans[t];
            const auto& o = s.outcomes[t];
            out << s.flock_id << ',' << p.day << ',' << num(p.t_min) << ',' << num(p.t_avg) << ',' << num(p.t_max) << ','
                << num(p.h_min) << ',' << num(p.h_avg) << ',' << num(p.h_max) << ',' << num(o.mdw) << ','
                << num(o.dfc) << ',' << num(o.dm) << ',' << num(o.nlb) << '\n';
        }
    }
}

std::vector<FlockSample> read_samples(std::istream& in) {
    static const char* columns[] = {"flock_id", "day", "t_min", "t_avg", "t_max", "h_min",
                                    "h_avg",    "h_max", "mdw_g", "dfc_kg", "dm_birds", "nlb"};
    std::map<int, FlockMeta> meta;
    std::map<int, FlockSample> flocks;
    std::vector<int> order;
    bool schema_seen = false;
    bool header_seen = false;
    bool any_content = false;

    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text = trim(raw);
        if (text.empty()) continue;
        any_content = true;
        if (text.front() == '#') {
            auto body = trim(text.substr(1));
            if (body.starts_with("schema_version=")) {
                int v = parse_number<int>(body.substr(15), line, "schema_version");
                if (v != 1) throw SchemaVersionError("unsupported sample schema_version " + std::to_string(v));
                schema_seen = true;
            } else if (body.starts_with("flock=")) {
                int id = 0;
                auto m = parse_meta(body, line, id);
                meta[id] = m;
            }
            continue;
        }
        if (!schema_seen) throw SchemaVersionError("sample file lacks a '# schema_version=1' line before data");
        if (!header_seen) {
            if (text != kCsvHeader) {
                throw ParseError("line " + std::to_string(line) + ": expected header '" + kCsvHeader + "'", line, "header");
            }
            header_seen = true;
            continue;
        }
        auto cells = split(text, ',');
        if (cells.size() != 12) {
            throw ParseError("line " + std::to_string(line) + ": expected 12 columns, got " + std::to_string(cells.size()),
                             line, "row");
        }
        int id = parse_number<int>(cells[0], line, columns[0]);
        DayPlan p;
        p.day = parse_number<int>(cells[1], line, columns[1]);
        p.t_min = parse_number<double>(cells[2], line, columns[2]);
        p.t_avg = parse_number<double>(cells[3], line, columns[3]);
        p.t_max = parse_number<double>(cells[4], line, columns[4]);
        p.h_min = parse_number<double>(cells[5], line, columns[5]);
        p.h_avg = parse_number<double>(cells[6], line, columns[6]);
        p.h_max = parse_number<double>(cells[7], line, columns[7]);
        DayOutcome o;
        o.day = p.day;
        o.mdw = parse_number<double>(cells[8], line, columns[8]);
        o.dfc = parse_number<double>(cells[9], line, columns[9]);
        o.dm = parse_number<std::int64_t>(cells[10], line, columns[10]);
        o.nlb = parse_number<std::int64_t>(cells[11], line, columns[11]);

        auto day_error = [&](const std::string& what, const std::string& field) {
            return ParseError("line " + std::to_string(line) + ", flock " + std::to_string(id) + ", day " +
                                  std::to_string(p.day) + ": " + what,
                              line, field);
        };
        if (p.t_min > p.t_max || p.t_min > p.t_avg || p.t_avg > p.t_max) throw day_error("t_min <= t_avg <= t_max violated", "t_min");
        if (p.h_min > p.h_max || p.h_min > p.h_avg || p.h_avg > p.h_max) throw day_error("h_min <= h_avg <= h_max violated", "h_min");
        if (!is_valid(p)) throw day_error("invalid day plan", "day");
        if (!(o.mdw > 0.0)) throw day_error("mdw_g must be positive", "mdw_g");
        if (o.dfc < 0.0) throw day_error("dfc_kg must be non-negative", "dfc_kg");
        if (o.dm < 0) throw day_error("dm_birds must be non-negative", "dm_birds");
        if (o.nlb <= 0) throw day_error("nlb must be positive", "nlb");

        auto mit = meta.find(id);
        if (mit == meta.end()) throw ParseError("line " + std::to_string(line) + ": no '# flock=' metadata for flock " + std::to_string(id), line, "flock_id");
        const auto& m = mit->second;

        auto [it, inserted] = flocks.try_emplace(id);
        auto& s = it->second;
        if (inserted) {
            order.push_back(id);
            s.flock_id = id;
            s.house = m.house;
            s.geometry = m.geometry;
            s.initial_birds = m.initial_birds;
            s.initial = {m.mdw0, 0.0, static_cast<double>(m.initial_birds) / m.geometry.area_m2()};
        }
        const int expected_day = static_cast<int>(s.plans.size()) + 1;
        if (p.day != expected_day) throw day_error("expected day " + std::to_string(expected_day), "day");
        const std::int64_t prev_nlb = s.outcomes.empty() ? s.initial_birds : s.outcomes.back().nlb;
        const double prev_dfc = s.outcomes.empty() ? 0.0 : s.outcomes.back().dfc;
        if (o.nlb != prev_nlb - o.dm) throw day_error("nlb must equal previous living birds minus dm_birds", "nlb");
        if (o.dfc < prev_dfc) throw day_error("cumulative feed decreased", "dfc_kg");

        auto an = normalize_by_area(static_cast<double>(o.dm), static_cast<double>(o.nlb), o.dfc, s.geometry,
                                    static_cast<double>(o.nlb));
        o.dmpa = an.dmpa;
        o.nlbpa = an.nlbpa;
        o.dfcpb = an.dfcpb;
        s.plans.push_back(p);
        s.outcomes.push_back(o);
    }
    if (any_content && !schema_seen) throw SchemaVersionError("sample file lacks a '# schema_version=1' line");

    std::vector<FlockSample> out;
    for (int id : order) {
        auto& s = flocks.at(id);
        if (s.plans.size() != kFlockDays) {
            throw ParseError("flock " + std::to_string(id) + " has " + std::to_string(s.plans.size()) + " days, expected 40",
                             meta.at(id).line, "day");
        }
        out.push_back(std::move(s));
    }
    return out;
}

void store_samples(const std::vector<FlockSample>& samples, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing", 0, "path");
    write_samples(out, samples);
    if (!out) throw ParseError("failed writing " + path.string(), 0, "path");
}

std::vector<FlockSample> load_samples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0, "path");
    return read_samples(in);
}

} // namespace flockplan::dataset
