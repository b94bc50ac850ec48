#include "predmon/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "predmon/errors.hpp"

namespace predmon::policy {

using nlohmann::json;

const Band& ThresholdTable::band_for_action(int action) const {
    for (const auto& b : bands)
        if (b.action == action) return b;
    throw InvalidAction("table '" + channel + "' has no band with action id " +
                        std::to_string(action));
}

ActionSpace action_space(const ThresholdTable& table) {
    ActionSpace space;
    space.size = table.bands.size();
    space.labels.resize(space.size);
    for (const auto& b : table.bands) {
        if (b.action >= 0 && static_cast<std::size_t>(b.action) < space.size)
            space.labels[static_cast<std::size_t>(b.action)] = b.team;
    }
    return space;
}

int correct_action(const ThresholdTable& table, double value) {
    if (!std::isfinite(value))
        throw NonFiniteValue("observation for channel '" + table.channel +
                             "' is not finite");
    for (const auto& b : table.bands)
        if (b.contains(value)) return b.action;
    throw Error("table '" + table.channel + "' does not cover value " +
                std::to_string(value));
}

std::vector<std::string> validate_table(const ThresholdTable& table) {
    std::vector<std::string> violations;
    if (table.bands.size() < 2) {
        violations.push_back("table needs at least 2 bands");
        return violations;
    }

    auto sorted = table.bands;
    std::sort(sorted.begin(), sorted.end(),
              [](const Band& a, const Band& b) { return a.lo < b.lo; });

    const double inf = std::numeric_limits<double>::infinity();
    if (sorted.front().lo != -inf)
        violations.push_back("lowest band does not start at -inf");
    if (sorted.back().hi != inf)
        violations.push_back("highest band does not end at +inf");
    for (const auto& b : sorted) {
        if (!(b.lo < b.hi))
            violations.push_back("band [" + std::to_string(b.lo) + ", " +
                                 std::to_string(b.hi) + ") is empty or inverted");
    }
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double hi = sorted[i].hi;
        const double lo = sorted[i + 1].lo;
        if (hi < lo)
            violations.push_back("gap [" + std::to_string(hi) + ", " +
                                 std::to_string(lo) + ")");
        else if (hi > lo)
            violations.push_back("overlap at [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + ")");
    }

    std::vector<int> ids;
    for (const auto& b : table.bands) ids.push_back(b.action);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        if (ids[i] == ids[i + 1])
            violations.push_back("duplicate action id " + std::to_string(ids[i]));
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] != static_cast<int>(i)) {
            violations.push_back("action ids must form 0.." +
                                 std::to_string(table.bands.size() - 1));
            break;
        }
    }

    std::size_t normal_count = 0;
    for (const auto& b : table.bands)
        if (b.severity == 0) ++normal_count;
    if (normal_count != 1)
        violations.push_back("expected exactly one severity-0 band, found " +
                             std::to_string(normal_count));

    return violations;
}

void require_valid(const ThresholdTable& table) {
    const auto violations = validate_table(table);
    if (violations.empty()) return;
    std::string msg = "threshold table '" + table.channel + "' invalid:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw ConfigError(msg);
}

std::string range_mismatch_warning(const ThresholdTable& table,
                                   const std::vector<double>& observed,
                                   double alert_fraction_threshold) {
    if (observed.empty()) return "";
    std::size_t outside_normal = 0;
    for (double v : observed) {
        if (!std::isfinite(v)) continue;
        bool in_normal = false;
        for (const auto& b : table.bands)
            if (b.severity == 0 && b.contains(v)) in_normal = true;
        if (!in_normal) ++outside_normal;
    }
    const double fraction =
        static_cast<double>(outside_normal) / static_cast<double>(observed.size());
    if (fraction <= alert_fraction_threshold) return "";
    std::ostringstream msg;
    msg << "channel '" << table.channel << "': " << fraction * 100.0
        << "% of observed values fall outside the normal band; the table scale"
        << (table.units.empty() ? "" : " (units '" + table.units + "')")
        << " likely does not match the data";
    return msg.str();
}

std::string severity_monotonicity_warning(const ThresholdTable& table) {
    auto sorted = table.bands;
    std::sort(sorted.begin(), sorted.end(),
              [](const Band& a, const Band& b) { return a.lo < b.lo; });
    std::size_t normal = sorted.size();
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (sorted[i].severity == 0) normal = i;
    if (normal == sorted.size()) return "";

    for (std::size_t i = normal; i + 1 < sorted.size(); ++i) {
        if (sorted[i + 1].severity < sorted[i].severity)
            return "channel '" + table.channel + "': severity drops from " +
                   std::to_string(sorted[i].severity) + " to " +
                   std::to_string(sorted[i + 1].severity) + " moving up from the normal band";
    }
    for (std::size_t i = normal; i-- > 0;) {
        if (sorted[i].severity < sorted[i + 1].severity && i + 1 != normal)
            return "channel '" + table.channel + "': severity drops from " +
                   std::to_string(sorted[i + 1].severity) + " to " +
                   std::to_string(sorted[i].severity) + " moving down from the normal band";
    }
    return "";
}

namespace {

double bound_from_json(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
    }
    throw ConfigError("band bound " + where + " must be a number, \"-inf\" or \"+inf\"");
}

json bound_to_json(double v) {
    if (v == -std::numeric_limits<double>::infinity()) return "-inf";
    if (v == std::numeric_limits<double>::infinity()) return "+inf";
    return v;
}

}  // namespace

ThresholdTable table_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("threshold table is not valid JSON: ") + e.what());
    }
    return [&j]() {
        ThresholdTable table;
        if (!j.contains("channel") || !j["channel"].is_string())
            throw ConfigError("threshold table needs a string 'channel' field");
        table.channel = j["channel"].get<std::string>();
        table.units = j.value("units", std::string{});
        if (!j.contains("bands") || !j["bands"].is_array())
            throw ConfigError("threshold table needs a 'bands' array");
        for (const auto& bj : j["bands"]) {
            Band b;
            b.lo = bound_from_json(bj.at("lo"), "'lo'");
            b.hi = bound_from_json(bj.at("hi"), "'hi'");
            b.action = bj.at("action").get<int>();
            b.team = bj.value("team", std::string{});
            b.severity = bj.at("severity").get<int>();
            table.bands.push_back(std::move(b));
        }
        return table;
    }();
}

ThresholdTable load_table(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open threshold table '" + path.string() + "'");
    std::stringstream buffer;
    buffer << file.rdbuf();
    return table_from_json_text(buffer.str());
}

std::string table_to_json_text(const ThresholdTable& table) {
    json j;
    j["channel"] = table.channel;
    if (!table.units.empty()) j["units"] = table.units;
    j["bands"] = json::array();
    for (const auto& b : table.bands) {
        j["bands"].push_back({{"lo", bound_to_json(b.lo)},
                              {"hi", bound_to_json(b.hi)},
                              {"action", b.action},
                              {"team", b.team},
                              {"severity", b.severity}});
    }
    return j.dump(2);
}

ThresholdTable demo_table(const std::string& channel) {
    const double inf = std::numeric_limits<double>::infinity();
    ThresholdTable t;
    t.channel = channel;
    // Illustrative early-warning style bands: a normal band, a near band on
    // each side routed to the ward nurse, and far bands routed to the
    // emergency team. Each band is its own action.
    if (channel == "hr") {
        t.units = "bpm";
        t.bands = {{-inf, 40.0, 3, "met", 2},
                   {40.0, 51.0, 1, "ward-nurse", 1},
                   {51.0, 100.0, 0, "none", 0},
                   {100.0, 111.0, 2, "ward-nurse", 1},
                   {111.0, inf, 4, "met", 2}};
    } else if (channel == "resp") {
        t.units = "breaths/min";
        t.bands = {{-inf, 9.0, 3, "met", 2},
                   {9.0, 12.0, 1, "ward-nurse", 1},
                   {12.0, 21.0, 0, "none", 0},
                   {21.0, 25.0, 2, "ward-nurse", 1},
                   {25.0, inf, 4, "met", 2}};
    } else if (channel == "temp") {
        t.units = "degC";
        t.bands = {{-inf, 35.0, 3, "met", 2},
                   {35.0, 36.0, 1, "ward-nurse", 1},
                   {36.0, 38.0, 0, "none", 0},
                   {38.0, 39.0, 2, "ward-nurse", 1},
                   {39.0, inf, 4, "met", 2}};
    } else {
        throw ConfigError("no demo threshold table for channel '" + channel + "'");
    }
    return t;
}

}  // namespace predmon::policy
