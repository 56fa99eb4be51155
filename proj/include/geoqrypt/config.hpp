#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "geoqrypt/common.hpp"
#include "geoqrypt/localization.hpp"

namespace geoqrypt::cfg {

// Bad run configuration. Distinct from the library error tree so front ends
// can map it to their config-error exit path.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

inline double parse_double(const std::string& key, const std::string& raw) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(raw, &used);
    } catch (const std::exception&) {
        throw config_error("config: key '" + key + "' is not a number: '" + raw + "'");
    }
    if (used != raw.size())
        throw config_error("config: trailing junk in '" + key + "': '" + raw + "'");
    return v;
}

} // namespace detail

// Flat `key = value` text grouped by `[section]` headers. Values are kept as
// raw strings; typed accessors parse on demand and throw config_error with
// the offending key in the message. `#` starts a comment anywhere on a line.
struct Config {
    std::map<std::string, std::string> values; // "section.key" -> value

    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line, section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw config_error("config line " + std::to_string(line_no) +
                                       ": unterminated section header");
                section = detail::trim(line.substr(1, line.size() - 2));
                if (!detail::valid_name(section))
                    throw config_error("config line " + std::to_string(line_no) +
                                       ": bad section name");
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(line_no) +
                                   ": expected 'key = value'");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (!detail::valid_name(key))
                throw config_error("config line " + std::to_string(line_no) + ": bad key");
            if (section.empty())
                throw config_error("config line " + std::to_string(line_no) +
                                   ": key outside any [section]");
            const std::string full = section + "." + key;
            if (!cfg.values.emplace(full, value).second)
                throw config_error("config: duplicate key '" + full + "'");
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values.count(key) != 0; }

    const std::string& get_string(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw config_error("config: missing key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const {
        return detail::parse_double(key, get_string(key));
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    std::int64_t get_int(const std::string& key) const {
        const std::string& raw = get_string(key);
        std::size_t used = 0;
        std::int64_t v = 0;
        try {
            v = std::stoll(raw, &used);
        } catch (const std::exception&) {
            throw config_error("config: key '" + key + "' is not an integer: '" + raw +
                               "'");
        }
        if (used != raw.size())
            throw config_error("config: trailing junk in '" + key + "': '" + raw + "'");
        return v;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::uint64_t get_u64(const std::string& key) const {
        const std::int64_t v = get_int(key);
        if (v < 0) throw config_error("config: key '" + key + "' must be non-negative");
        return static_cast<std::uint64_t>(v);
    }

    // Comma-separated list of numbers.
    std::vector<double> get_doubles(const std::string& key) const {
        const std::string& raw = get_string(key);
        std::vector<double> out;
        std::istringstream in(raw);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = detail::trim(item);
            if (item.empty())
                throw config_error("config: empty element in list '" + key + "'");
            out.push_back(detail::parse_double(key, item));
        }
        if (out.empty()) throw config_error("config: empty list '" + key + "'");
        return out;
    }

    // "x,y" pair.
    loc::Point2 get_point(const std::string& key) const {
        const auto v = get_doubles(key);
        if (v.size() != 2)
            throw config_error("config: key '" + key + "' must be 'x,y'");
        return {v[0], v[1]};
    }

    // Semicolon-separated "x,y" pairs.
    std::vector<loc::Point2> get_points(const std::string& key) const {
        const std::string& raw = get_string(key);
        std::vector<loc::Point2> out;
        std::istringstream in(raw);
        std::string pair;
        while (std::getline(in, pair, ';')) {
            pair = detail::trim(pair);
            if (pair.empty())
                throw config_error("config: empty point in '" + key + "'");
            std::istringstream pin(pair);
            std::string a, b, extra;
            if (!std::getline(pin, a, ',') || !std::getline(pin, b, ','))
                throw config_error("config: point in '" + key + "' must be 'x,y'");
            if (std::getline(pin, extra, ','))
                throw config_error("config: point in '" + key + "' has extra fields");
            out.push_back({detail::parse_double(key, detail::trim(a)),
                           detail::parse_double(key, detail::trim(b))});
        }
        if (out.empty()) throw config_error("config: empty point list '" + key + "'");
        return out;
    }

    // Every present key must be in the owning command's schema; anything else
    // is refused before any work happens.
    void require_schema(const std::vector<std::string>& allowed) const {
        for (const auto& [key, value] : values) {
            bool ok = false;
            for (const auto& a : allowed)
                if (key == a) {
                    ok = true;
                    break;
                }
            if (!ok) throw config_error("config: unknown key '" + key + "'");
        }
    }
};

// Shared [scenario] block. Noise may be given in seconds (sigma_t_s) or as
// the one-way range equivalent in meters (range_noise_m); exactly one.
inline loc::Scenario scenario_from_config(const Config& c, std::uint64_t seed) {
    loc::Scenario sc;
    sc.rs_positions = c.get_points("scenario.stations");
    sc.claim = c.get_point("scenario.claim");
    const bool has_s = c.has("scenario.sigma_t_s");
    const bool has_m = c.has("scenario.range_noise_m");
    if (has_s == has_m)
        throw config_error(
            "config: give exactly one of scenario.sigma_t_s, scenario.range_noise_m");
    sc.sigma_t = has_s ? c.get_double("scenario.sigma_t_s")
                       : c.get_double("scenario.range_noise_m") / speed_of_light;
    sc.p_c = c.get_double("scenario.p_c", 0.99);
    sc.t_d = c.get_double("scenario.t_d_s", 0.0);
    sc.processing_delay = c.get_double("scenario.processing_delay_s", 0.0);
    sc.seed = seed;
    try {
        sc.validate();
    } catch (const precondition_error& e) {
        throw config_error(std::string("config: bad scenario: ") + e.what());
    }
    return sc;
}

inline const std::vector<std::string> scenario_keys = {
    "scenario.stations",  "scenario.claim",  "scenario.sigma_t_s",
    "scenario.range_noise_m", "scenario.p_c", "scenario.t_d_s",
    "scenario.processing_delay_s",
};

} // namespace geoqrypt::cfg
