#pragma once

// INI-style run configuration: `[section]` headers and `key = value` lines,
// `#` or `;` comments.  Parsing is strict: unknown sections, unknown keys,
// and malformed values are all collected and reported together.

#include <cstdlib>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "facetflow/model.hpp"
#include "facetflow/scheme.hpp"

namespace facetflow {

struct ConfigError : std::runtime_error {
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), issues(std::move(problems)) {}
    std::vector<std::string> issues;

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "config:";
        for (const auto& e : v) s += "\n  " + e;
        return s;
    }
};

struct RunConfig {
    int nx = 64, ny = 64;
    double lx = 1.0, ly = 1.0;
    ModelParams model;
    TauSchedule schedule;
    StationaryOptions stationary;
    int steps = 1;
    std::string forcing = "gaussian-bump";
    std::string initial = "constant:0.5";
    std::string forcing_ext;  // evolve only; empty means none
    bool write_fields = true;
    bool write_trajectory = false;

    Grid make_grid() const { return Grid(nx, ny, lx, ly); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || !end || *end != '\0') return false;  // leave slot untouched
    out = v;
    return true;
}

inline bool parse_int(const std::string& s, int& out) {
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || !end || *end != '\0') return false;
    if (v != static_cast<long>(static_cast<int>(v))) return false;
    out = static_cast<int>(v);
    return true;
}

inline bool parse_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "1") return out = true, true;
    if (s == "false" || s == "0") return out = false, true;
    return false;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
    RunConfig cfg;
    std::vector<std::string> issues;

    using Setter = std::function<bool(const std::string&)>;
    auto d = [](double& slot) {
        return [&slot](const std::string& v) { return detail::parse_double(v, slot); };
    };
    auto i = [](int& slot) {
        return [&slot](const std::string& v) { return detail::parse_int(v, slot); };
    };
    auto b = [](bool& slot) {
        return [&slot](const std::string& v) { return detail::parse_bool(v, slot); };
    };
    auto s = [](std::string& slot) {
        return [&slot](const std::string& v) { slot = v; return true; };
    };

    std::map<std::string, std::map<std::string, Setter>> schema{
        {"grid", {{"nx", i(cfg.nx)}, {"ny", i(cfg.ny)}, {"lx", d(cfg.lx)}, {"ly", d(cfg.ly)}}},
        {"model",
         {{"p", d(cfg.model.p)},
          {"beta", d(cfg.model.beta)},
          {"q", d(cfg.model.q)},
          {"a", d(cfg.model.a)},
          {"tau", d(cfg.model.tau)},
          {"delta", d(cfg.model.delta)},
          {"allow_p_above_2", b(cfg.model.allow_p_above_2)}}},
        {"schedule",
         {{"tau0", d(cfg.schedule.tau0)},
          {"ratio", d(cfg.schedule.ratio)},
          {"tau_min", d(cfg.schedule.tau_min)}}},
        {"picard",
         {{"damping", d(cfg.stationary.picard.damping)},
          {"tol_fp", d(cfg.stationary.picard.tol_fp)},
          {"max_picard", i(cfg.stationary.picard.max_picard)}}},
        {"usolve",
         {{"tol_residual", d(cfg.stationary.usolve.tol_residual)},
          {"max_newton", i(cfg.stationary.usolve.max_newton)},
          {"armijo_c", d(cfg.stationary.usolve.armijo_c)},
          {"armijo_shrink", d(cfg.stationary.usolve.armijo_shrink)}}},
        {"vsolve", {{"tol", d(cfg.stationary.vsolve.tol)}, {"max_cg", i(cfg.stationary.vsolve.max_cg)}}},
        {"run",
         {{"forcing", s(cfg.forcing)},
          {"initial", s(cfg.initial)},
          {"forcing_ext", s(cfg.forcing_ext)},
          {"steps", i(cfg.steps)},
          {"write_fields", b(cfg.write_fields)},
          {"write_trajectory", b(cfg.write_trajectory)}}},
    };

    std::string line, section;
    int lineno = 0;
    bool section_known = true;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto pos = line.find_first_of("#;"); pos != std::string::npos) line.erase(pos);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            section_known = schema.count(section) > 0;
            if (!section_known)
                issues.push_back("line " + std::to_string(lineno) + ": unknown section [" +
                                 section + "]");
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty()) {
            issues.push_back("line " + std::to_string(lineno) + ": key '" + key +
                             "' outside any section");
            continue;
        }
        if (!section_known) continue;  // already reported once

        auto& keys = schema[section];
        auto it = keys.find(key);
        if (it == keys.end()) {
            issues.push_back("line " + std::to_string(lineno) + ": unknown key '" + key +
                             "' in [" + section + "]");
            continue;
        }
        if (!it->second(value))
            issues.push_back("line " + std::to_string(lineno) + ": bad value '" + value +
                             "' for " + section + "." + key);
    }

    // semantic validation, collected alongside the syntax problems
    try {
        cfg.make_grid();
    } catch (const std::invalid_argument& e) {
        issues.emplace_back(e.what());
    }
    try {
        cfg.model.validate();
    } catch (const std::invalid_argument& e) {
        issues.emplace_back(e.what());
    }
    try {
        cfg.schedule.levels();
    } catch (const std::invalid_argument& e) {
        issues.emplace_back(e.what());
    }
    if (cfg.steps < 1) issues.emplace_back("run: requires steps >= 1");
    if (!(cfg.stationary.picard.damping > 0.0) || cfg.stationary.picard.damping > 1.0)
        issues.emplace_back("picard: requires 0 < damping <= 1");
    if (cfg.stationary.picard.max_picard < 1)
        issues.emplace_back("picard: requires max_picard >= 1");

    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

}  // namespace facetflow
