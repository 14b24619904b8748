#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nsblow/core.hpp"
#include "nsblow/grid.hpp"
#include "nsblow/initcond.hpp"
#include "nsblow/solver.hpp"

namespace nsblow {

struct OutputConfig {
    std::uint64_t cadence = 1;           // steps between run.csv rows
    std::uint64_t marginal_every = 0;    // steps between spectral marginal snapshots (0: cadence)
    std::uint64_t physical_every = 0;    // steps between x-space snapshots (0: final state only)
    std::uint64_t checkpoint_every = 0;  // steps between checkpoints (0: final state only)
    bool physical = true;                // emit x-space marginals at all
    std::string dir = "run";
};

struct RunConfig {
    GridBounds grid;
    InitialDataSpec init;
    SolverConfig solver;
    double t_end = 0.0;
    OutputConfig output;

    GridSpec grid_spec() const { return make_grid(grid); }
    std::uint64_t total_steps() const { return static_cast<std::uint64_t>(std::llround(t_end / solver.dt)); }
    std::uint64_t marginal_cadence() const { return output.marginal_every ? output.marginal_every : output.cadence; }
};

/// Holds every problem found while parsing; what() joins them one per line.
class ConfigErrors : public ConfigError {
public:
    explicit ConfigErrors(std::vector<std::string> problems) : ConfigError(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s = "invalid configuration:";
        for (const auto& x : p) s += "\n  - " + x;
        return s;
    }
    std::vector<std::string> problems_;
};

namespace detail {

using ConfigValue = std::variant<double, std::int64_t, bool, std::string>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Parses a scalar: quoted string, true/false, integer, or float.
inline std::optional<ConfigValue> parse_scalar(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') return std::nullopt;
        return ConfigValue{s.substr(1, s.size() - 2)};
    }
    if (s == "true") return ConfigValue{true};
    if (s == "false") return ConfigValue{false};
    std::string t;
    for (char c : s)
        if (c != '_') t.push_back(c);
    try {
        std::size_t used = 0;
        if (t.find_first_of(".eE") == std::string::npos || t.find("inf") != std::string::npos) {
            const long long v = std::stoll(t, &used);
            if (used == t.size()) return ConfigValue{static_cast<std::int64_t>(v)};
        }
        const double d = std::stod(t, &used);
        if (used == t.size()) return ConfigValue{d};
    } catch (const std::exception&) {
    }
    return std::nullopt;
}

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

}  // namespace detail

/**
 * Parses a sectioned `key = value` config ([grid], [init], [solver], [output]).
 * Unknown keys, malformed lines, type mismatches, missing required keys and
 * invariant violations are all collected and reported together.
 */
inline RunConfig parse_config(const std::string& text) {
    using detail::ConfigValue;
    RunConfig cfg;
    std::vector<std::string> problems;

    enum class Kind { real, integer, boolean, string };
    struct Key {
        Kind kind;
        bool required;
        std::function<void(const ConfigValue&)> set;
    };
    auto real = [](double& dst) { return [&dst](const ConfigValue& v) { dst = std::holds_alternative<double>(v) ? std::get<double>(v) : static_cast<double>(std::get<std::int64_t>(v)); }; };
    auto uint = [](std::uint64_t& dst) { return [&dst](const ConfigValue& v) { dst = static_cast<std::uint64_t>(std::get<std::int64_t>(v)); }; };

    std::map<std::string, Key> schema;
    const char* axes[3] = {"k1", "k2", "k3"};
    for (int a = 0; a < 3; ++a) {
        schema[std::string("grid.") + axes[a] + "_min"] = {Kind::real, true, real(cfg.grid.k_min[a])};
        schema[std::string("grid.") + axes[a] + "_max"] = {Kind::real, true, real(cfg.grid.k_max[a])};
    }
    schema["grid.h"] = {Kind::real, false, real(cfg.grid.h)};
    schema["init.a"] = {Kind::real, true, real(cfg.init.a)};
    schema["init.r"] = {Kind::real, true, real(cfg.init.r)};
    schema["init.sign"] = {Kind::integer, true, [&](const ConfigValue& v) { cfg.init.sign = static_cast<int>(std::get<std::int64_t>(v)); }};
    schema["init.target_energy"] = {Kind::real, true, real(cfg.init.target_energy)};
    schema["solver.dt"] = {Kind::real, true, real(cfg.solver.dt)};
    schema["solver.tol"] = {Kind::real, false, real(cfg.solver.tol)};
    schema["solver.max_corrector_iters"] = {Kind::integer, false, [&](const ConfigValue& v) { cfg.solver.max_corrector_iters = static_cast<int>(std::get<std::int64_t>(v)); }};
    schema["solver.nonlinear"] = {Kind::boolean, false, [&](const ConfigValue& v) { cfg.solver.nonlinear_enabled = std::get<bool>(v); }};
    schema["solver.t_end"] = {Kind::real, true, real(cfg.t_end)};
    schema["output.cadence"] = {Kind::integer, false, uint(cfg.output.cadence)};
    schema["output.marginal_every"] = {Kind::integer, false, uint(cfg.output.marginal_every)};
    schema["output.physical_every"] = {Kind::integer, false, uint(cfg.output.physical_every)};
    schema["output.checkpoint_every"] = {Kind::integer, false, uint(cfg.output.checkpoint_every)};
    schema["output.physical"] = {Kind::boolean, false, [&](const ConfigValue& v) { cfg.output.physical = std::get<bool>(v); }};
    schema["output.dir"] = {Kind::string, false, [&](const ConfigValue& v) { cfg.output.dir = std::get<std::string>(v); }};

    std::map<std::string, bool> seen;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = detail::trim(detail::strip_comment(line));
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') {
                problems.push_back(where + "malformed section header '" + s + "'");
                continue;
            }
            section = detail::trim(s.substr(1, s.size() - 2));
            if (section != "grid" && section != "init" && section != "solver" && section != "output")
                problems.push_back(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            problems.push_back(where + "expected 'key = value'");
            continue;
        }
        const std::string key = section + "." + detail::trim(s.substr(0, eq));
        const auto it = schema.find(key);
        if (it == schema.end()) {
            problems.push_back(where + "unknown key '" + key + "'");
            continue;
        }
        if (seen[key]) problems.push_back(where + "duplicate key '" + key + "'");
        seen[key] = true;
        const auto val = detail::parse_scalar(s.substr(eq + 1));
        if (!val) {
            problems.push_back(where + "cannot parse value for '" + key + "'");
            continue;
        }
        const Kind k = it->second.kind;
        const bool ok = (k == Kind::real && (std::holds_alternative<double>(*val) || std::holds_alternative<std::int64_t>(*val))) ||
                        (k == Kind::integer && std::holds_alternative<std::int64_t>(*val)) ||
                        (k == Kind::boolean && std::holds_alternative<bool>(*val)) ||
                        (k == Kind::string && std::holds_alternative<std::string>(*val));
        if (!ok) {
            problems.push_back(where + "wrong value type for '" + key + "'");
            continue;
        }
        if (k == Kind::integer && std::get<std::int64_t>(*val) < 0 && key.rfind("output.", 0) == 0) {
            problems.push_back(where + "'" + key + "' must be non-negative");
            continue;
        }
        it->second.set(*val);
    }
    for (const auto& [key, spec] : schema)
        if (spec.required && !seen[key]) problems.push_back("missing required key '" + key + "'");

    if (problems.empty()) {
        auto check = [&](auto&& fn) {
            try {
                fn();
            } catch (const ConfigError& e) {
                problems.push_back(e.what());
            }
        };
        check([&] { (void)make_grid(cfg.grid); });
        check([&] { cfg.init.validate(); });
        check([&] { cfg.solver.validate(); });
        if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) problems.push_back("solver.t_end must be non-negative");
        else if (std::abs(cfg.t_end / cfg.solver.dt - std::round(cfg.t_end / cfg.solver.dt)) > 1e-6 * std::max(1.0, cfg.t_end / cfg.solver.dt))
            problems.push_back("solver.t_end must be a whole number of steps dt");
        if (cfg.output.cadence == 0) problems.push_back("output.cadence must be >= 1");
        if (cfg.output.dir.empty()) problems.push_back("output.dir must not be empty");
    }
    if (!problems.empty()) throw ConfigErrors(problems);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

/// Serializes a config in the accepted syntax; parse_config(to_config_text(c)) reproduces c.
inline std::string to_config_text(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    const char* axes[3] = {"k1", "k2", "k3"};
    os << "[grid]\n";
    for (int a = 0; a < 3; ++a) os << axes[a] << "_min = " << c.grid.k_min[a] << "\n" << axes[a] << "_max = " << c.grid.k_max[a] << "\n";
    os << "h = " << c.grid.h << "\n\n[init]\n";
    os << "a = " << c.init.a << "\nr = " << c.init.r << "\nsign = " << c.init.sign << "\ntarget_energy = " << c.init.target_energy << "\n\n";
    os << "[solver]\ndt = " << c.solver.dt << "\ntol = " << c.solver.tol << "\nmax_corrector_iters = " << c.solver.max_corrector_iters
       << "\nnonlinear = " << (c.solver.nonlinear_enabled ? "true" : "false") << "\nt_end = " << c.t_end << "\n\n";
    os << "[output]\ncadence = " << c.output.cadence << "\nmarginal_every = " << c.output.marginal_every
       << "\nphysical_every = " << c.output.physical_every << "\ncheckpoint_every = " << c.output.checkpoint_every
       << "\nphysical = " << (c.output.physical ? "true" : "false") << "\ndir = \"" << c.output.dir << "\"\n";
    return os.str();
}

}  // namespace nsblow
