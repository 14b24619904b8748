#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nsblow/core.hpp"
#include "nsblow/diagnostics.hpp"

namespace nsblow {

/// Numeric CSV with a header row; columns addressed by name.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw IoError("CSV has no column '" + name + "'");
    }

    std::vector<double> values(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.at(c));
        return out;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty CSV " + path.string());
    t.header = split_csv_line(line);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != t.header.size()) throw IoError(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": non-numeric field '" + c + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Regroups a long-format marginal CSV (step, t, t_1e7, axis_value, density) into profiles ordered by step.
inline std::vector<MarginalProfile> read_marginals(const std::filesystem::path& path, int axis, Space space) {
    const CsvTable t = read_csv(path);
    const std::size_t cs = t.column("step"), ct = t.column("t"), cx = t.column("axis_value"), cd = t.column("density");
    std::map<std::uint64_t, MarginalProfile> by_step;
    for (const auto& r : t.rows) {
        auto& m = by_step[static_cast<std::uint64_t>(r[cs])];
        m.axis = axis;
        m.space = space;
        m.t = r[ct];
        m.abscissa.push_back(r[cx]);
        m.density.push_back(r[cd]);
    }
    std::vector<MarginalProfile> out;
    for (auto& [step, m] : by_step) {
        if (m.abscissa.size() > 1) m.step = m.abscissa[1] - m.abscissa[0];
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace nsblow
