#pragma once

// Screening regions as JSON: grid metadata plus the occupancy field as
// [value, count] runs in row-major order.

#include <string>
#include <utility>
#include <vector>

#include "laughlin/io/json_io.hpp"
#include "laughlin/screening.hpp"

namespace laughlin::io {

inline json run_length_encode(std::span<const double> v) {
    json runs = json::array();
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i + 1;
        while (j < v.size() && v[j] == v[i]) ++j;
        runs.push_back({v[i], j - i});
        i = j;
    }
    return runs;
}

inline std::vector<double> run_length_decode(const json& runs, std::size_t expected) {
    if (!runs.is_array()) throw InputError("occupancy: expected a list of [value, count] runs");
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& r : runs) {
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number_unsigned())
            throw InputError("occupancy: malformed run");
        const auto n = r[1].get<std::size_t>();
        if (out.size() + n > expected) throw InputError("occupancy: runs exceed the grid size");
        out.insert(out.end(), n, r[0].get<double>());
    }
    if (out.size() != expected) throw InputError("occupancy: runs do not cover the grid");
    return out;
}

inline json region_to_json(const ScreeningRegion& r) {
    return {{"grid", grid_to_json(r.grid)},
            {"sources", points_to_json(r.sources)},
            {"area", r.area()},
            {"sweeps", r.sweeps},
            {"residual", r.residual},
            {"encoding", "row-major run-length [value, count]"},
            {"occupancy", run_length_encode(r.occupancy)}};
}

/// Grid, sources and occupancy; the odometer is not serialized.
inline ScreeningRegion region_from_json(const json& j) {
    ScreeningRegion r;
    if (!j.is_object() || !j.contains("grid") || !j.contains("occupancy")) throw InputError("region: missing grid or occupancy");
    r.grid = grid_from_json(j.at("grid"));
    r.occupancy = run_length_decode(j.at("occupancy"), r.grid.size());
    if (j.contains("sources")) r.sources = points_from_json(j.at("sources"));
    r.sweeps = j.value("sweeps", 0L);
    r.residual = j.value("residual", 0.0);
    return r;
}

}  // namespace laughlin::io
