#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "laughlin/core/grid.hpp"
#include "laughlin/core/types.hpp"

namespace laughlin::io {

using json = nlohmann::json;

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw InputError("error writing '" + path.string() + "'");
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

inline double number_at(const json& a, std::size_t i, const char* what) {
    if (!a.is_array() || i >= a.size() || !a[i].is_number()) throw InputError(std::string(what) + ": expected a number");
    return a[i].get<double>();
}

inline json points_to_json(std::span<const Point> pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({p.real(), p.imag()});
    return a;
}

/// A list of [x, y] pairs, or an object with such a list under "points".
inline std::vector<Point> points_from_json(const json& j) {
    const json& a = j.is_object() && j.contains("points") ? j.at("points") : j;
    if (!a.is_array()) throw InputError("points: expected a list of [x, y]");
    std::vector<Point> out;
    for (const auto& p : a) {
        if (!p.is_array() || p.size() != 2) throw InputError("points: each entry must be [x, y]");
        out.emplace_back(number_at(p, 0, "points"), number_at(p, 1, "points"));
    }
    require_finite(out, "points");
    return out;
}

inline json holes_to_json(const QuasiHoleSet& h) {
    json a = json::array();
    for (const auto& q : h.holes) a.push_back({q.position.real(), q.position.imag(), q.multiplicity});
    return a;
}

/// [[x, y, m], ...]
inline QuasiHoleSet holes_from_json(const json& a) {
    if (!a.is_array()) throw InputError("holes: expected a list of [x, y, m]");
    QuasiHoleSet out;
    for (const auto& q : a) {
        if (!q.is_array() || q.size() != 3) throw InputError("holes: each entry must be [x, y, m]");
        const double m = number_at(q, 2, "holes");
        if (m != std::floor(m)) throw InputError("holes: multiplicity must be an integer");
        out.holes.push_back({Point(number_at(q, 0, "holes"), number_at(q, 1, "holes")), static_cast<int>(m)});
    }
    out.validate();
    return out;
}

inline json grid_to_json(const Grid2D& g) {
    return {{"origin", {g.origin.real(), g.origin.imag()}}, {"h", g.h}, {"nx", g.nx}, {"ny", g.ny}};
}

inline Grid2D grid_from_json(const json& j) {
    Grid2D g;
    try {
        g.origin = Point(j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>());
        g.h = j.at("h").get<double>();
        g.nx = j.at("nx").get<int>();
        g.ny = j.at("ny").get<int>();
    } catch (const json::exception& e) {
        throw InputError(std::string("grid: ") + e.what());
    }
    g.validate();
    return g;
}

}  // namespace laughlin::io
