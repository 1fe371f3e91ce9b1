#pragma once

// Typed parameters shared by the command line and JSON config files. A
// parameter `burn_in` is set by the flag --burn-in or the config key "burn_in".

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "laughlin/io/csv.hpp"
#include "laughlin/io/json_io.hpp"
#include "laughlin/model.hpp"

namespace laughlin::cli {

using io::json;

enum class Kind { integer, unsigned_integer, number, boolean, text, numbers, integers, holes, hole_sets, potential_params };

struct Param {
    std::string key;
    Kind kind;
    json fallback;
    std::string help;

    std::string flag() const {
        std::string f = "--" + key;
        for (auto& c : f)
            if (c == '_') c = '-';
        return f;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t");
    return std::string(s.substr(a, b - a + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw InputError(what + ": '" + s + "' is not a number");
    return v;
}

inline long long parse_integer(const std::string& s, const std::string& what) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw InputError(what + ": '" + s + "' is not an integer");
    return v;
}

inline std::uint64_t parse_unsigned(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw InputError(what + ": '" + s + "' is not a non-negative integer");
    return v;
}

inline bool parse_bool(const std::string& s, const std::string& what) {
    if (s.empty() || s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw InputError(what + ": '" + s + "' is not a boolean");
}

/// "x,y,m;x,y,m"; empty or "none" is the empty set.
inline json parse_holes(const std::string& s, const std::string& what) {
    json a = json::array();
    const auto t = trim(s);
    if (t.empty() || t == "none") return a;
    for (const auto& h : split(t, ';')) {
        const auto f = split(h, ',');
        if (f.size() != 3) throw InputError(what + ": each hole is x,y,m");
        a.push_back({parse_double(f[0], what), parse_double(f[1], what), parse_integer(f[2], what)});
    }
    return a;
}

}  // namespace detail

/// Command-line text to the JSON value stored in the resolved config.
inline json parse_flag_value(const Param& p, const std::string& s) {
    const std::string what = p.flag();
    switch (p.kind) {
        case Kind::integer: return detail::parse_integer(s, what);
        case Kind::unsigned_integer: return detail::parse_unsigned(s, what);
        case Kind::number: return detail::parse_double(s, what);
        case Kind::boolean: return detail::parse_bool(s, what);
        case Kind::text: return s;
        case Kind::numbers: {
            json a = json::array();
            if (!detail::trim(s).empty())
                for (const auto& f : detail::split(s, ',')) a.push_back(detail::parse_double(f, what));
            return a;
        }
        case Kind::integers: {
            json a = json::array();
            if (!detail::trim(s).empty())
                for (const auto& f : detail::split(s, ',')) a.push_back(detail::parse_integer(f, what));
            return a;
        }
        case Kind::holes: return detail::parse_holes(s, what);
        case Kind::hole_sets: {
            json a = json::array();
            for (const auto& set : detail::split(s, '|')) a.push_back(detail::parse_holes(set, what));
            return a;
        }
        case Kind::potential_params: {
            json o = json::object();
            if (detail::trim(s).empty()) return o;
            for (const auto& kv : detail::split(s, ',')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw InputError(what + ": expected key=value pairs");
                o[detail::trim(kv.substr(0, eq))] = detail::parse_double(detail::trim(kv.substr(eq + 1)), what);
            }
            return o;
        }
    }
    throw InputError(what + ": unsupported parameter kind");
}

/// Checks a config-file value against the parameter kind. Strings are accepted
/// for the structured kinds and converted as if they came from the command line.
inline json normalize_config_value(const Param& p, const json& v) {
    const std::string what = "config key '" + p.key + "'";
    auto bad = [&](const char* expected) { return InputError(what + ": expected " + expected); };
    switch (p.kind) {
        case Kind::integer:
            if (!v.is_number_integer()) throw bad("an integer");
            return v;
        case Kind::unsigned_integer:
            if (!v.is_number_unsigned()) throw bad("a non-negative integer");
            return v;
        case Kind::number:
            if (!v.is_number()) throw bad("a number");
            return v.get<double>();
        case Kind::boolean:
            if (!v.is_boolean()) throw bad("true or false");
            return v;
        case Kind::text:
            if (!v.is_string()) throw bad("a string");
            return v;
        case Kind::numbers:
        case Kind::integers:
            if (v.is_string()) return parse_flag_value(p, v.get<std::string>());
            if (!v.is_array()) throw bad("a list");
            for (const auto& x : v)
                if (p.kind == Kind::numbers ? !x.is_number() : !x.is_number_integer()) throw bad("a list of numbers");
            return v;
        case Kind::holes:
            if (v.is_string()) return parse_flag_value(p, v.get<std::string>());
            io::holes_from_json(v);
            return v;
        case Kind::hole_sets:
            if (v.is_string()) return parse_flag_value(p, v.get<std::string>());
            if (!v.is_array()) throw bad("a list of hole lists");
            for (const auto& s : v) io::holes_from_json(s);
            return v;
        case Kind::potential_params:
            if (v.is_string()) return parse_flag_value(p, v.get<std::string>());
            if (!v.is_object()) throw bad("an object of numbers");
            for (const auto& [k, x] : v.items())
                if (!x.is_number()) throw bad("an object of numbers");
            return v;
    }
    throw bad("a supported value");
}

/// Read access to a resolved config.
class Config {
  public:
    explicit Config(json j) : j_(std::move(j)) {}

    const json& raw() const { return j_; }

    long long integer(const std::string& k) const { return j_.at(k).get<long long>(); }
    int int32(const std::string& k) const {
        const auto v = integer(k);
        if (v < INT32_MIN || v > INT32_MAX) throw InputError(k + ": out of range");
        return static_cast<int>(v);
    }
    std::uint64_t unsigned_integer(const std::string& k) const { return j_.at(k).get<std::uint64_t>(); }
    double number(const std::string& k) const { return j_.at(k).get<double>(); }
    bool boolean(const std::string& k) const { return j_.at(k).get<bool>(); }
    std::string text(const std::string& k) const { return j_.at(k).get<std::string>(); }
    std::vector<double> numbers(const std::string& k) const { return j_.at(k).get<std::vector<double>>(); }
    std::vector<int> integers(const std::string& k) const { return j_.at(k).get<std::vector<int>>(); }
    QuasiHoleSet holes(const std::string& k) const { return io::holes_from_json(j_.at(k)); }
    std::vector<QuasiHoleSet> hole_sets(const std::string& k) const {
        std::vector<QuasiHoleSet> out;
        for (const auto& s : j_.at(k)) out.push_back(io::holes_from_json(s));
        return out;
    }
    PotentialChoice potential(const std::string& name_key, const std::string& params_key) const {
        PotentialChoice c;
        c.name = text(name_key);
        for (const auto& [k, v] : j_.at(params_key).items()) c.params[k] = v.get<double>();
        return c;
    }

  private:
    json j_;
};

inline std::string describe(const QuasiHoleSet& h) {
    if (h.empty()) return "none";
    std::string s;
    for (const auto& q : h.holes) {
        if (!s.empty()) s += ';';
        s += io::format_number(q.position.real()) + "," + io::format_number(q.position.imag()) + "," +
             std::to_string(q.multiplicity);
    }
    return s;
}

}  // namespace laughlin::cli
