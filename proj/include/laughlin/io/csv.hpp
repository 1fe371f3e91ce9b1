#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "laughlin/core/types.hpp"

namespace laughlin::io {

/// Shortest decimal form that parses back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header) : out_(path) {
        if (!out_) throw InputError("cannot open '" + path.string() + "' for writing");
        bool first = true;
        for (auto h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }

    class Row {
      public:
        explicit Row(CsvWriter& w) : w_(w) {}
        Row(const Row&) = delete;
        ~Row() { w_.out_ << '\n'; }

        Row& operator<<(double v) { return cell(format_number(v)); }
        Row& operator<<(int v) { return cell(std::to_string(v)); }
        Row& operator<<(long v) { return cell(std::to_string(v)); }
        Row& operator<<(long long v) { return cell(std::to_string(v)); }
        Row& operator<<(unsigned long v) { return cell(std::to_string(v)); }
        Row& operator<<(unsigned long long v) { return cell(std::to_string(v)); }
        Row& operator<<(const std::string& v) { return cell(quote(v)); }
        Row& operator<<(const char* v) { return cell(quote(v)); }

      private:
        Row& cell(const std::string& s) {
            if (n_++) w_.out_ << ',';
            w_.out_ << s;
            return *this;
        }
        static std::string quote(std::string_view s) {
            if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
            std::string q = "\"";
            for (char c : s) {
                if (c == '"') q += '"';
                q += c;
            }
            return q + '"';
        }
        CsvWriter& w_;
        int n_ = 0;
    };

    Row row() { return Row(*this); }

    void close() {
        out_.close();
        if (out_.fail()) throw InputError("error writing CSV file");
    }

  private:
    std::ofstream out_;
};

/// Minimal reader for the files written above: header plus numeric rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InputError("CSV has no column '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty CSV file '" + path.string() + "'");
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        t.rows.push_back(split_csv_line(line));
        if (t.rows.back().size() != t.header.size()) throw InputError("ragged CSV row in '" + path.string() + "'");
    }
    return t;
}

}  // namespace laughlin::io
