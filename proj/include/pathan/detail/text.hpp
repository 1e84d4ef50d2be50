#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pathan/error.hpp"

namespace pathan::detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string strip_comment(std::string_view line) {
    auto pos = line.find('#');
    return std::string(line.substr(0, pos));
}

/// Whole-token parse of a finite real; accepts a leading '+' and the
/// leading-dot form (".804", "-.469") common in printed tables.
inline std::optional<double> parse_real(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

/// Pads "->" and "<->" with spaces so "A->B" tokenizes like "A -> B".
inline std::string space_arrows(std::string_view line) {
    std::string out;
    for (std::size_t i = 0; i < line.size();) {
        if (line.substr(i, 3) == "<->") {
            out += " <-> ";
            i += 3;
        } else if (line.substr(i, 2) == "->") {
            out += " -> ";
            i += 2;
        } else {
            out += line[i++];
        }
    }
    return out;
}

inline bool valid_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '#') return false;
    }
    return true;
}

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::vector<std::string> lines_of(const std::string &text) {
    auto lines = split(text, '\n');
    for (auto &l : lines) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
    }
    return lines;
}

/// Fixed-point rendering; negative zero prints as zero.
inline std::string fixed(double v, int decimals = 3) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

} // namespace pathan::detail
