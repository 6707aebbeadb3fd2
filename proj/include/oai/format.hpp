#pragma once

// Shortest round-trip decimal formatting and small CSV helpers.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace oai {

/// Shortest decimal string that parses back to exactly `x`.
/// Non-finite values are written as `inf`, `-inf` and `nan`.
inline std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/// Parses a full field as a double; accepts `inf`, `-inf`, `nan`.
inline std::optional<double> parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s == "inf" || s == "+inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    if (s == "nan") return std::nan("");
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> out;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        out.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Writes one CSV row; fields are emitted verbatim.
inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << fields[i];
    }
    os << '\n';
}

} // namespace oai
