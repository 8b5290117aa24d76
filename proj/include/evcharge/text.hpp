#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace evcharge {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Fixed-point rendering with exactly `decimals` fractional digits.
inline std::string format_fixed(double v, int decimals) {
    char buf[128];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return std::string(buf, r.ptr);
}

template <class Int>
std::optional<Int> parse_integer(std::string_view s) {
    Int v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Parses a plain decimal ("8.8", "18.35", "10") and reports its
/// fractional digit count so the value can be re-rendered identically.
struct Decimal {
    double value;
    int decimals;
};

inline std::optional<Decimal> parse_decimal(std::string_view s) {
    if (s.empty()) return std::nullopt;
    for (char c : s) {
        if (!((c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+')) return std::nullopt;
    }
    double v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::fixed);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    auto dot = s.find('.');
    int decimals = dot == std::string_view::npos ? 0 : static_cast<int>(s.size() - dot - 1);
    return Decimal{v, decimals};
}

}  // namespace evcharge
