#pragma once

// Naive civil date/time handling for the chargepoint CSV format.
// Instants are seconds since 1970-01-01 00:00:00 in the file's own local
// clock; no timezone or DST conversion is applied.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string_view>

namespace evcharge {

using Instant = std::int64_t;

inline constexpr Instant kSecondsPerDay = 86'400;
inline constexpr double kSecondsPerHour = 3'600.0;

namespace detail {

inline std::optional<int> parse_fixed_digits(std::string_view s) {
    if (s.empty() || s.size() > 4) return std::nullopt;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

}  // namespace detail

/// Parses "DD/MM/YYYY" into days since the epoch.
inline std::optional<std::int64_t> parse_date_dmy(std::string_view s) {
    if (s.size() != 10 || s[2] != '/' || s[5] != '/') return std::nullopt;
    auto d = detail::parse_fixed_digits(s.substr(0, 2));
    auto m = detail::parse_fixed_digits(s.substr(3, 2));
    auto y = detail::parse_fixed_digits(s.substr(6, 4));
    if (!d || !m || !y) return std::nullopt;
    using namespace std::chrono;
    year_month_day ymd{year{*y}, month{static_cast<unsigned>(*m)}, day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd}.time_since_epoch().count();
}

/// Parses "HH:MM:SS" into seconds since midnight.
inline std::optional<std::int64_t> parse_time_hms(std::string_view s) {
    if (s.size() != 8 || s[2] != ':' || s[5] != ':') return std::nullopt;
    auto h = detail::parse_fixed_digits(s.substr(0, 2));
    auto m = detail::parse_fixed_digits(s.substr(3, 2));
    auto sec = detail::parse_fixed_digits(s.substr(6, 2));
    if (!h || !m || !sec || *h > 23 || *m > 59 || *sec > 59) return std::nullopt;
    return std::int64_t{*h} * 3600 + std::int64_t{*m} * 60 + *sec;
}

inline std::optional<Instant> parse_instant(std::string_view date, std::string_view time) {
    auto d = parse_date_dmy(date);
    auto t = parse_time_hms(time);
    if (!d || !t) return std::nullopt;
    return *d * kSecondsPerDay + *t;
}

/// Floor division that stays correct for instants before the epoch.
inline constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

inline constexpr std::int64_t second_of_day(Instant t) {
    return t - floor_div(t, kSecondsPerDay) * kSecondsPerDay;
}

inline constexpr int hour_of_day(Instant t) { return static_cast<int>(second_of_day(t) / 3600); }

/// ISO weekday: 1 = Monday ... 7 = Sunday.
inline int iso_weekday(Instant t) {
    using namespace std::chrono;
    sys_days d{days{floor_div(t, kSecondsPerDay)}};
    return static_cast<int>(weekday{d}.iso_encoding());
}

}  // namespace evcharge
