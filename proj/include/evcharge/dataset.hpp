#pragma once

// Chargepoint session CSV ingestion and cleaning.
//
// Input columns: EventID,CPID,StartDate,StartTime,EndDate,EndTime,Energy,Duration
// with DD/MM/YYYY dates, HH:MM:SS times, Energy in kWh and Duration in
// decimal hours. The Duration column is authoritative for the plug-in
// length; the start/end instants anchor the session on the timeline and
// must agree with Duration to within kDurationToleranceHours.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "civil_time.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace evcharge {

inline constexpr double kDurationToleranceHours = 0.02;

struct Session {
    std::int64_t event_id = 0;
    std::string cp_id;
    Instant start = 0;
    Instant end = 0;
    double energy_kwh = 0.0;
    double plugin_hours = 0.0;
    // Fractional digits of the source Energy/Duration fields.
    int energy_decimals = 1;
    int duration_decimals = 2;

    double plugin_seconds() const { return plugin_hours * kSecondsPerHour; }
};

struct ChargePoint {
    std::string cp_id;
    double p_max_kw = 0.0;
    std::vector<Session> sessions;

    /// A charge point that never drew power cannot be simulated.
    bool usable() const { return p_max_kw > 0.0; }
};

struct ParseError {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string reason;
};

struct ParseResult {
    std::vector<Session> sessions;
    std::vector<ParseError> errors;
};

struct CleaningOptions {
    std::size_t min_sessions = 10;
    double max_hours = 48.0;
    // When set, P_max is this quantile (0,1] of session-average power
    // instead of the maximum. Off by default.
    std::optional<double> p_max_quantile;
};

struct CleaningReport {
    std::size_t total_records = 0;
    std::size_t removed_overlapping = 0;
    std::size_t removed_over_max_hours = 0;
    std::size_t removed_small_cp_count = 0;
    std::size_t removed_small_cp_sessions = 0;
    std::size_t retained_sessions = 0;
    std::size_t retained_charge_points = 0;
    std::size_t zero_energy_sessions = 0;
    std::size_t unusable_charge_points = 0;

    std::size_t accounted_records() const {
        return removed_overlapping + removed_over_max_hours + removed_small_cp_sessions + retained_sessions;
    }
};

struct CleaningResult {
    std::vector<ChargePoint> charge_points;  // sorted by cp_id
    CleaningReport report;
};

namespace detail {

enum Column : std::size_t { kEventId, kCpId, kStartDate, kStartTime, kEndDate, kEndTime, kEnergy, kDuration, kColumnCount };

struct HeaderMap {
    std::size_t field_count = 0;
    std::size_t index[kColumnCount]{};
};

template <class Fn>
void split_fields(std::string_view line, Fn&& on_field) {
    std::size_t pos = 0;
    for (;;) {
        auto comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            on_field(trim(line.substr(pos)));
            return;
        }
        on_field(trim(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
}

inline HeaderMap parse_header(std::string_view line) {
    static const std::pair<std::string_view, Column> names[] = {
        {"EventID", kEventId},     {"ChargingEvent", kEventId}, {"CPID", kCpId},
        {"StartDate", kStartDate}, {"StartTime", kStartTime},   {"EndDate", kEndDate},
        {"EndTime", kEndTime},     {"Energy", kEnergy},         {"Duration", kDuration},
        {"PluginDuration", kDuration},
    };
    HeaderMap map;
    bool seen[kColumnCount]{};
    std::size_t i = 0;
    split_fields(line, [&](std::string_view field) {
        for (auto& [name, col] : names) {
            if (field == name && !seen[col]) {
                map.index[col] = i;
                seen[col] = true;
            }
        }
        ++i;
    });
    map.field_count = i;
    for (bool s : seen) {
        if (!s) {
            throw Error("missing or incomplete header: expected EventID,CPID,StartDate,StartTime,EndDate,EndTime,Energy,Duration");
        }
    }
    return map;
}

/// Parses one data row; returns the rejection reason on failure.
inline std::variant<Session, std::string> parse_row(std::string_view line, const HeaderMap& header) {
    std::string_view fields[32];
    std::size_t n = 0;
    split_fields(line, [&](std::string_view f) {
        if (n < std::size(fields)) fields[n] = f;
        ++n;
    });
    if (n != header.field_count || n > std::size(fields)) return std::string("wrong field count");
    auto col = [&](Column c) { return fields[header.index[c]]; };

    Session s;
    auto id = parse_integer<std::int64_t>(col(kEventId));
    if (!id) return std::string("unparseable EventID");
    s.event_id = *id;
    s.cp_id = std::string(col(kCpId));
    if (s.cp_id.empty()) return std::string("empty CPID");
    auto start = parse_instant(col(kStartDate), col(kStartTime));
    if (!start) return std::string("unparseable start date/time");
    auto end = parse_instant(col(kEndDate), col(kEndTime));
    if (!end) return std::string("unparseable end date/time");
    s.start = *start;
    s.end = *end;
    if (s.end <= s.start) return std::string("end not after start");
    auto energy = parse_decimal(col(kEnergy));
    if (!energy) return std::string("unparseable Energy");
    if (energy->value < 0.0) return std::string("negative Energy");
    auto duration = parse_decimal(col(kDuration));
    if (!duration) return std::string("unparseable Duration");
    if (duration->value <= 0.0) return std::string("non-positive Duration");
    s.energy_kwh = energy->value;
    s.energy_decimals = energy->decimals;
    s.plugin_hours = duration->value;
    s.duration_decimals = duration->decimals;
    double span_hours = static_cast<double>(s.end - s.start) / kSecondsPerHour;
    if (std::abs(span_hours - s.plugin_hours) > kDurationToleranceHours) {
        return std::string("Duration disagrees with start/end");
    }
    return s;
}

inline void parse_lines(std::string_view text, const HeaderMap& header, std::size_t first_line_no, ParseResult& out,
                        std::size_t& lines_seen) {
    std::size_t line_no = first_line_no;
    std::size_t pos = 0;
    lines_seen = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++lines_seen;
        if (!trim(line).empty()) {
            auto row = parse_row(line, header);
            if (auto* s = std::get_if<Session>(&row)) {
                out.sessions.push_back(std::move(*s));
            } else {
                out.errors.push_back({line_no, std::get<std::string>(row)});
            }
        }
        ++line_no;
    }
}

}  // namespace detail

/// Parses a whole CSV document. Work is split into line-aligned chunks;
/// the result is identical for any worker count.
inline ParseResult parse_dataset(std::string_view text, unsigned workers = 1) {
    std::size_t header_line = 1;
    std::size_t pos = 0;
    std::string_view header_text;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (!trim(line).empty()) {
            header_text = line;
            break;
        }
        ++header_line;
    }
    if (header_text.empty()) throw Error("missing header: input is empty");
    if (header_text.size() >= 3 && header_text.substr(0, 3) == "\xEF\xBB\xBF") header_text.remove_prefix(3);
    const auto header = detail::parse_header(header_text);
    std::string_view body = text.substr(pos);

    const std::size_t chunk_count = std::max<std::size_t>(1, std::min<std::size_t>(resolve_workers(workers) * 4, body.size() / (1 << 16) + 1));
    std::vector<std::string_view> chunks;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < chunk_count && begin < body.size(); ++c) {
        std::size_t target = c + 1 == chunk_count ? body.size() : std::max(begin, body.size() * (c + 1) / chunk_count);
        std::size_t stop = target >= body.size() ? body.size() : body.find('\n', target);
        stop = stop == std::string_view::npos ? body.size() : stop + 1;
        chunks.push_back(body.substr(begin, stop - begin));
        begin = stop;
    }

    std::vector<ParseResult> partial(chunks.size());
    std::vector<std::size_t> line_counts(chunks.size());
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        line_counts[c] = static_cast<std::size_t>(std::count(chunks[c].begin(), chunks[c].end(), '\n'));
        if (!chunks[c].empty() && chunks[c].back() != '\n') ++line_counts[c];
    }
    std::vector<std::size_t> first_line(chunks.size());
    std::size_t running = header_line + 1;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        first_line[c] = running;
        running += line_counts[c];
    }
    parallel_for(chunks.size(), workers, [&](std::size_t c) {
        std::size_t seen = 0;
        detail::parse_lines(chunks[c], header, first_line[c], partial[c], seen);
    });

    ParseResult out;
    for (auto& p : partial) {
        out.sessions.insert(out.sessions.end(), std::make_move_iterator(p.sessions.begin()),
                            std::make_move_iterator(p.sessions.end()));
        out.errors.insert(out.errors.end(), p.errors.begin(), p.errors.end());
    }
    return out;
}

inline ParseResult parse_dataset(std::istream& in, unsigned workers = 1) {
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_dataset(std::string_view{text}, workers);
}

inline std::string format_date_time(Instant t, bool date) {
    using namespace std::chrono;
    if (date) {
        year_month_day ymd{sys_days{days{floor_div(t, kSecondsPerDay)}}};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%02u/%02u/%04d", static_cast<unsigned>(ymd.day()),
                      static_cast<unsigned>(ymd.month()), static_cast<int>(ymd.year()));
        return buf;
    }
    auto s = second_of_day(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(s / 3600),
                  static_cast<long long>(s / 60 % 60), static_cast<long long>(s % 60));
    return buf;
}

inline constexpr std::string_view kDatasetHeader = "EventID,CPID,StartDate,StartTime,EndDate,EndTime,Energy,Duration";

/// Renders a session back into the input row format.
inline std::string format_session_row(const Session& s) {
    std::string row = std::to_string(s.event_id);
    row += ',';
    row += s.cp_id;
    row += ',';
    row += format_date_time(s.start, true);
    row += ',';
    row += format_date_time(s.start, false);
    row += ',';
    row += format_date_time(s.end, true);
    row += ',';
    row += format_date_time(s.end, false);
    row += ',';
    row += format_fixed(s.energy_kwh, s.energy_decimals);
    row += ',';
    row += format_fixed(s.plugin_hours, s.duration_decimals);
    return row;
}

/// Session-average power in kW.
inline double average_power_kw(const Session& s) {
    if (!(s.plugin_hours > 0.0)) throw Error("session " + std::to_string(s.event_id) + " has no plug-in duration");
    return s.energy_kwh / s.plugin_hours;
}

/// Maximum charging rate of a charge point: the largest session-average
/// power seen, or the given quantile of session-average powers.
inline double derive_p_max(const std::vector<Session>& sessions, std::optional<double> quantile = std::nullopt) {
    if (sessions.empty()) throw Error("cannot derive P_max from an empty session list");
    if (!quantile) {
        double best = 0.0;
        for (const auto& s : sessions) best = std::max(best, average_power_kw(s));
        return best;
    }
    if (!(*quantile > 0.0 && *quantile <= 1.0)) throw Error("P_max quantile must lie in (0, 1]");
    std::vector<double> rates;
    rates.reserve(sessions.size());
    for (const auto& s : sessions) rates.push_back(average_power_kw(s));
    std::sort(rates.begin(), rates.end());
    auto rank = static_cast<std::size_t>(std::ceil(*quantile * static_cast<double>(rates.size())));
    return rates[std::clamp<std::size_t>(rank, 1, rates.size()) - 1];
}

/// Hours needed to deliver the session's energy at full power.
inline double effective_duration(const Session& s, double p_max_kw) {
    if (!(p_max_kw > 0.0)) throw Error("effective duration needs a positive P_max");
    return s.energy_kwh / p_max_kw;
}

inline bool session_order(const Session& a, const Session& b) {
    return a.start != b.start ? a.start < b.start : a.event_id < b.event_id;
}

/// Drops over-long sessions, resolves overlaps by keeping the earliest
/// session, and removes charge points left with too few sessions.
inline CleaningResult clean_sessions(std::vector<Session> sessions, const CleaningOptions& opts = {}) {
    CleaningResult result;
    auto& report = result.report;
    report.total_records = sessions.size();

    std::unordered_map<std::string, std::vector<Session>> groups;
    for (auto& s : sessions) {
        if (s.plugin_hours > opts.max_hours) {
            ++report.removed_over_max_hours;
            continue;
        }
        auto& g = groups[s.cp_id];
        g.push_back(std::move(s));
    }
    sessions.clear();

    std::vector<std::string> ids;
    ids.reserve(groups.size());
    for (auto& [id, _] : groups) ids.push_back(id);
    std::sort(ids.begin(), ids.end());

    for (const auto& id : ids) {
        auto& group = groups[id];
        std::sort(group.begin(), group.end(), session_order);
        std::vector<Session> kept;
        kept.reserve(group.size());
        for (auto& s : group) {
            if (!kept.empty() && s.start < kept.back().end) {
                ++report.removed_overlapping;
                continue;
            }
            kept.push_back(std::move(s));
        }
        if (kept.size() < opts.min_sessions) {
            ++report.removed_small_cp_count;
            report.removed_small_cp_sessions += kept.size();
            continue;
        }
        ChargePoint cp;
        cp.cp_id = id;
        cp.p_max_kw = derive_p_max(kept, opts.p_max_quantile);
        cp.sessions = std::move(kept);
        report.retained_sessions += cp.sessions.size();
        for (const auto& s : cp.sessions) {
            if (s.energy_kwh == 0.0) ++report.zero_energy_sessions;
        }
        if (!cp.usable()) ++report.unusable_charge_points;
        result.charge_points.push_back(std::move(cp));
    }
    report.retained_charge_points = result.charge_points.size();
    return result;
}

}  // namespace evcharge
