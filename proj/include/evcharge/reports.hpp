#pragma once

// Report files. Every file is written to a temporary sibling and renamed
// into place. Numbers are rendered at full round-trip precision and no
// run-specific values (timestamps, worker counts) are included, so equal
// inputs give byte-identical files.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "experiment.hpp"
#include "text.hpp"

namespace evcharge {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline void write_file_atomic(const fs::path& path, const std::string& content) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
}

inline json to_json(const CleaningReport& r) {
    return {
        {"total_records", r.total_records},
        {"removed_overlapping", r.removed_overlapping},
        {"removed_over_max_hours", r.removed_over_max_hours},
        {"removed_small_cp_count", r.removed_small_cp_count},
        {"removed_small_cp_sessions", r.removed_small_cp_sessions},
        {"retained_sessions", r.retained_sessions},
        {"retained_charge_points", r.retained_charge_points},
        {"zero_energy_sessions", r.zero_energy_sessions},
        {"unusable_charge_points", r.unusable_charge_points},
        {"removed_overlapping_percent", r.total_records ? 100.0 * static_cast<double>(r.removed_overlapping) / static_cast<double>(r.total_records) : 0.0},
        {"removed_over_max_hours_percent", r.total_records ? 100.0 * static_cast<double>(r.removed_over_max_hours) / static_cast<double>(r.total_records) : 0.0},
    };
}

inline json to_json(const LoadedDataset& d) {
    json errors = json::array();
    for (const auto& e : d.parse_error_sample) errors.push_back({{"line", e.line}, {"reason", e.reason}});
    json j = to_json(d.cleaned.report);
    j["parse_errors"] = d.parse_error_count;
    j["parse_error_sample"] = std::move(errors);
    return j;
}

inline json to_json(const StrategyMetrics& m) {
    return {
        {"peak_kw", m.peak.power_kw},
        {"peak_second_of_day", m.peak.second_of_day},
        {"profile_energy_kwh", m.profile_energy_kwh},
        {"target_kwh", m.deficit.target_kwh},
        {"delivered_kwh", m.deficit.delivered_kwh},
        {"deficit_kwh", m.deficit.deficit_kwh},
        {"deficit_percent", m.deficit.deficit_percent},
        {"cp_deficit_over_10pct_fraction", m.deficit.cp_over_threshold_fraction},
    };
}

inline json to_json(const ScopeSummary& s) {
    return {
        {"sessions", s.sessions},
        {"raw", to_json(s.raw)},
        {"oracle", to_json(s.oracle)},
        {"rl", to_json(s.rl)},
        {"peak_reduction_percent", {{"rl_vs_raw", s.rl_peak_reduction_percent}, {"oracle_vs_raw", s.oracle_peak_reduction_percent}}},
        {"durations_hours", {{"rl_mean_boost", s.mean_boost_hours}, {"rl_mean_slow", s.mean_slow_hours}, {"raw_mean_effective", s.mean_raw_effective_hours}}},
        {"speed", {{"rl_mean_p_eff_kw", s.mean_p_eff_kw}, {"rl_mean_relative", s.mean_relative_speed},
                   {"rl_median_relative", s.median_relative_speed}, {"histogram", s.speed_histogram}}},
    };
}

inline json config_json(const ExperimentConfig& cfg) {
    json history = cfg.history ? json(*cfg.history) : json("unlimited");
    return {
        {"history", history},
        {"min_sessions", cfg.cleaning.min_sessions},
        {"max_hours", cfg.cleaning.max_hours},
        {"p_max_quantile", cfg.cleaning.p_max_quantile ? json(*cfg.cleaning.p_max_quantile) : json(nullptr)},
        {"seed", cfg.search.seed},
        {"n_tries", cfg.search.n_tries},
        {"dx", {cfg.search.dx_min, cfg.search.dx_max}},
        {"dy", {cfg.search.dy_min, cfg.search.dy_max}},
        {"k1", cfg.reward.k1},
        {"k2", cfg.reward.k2},
        {"e_max_loss_kwh", cfg.reward.e_max_loss_kwh},
        {"train_fraction", cfg.train_fraction},
        {"online_warmup", cfg.online_warmup},
        {"online_cold_start", cfg.online_cold_start},
    };
}

/// Profiles CSV: mean power per bucket of `resolution_s` seconds.
inline std::string profiles_csv(const ScopeSummary& s, std::size_t resolution_s) {
    std::string out = "second_of_day,raw_kw,oracle_kw,rl_kw\n";
    const std::size_t n = DailyProfile::kSlots;
    auto bucket_kw = [&](const std::vector<double>& slots, std::size_t lo) {
        double e = 0.0;
        for (std::size_t i = lo; i < lo + resolution_s; ++i) e += slots[i];
        return e * kSecondsPerHour / static_cast<double>(resolution_s);
    };
    for (std::size_t lo = 0; lo < n; lo += resolution_s) {
        out += std::to_string(lo);
        out += ',';
        out += format_double(bucket_kw(s.raw_slots, lo));
        out += ',';
        out += format_double(bucket_kw(s.oracle_slots, lo));
        out += ',';
        out += format_double(bucket_kw(s.rl_slots, lo));
        out += '\n';
    }
    return out;
}

inline std::string offline_policies_csv(const OfflineResult& r) {
    std::string out = "cp_id,p_max_kw,usable,n_sessions,n_train,n_window,n_test,t_boost_max_hours,p_rate,reward,train_e_loss_kwh,train_p_aggr_kw,test_target_kwh,test_deficit_kwh\n";
    for (const auto& cp : r.charge_points) {
        out += cp.cp_id + ',' + format_double(cp.p_max_kw) + ',' + (cp.usable ? "1" : "0") + ',' + std::to_string(cp.n_sessions) + ',' +
               std::to_string(cp.n_train) + ',' + std::to_string(cp.n_window) + ',' + std::to_string(cp.n_test) + ',';
        if (cp.learned) {
            const auto& l = *cp.learned;
            out += format_double(l.policy.t_boost_max_hours) + ',' + format_double(l.policy.p_rate) + ',' + format_double(l.reward) + ',' +
                   format_double(l.evaluation.e_loss_kwh) + ',' + format_double(l.evaluation.p_aggr_kw) + ',';
        } else {
            out += ",,,,,";
        }
        out += format_double(cp.test_rl.target_kwh) + ',' + format_double(cp.test_rl.target_kwh - cp.test_rl.delivered_kwh) + '\n';
    }
    return out;
}

inline std::string online_sessions_csv(const OnlineResult& r) {
    std::string out = "cp_id,index,event_id,start_date,start_time,adaptive,t_boost_max_hours,p_rate,t_boost_hours,t_slow_hours,e_target_kwh,e_total_kwh,e_loss_kwh,p_eff_kw,relative_speed\n";
    for (const auto& cp : r.charge_points) {
        for (const auto& s : cp.sessions) {
            const auto& o = s.outcome;
            out += cp.cp_id + ',' + std::to_string(s.index) + ',' + std::to_string(s.event_id) + ',' + format_date_time(s.start, true) + ',' +
                   format_date_time(s.start, false) + ',' + (s.adaptive ? "1" : "0") + ',' + format_double(s.policy.t_boost_max_hours) + ',' +
                   format_double(s.policy.p_rate) + ',' + format_double(o.t_boost_hours) + ',' + format_double(o.t_slow_hours) + ',' +
                   format_double(o.e_target_kwh) + ',' + format_double(o.e_total_kwh) + ',' + format_double(o.e_loss_kwh) + ',' +
                   format_double(o.p_eff_kw) + ',' + format_double(o.p_eff_kw / cp.p_max_kw) + '\n';
        }
    }
    return out;
}

inline std::string online_policies_csv(const OnlineResult& r) {
    std::string out = "cp_id,p_max_kw,sessions,adaptive_sessions,t_boost_max_hours,p_rate,target_kwh,deficit_kwh\n";
    for (const auto& cp : r.charge_points) {
        out += cp.cp_id + ',' + format_double(cp.p_max_kw) + ',' + std::to_string(cp.sessions.size()) + ',' + std::to_string(cp.adaptive_sessions) + ',' +
               format_double(cp.final_policy.t_boost_max_hours) + ',' + format_double(cp.final_policy.p_rate) + ',' + format_double(cp.target_kwh) + ',' +
               format_double(cp.target_kwh - cp.delivered_kwh) + '\n';
    }
    return out;
}

inline json to_json(const PredictionMetrics& m) {
    return {{"mae_hours", m.mae}, {"mape_percent", m.mape}, {"mse_hours2", m.mse}, {"n", m.n}, {"mape_excluded", m.mape_excluded}};
}

inline json to_json(const PredictionSummary& s) {
    return {{"evaluated_charge_points", s.evaluated}, {"skipped_charge_points", s.skipped}, {"mean", to_json(s.mean)}};
}

inline std::string prediction_csv(const PredictResult& r) {
    std::string out = "cp_id,rows,mae_with_energy,mape_with_energy,mse_with_energy,mae_without_energy,mape_without_energy,mse_without_energy\n";
    auto cols = [](const std::optional<PredictionMetrics>& m) {
        if (!m) return std::string(",,");
        return format_double(m->mae) + ',' + format_double(m->mape) + ',' + format_double(m->mse);
    };
    for (const auto& cp : r.charge_points) {
        out += cp.cp_id + ',' + std::to_string(cp.rows) + ',' + cols(cp.with_energy) + ',' + cols(cp.without_energy) + '\n';
    }
    return out;
}

inline void emit_cleaning_report(const LoadedDataset& d, const fs::path& dir) {
    write_file_atomic(dir / "cleaning_report.json", to_json(d).dump(2) + "\n");
}

inline void emit_reports(const OfflineResult& r, const ExperimentConfig& cfg, const fs::path& dir) {
    json metrics = {
        {"mode", "offline"},
        {"config", config_json(cfg)},
        {"charge_points", {{"evaluated", r.evaluated}, {"skipped_unusable", r.skipped_unusable}}},
        {"test", to_json(r.test)},
        {"all", to_json(r.all)},
    };
    write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
    write_file_atomic(dir / "profiles.csv", profiles_csv(r.test, cfg.emit_resolution_s));
    write_file_atomic(dir / "profiles_all.csv", profiles_csv(r.all, cfg.emit_resolution_s));
    write_file_atomic(dir / "policies.csv", offline_policies_csv(r));
}

inline void emit_reports(const OnlineResult& r, const ExperimentConfig& cfg, const fs::path& dir) {
    json cps = json::array();
    for (const auto& cp : r.charge_points) {
        double deficit = cp.target_kwh - cp.delivered_kwh;
        cps.push_back({
            {"cp_id", cp.cp_id},
            {"p_max_kw", cp.p_max_kw},
            {"sessions", cp.sessions.size()},
            {"adaptive_sessions", cp.adaptive_sessions},
            {"target_kwh", cp.target_kwh},
            {"deficit_kwh", deficit},
            {"deficit_percent", cp.target_kwh > 0.0 ? 100.0 * deficit / cp.target_kwh : 0.0},
            {"adaptive_mean_p_eff_kw", cp.adaptive_mean_p_eff_kw},
            {"adaptive_mean_boost_hours", cp.adaptive_mean_boost_hours},
            {"adaptive_mean_slow_hours", cp.adaptive_mean_slow_hours},
            {"adaptive_mean_relative_speed", cp.adaptive_mean_relative_speed},
            {"adaptive_median_relative_speed", cp.adaptive_median_relative_speed},
        });
    }
    json metrics = {
        {"mode", "online"},
        {"config", config_json(cfg)},
        {"charge_points", std::move(cps)},
        {"all", to_json(r.summary)},
    };
    write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
    write_file_atomic(dir / "profiles.csv", profiles_csv(r.summary, cfg.emit_resolution_s));
    write_file_atomic(dir / "sessions.csv", online_sessions_csv(r));
    write_file_atomic(dir / "policies.csv", online_policies_csv(r));
}

inline void emit_reports(const PredictResult& r, const ExperimentConfig& cfg, const fs::path& dir) {
    json metrics = {
        {"mode", "predict"},
        {"folds", cfg.folds},
        {"with_energy", to_json(r.with_energy)},
        {"without_energy", to_json(r.without_energy)},
    };
    write_file_atomic(dir / "prediction.json", metrics.dump(2) + "\n");
    write_file_atomic(dir / "prediction_per_cp.csv", prediction_csv(r));
}

}  // namespace evcharge
