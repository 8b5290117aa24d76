#pragma once

// Experiment drivers: offline train/test evaluation, online replay of a
// charge point's sessions, and duration-prediction scoring.
//
// Charge points are the unit of parallel work. They are processed in fixed
// blocks whose partial results are folded in block order, so every number
// in the output is independent of the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "aggregation.hpp"
#include "charging_model.hpp"
#include "dataset.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "predictor.hpp"

namespace evcharge {

enum class Mode { offline, online, predict };

struct ExperimentConfig {
    std::string input_path;
    Mode mode = Mode::offline;
    std::optional<std::size_t> history = 30;  // unset = unlimited
    CleaningOptions cleaning;
    SearchConfig search;
    RewardParams reward;
    std::size_t online_warmup = 100;
    bool online_cold_start = false;
    double train_fraction = 0.8;
    std::string output_dir = "out";
    unsigned workers = 1;
    std::size_t emit_resolution_s = 1;
    std::size_t histogram_bins = 100;
    std::size_t folds = 4;
    std::vector<std::string> cp_filter;

    void validate() const {
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must lie in (0, 1)");
        if (history && *history == 0) throw Error("history size must be positive");
        if (emit_resolution_s == 0 || kSecondsPerDay % static_cast<Instant>(emit_resolution_s) != 0) {
            throw Error("emit resolution must divide 86400 seconds");
        }
        if (!search.valid()) throw Error("invalid search configuration");
        if (!reward.valid()) throw Error("invalid reward parameters");
        if (cleaning.min_sessions == 0) throw Error("min sessions must be positive");
    }
};

struct LoadedDataset {
    std::size_t parse_error_count = 0;
    std::vector<ParseError> parse_error_sample;
    CleaningResult cleaned;
};

inline LoadedDataset load_dataset(const ExperimentConfig& cfg, std::size_t error_sample = 20) {
    std::ifstream in(cfg.input_path, std::ios::binary);
    if (!in) throw Error("cannot open input file: " + cfg.input_path);
    auto parsed = parse_dataset(in, cfg.workers);
    LoadedDataset out;
    out.parse_error_count = parsed.errors.size();
    out.parse_error_sample.assign(parsed.errors.begin(),
                                  parsed.errors.begin() + static_cast<std::ptrdiff_t>(std::min(error_sample, parsed.errors.size())));
    out.cleaned = clean_sessions(std::move(parsed.sessions), cfg.cleaning);
    return out;
}

/// Sessions that carry energy; zero-energy sessions neither train nor load the grid.
inline std::vector<Session> energised(std::span<const Session> sessions) {
    std::vector<Session> out;
    out.reserve(sessions.size());
    for (const auto& s : sessions) {
        if (s.energy_kwh > 0.0) out.push_back(s);
    }
    return out;
}

/// Number of leading sessions used for training.
inline std::size_t train_count(std::size_t n, double fraction) {
    auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    return std::min(k, n);
}

/// Everything needed to report one strategy comparison over a set of sessions.
struct ScopeAccumulator {
    DailyProfile raw;
    DailyProfile oracle;
    DailyProfile rl;
    std::vector<CpEnergy> cp_raw;
    std::vector<CpEnergy> cp_oracle;
    std::vector<CpEnergy> cp_rl;
    std::size_t sessions = 0;
    double sum_boost_hours = 0.0;
    double sum_slow_hours = 0.0;
    double sum_raw_effective_hours = 0.0;
    double sum_p_eff_kw = 0.0;
    std::vector<double> relative_speeds;

    /// Adds one charge point's sessions, each with its adaptive outcome.
    template <class OutcomeFn>
    void add_charge_point(std::span<const Session> sessions_in, double p_max_kw, OutcomeFn&& outcome_for) {
        CpEnergy er, eo, ea;
        for (std::size_t i = 0; i < sessions_in.size(); ++i) {
            const auto& s = sessions_in[i];
            auto [o, policy] = outcome_for(i);
            raw.add(raw_profile(s, p_max_kw));
            oracle.add(oracle_profile(s));
            rl.add(adaptive_profile(s, o, p_max_kw, policy));
            er.target_kwh += s.energy_kwh;
            er.delivered_kwh += raw_delivered_kwh(s, p_max_kw);
            eo.target_kwh += s.energy_kwh;
            eo.delivered_kwh += s.energy_kwh;
            ea.target_kwh += s.energy_kwh;
            ea.delivered_kwh += o.e_total_kwh;
            ++sessions;
            sum_boost_hours += o.t_boost_hours;
            sum_slow_hours += o.t_slow_hours;
            sum_raw_effective_hours += effective_duration(s, p_max_kw);
            sum_p_eff_kw += o.p_eff_kw;
            relative_speeds.push_back(o.p_eff_kw / p_max_kw);
        }
        cp_raw.push_back(er);
        cp_oracle.push_back(eo);
        cp_rl.push_back(ea);
    }

    void merge(const ScopeAccumulator& o) {
        raw.merge(o.raw);
        oracle.merge(o.oracle);
        rl.merge(o.rl);
        cp_raw.insert(cp_raw.end(), o.cp_raw.begin(), o.cp_raw.end());
        cp_oracle.insert(cp_oracle.end(), o.cp_oracle.begin(), o.cp_oracle.end());
        cp_rl.insert(cp_rl.end(), o.cp_rl.begin(), o.cp_rl.end());
        sessions += o.sessions;
        sum_boost_hours += o.sum_boost_hours;
        sum_slow_hours += o.sum_slow_hours;
        sum_raw_effective_hours += o.sum_raw_effective_hours;
        sum_p_eff_kw += o.sum_p_eff_kw;
        relative_speeds.insert(relative_speeds.end(), o.relative_speeds.begin(), o.relative_speeds.end());
    }
};

struct StrategyMetrics {
    Peak peak;
    double profile_energy_kwh = 0.0;
    DeficitStats deficit;
};

struct ScopeSummary {
    std::size_t sessions = 0;
    StrategyMetrics raw, oracle, rl;
    double rl_peak_reduction_percent = 0.0;
    double oracle_peak_reduction_percent = 0.0;
    double mean_boost_hours = 0.0;
    double mean_slow_hours = 0.0;
    double mean_raw_effective_hours = 0.0;
    double mean_p_eff_kw = 0.0;
    double mean_relative_speed = 0.0;
    double median_relative_speed = 0.0;
    std::vector<double> speed_histogram;
    std::vector<double> raw_slots, oracle_slots, rl_slots;
};

inline ScopeSummary summarize(const ScopeAccumulator& acc, std::size_t histogram_bins) {
    ScopeSummary s;
    s.sessions = acc.sessions;
    s.raw_slots = acc.raw.slots();
    s.oracle_slots = acc.oracle.slots();
    s.rl_slots = acc.rl.slots();
    auto fill = [](StrategyMetrics& m, const std::vector<double>& slots, const std::vector<CpEnergy>& cps) {
        m.peak = peak(slots);
        m.profile_energy_kwh = total_energy(slots);
        m.deficit = deficit_stats(cps);
    };
    fill(s.raw, s.raw_slots, acc.cp_raw);
    fill(s.oracle, s.oracle_slots, acc.cp_oracle);
    fill(s.rl, s.rl_slots, acc.cp_rl);
    if (s.raw.peak.power_kw > 0.0) {
        s.rl_peak_reduction_percent = peak_reduction(s.rl_slots, s.raw_slots);
        s.oracle_peak_reduction_percent = peak_reduction(s.oracle_slots, s.raw_slots);
    }
    if (acc.sessions > 0) {
        double n = static_cast<double>(acc.sessions);
        s.mean_boost_hours = acc.sum_boost_hours / n;
        s.mean_slow_hours = acc.sum_slow_hours / n;
        s.mean_raw_effective_hours = acc.sum_raw_effective_hours / n;
        s.mean_p_eff_kw = acc.sum_p_eff_kw / n;
    }
    s.mean_relative_speed = mean_of(acc.relative_speeds);
    s.median_relative_speed = median_of(acc.relative_speeds);
    s.speed_histogram = speed_histogram(acc.relative_speeds, histogram_bins);
    return s;
}

namespace detail {

inline constexpr std::size_t kBlockSize = 32;
inline constexpr std::size_t kBlocksPerWave = 16;

/// Runs make_block(block_index) for fixed-size blocks of `count` items and
/// folds the results strictly in block order.
template <class Block, class MakeBlock, class Fold>
void blocked_reduce(std::size_t count, unsigned workers, MakeBlock&& make_block, Fold&& fold) {
    const std::size_t blocks = (count + kBlockSize - 1) / kBlockSize;
    for (std::size_t wave = 0; wave < blocks; wave += kBlocksPerWave) {
        const std::size_t in_wave = std::min(kBlocksPerWave, blocks - wave);
        std::vector<std::optional<Block>> out(in_wave);
        parallel_for(in_wave, workers, [&](std::size_t b) {
            const std::size_t lo = (wave + b) * kBlockSize;
            const std::size_t hi = std::min(count, lo + kBlockSize);
            out[b].emplace(make_block(lo, hi));
        });
        for (auto& b : out) fold(std::move(*b));
    }
}

inline std::vector<const ChargePoint*> select(const std::vector<ChargePoint>& cps, const std::vector<std::string>& filter) {
    std::vector<const ChargePoint*> out;
    if (filter.empty()) {
        for (const auto& cp : cps) out.push_back(&cp);
        return out;
    }
    std::unordered_set<std::string> wanted(filter.begin(), filter.end());
    for (const auto& cp : cps) {
        if (wanted.count(cp.cp_id)) out.push_back(&cp);
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Offline: learn on the first part of each charge point's history, test on
// the rest with the policy frozen.

struct CpOfflineResult {
    std::string cp_id;
    double p_max_kw = 0.0;
    bool usable = false;
    std::size_t n_sessions = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t n_window = 0;
    std::optional<LearnedPolicy> learned;
    CpEnergy test_rl;
};

struct OfflineResult {
    std::vector<CpOfflineResult> charge_points;
    std::size_t evaluated = 0;
    std::size_t skipped_unusable = 0;
    ScopeSummary test;  // test-split sessions only
    ScopeSummary all;   // every session, learned policy applied throughout
};

inline OfflineResult run_offline(const std::vector<ChargePoint>& cps, const ExperimentConfig& cfg) {
    cfg.validate();
    const auto selected = detail::select(cps, cfg.cp_filter);
    if (selected.empty()) throw Error("no eligible charge points");

    struct Block {
        std::vector<CpOfflineResult> results;
        ScopeAccumulator test;
        ScopeAccumulator all;
    };
    OfflineResult result;
    ScopeAccumulator test_acc, all_acc;

    auto make_block = [&](std::size_t lo, std::size_t hi) {
        Block block;
        for (std::size_t i = lo; i < hi; ++i) {
            const ChargePoint& cp = *selected[i];
            CpOfflineResult r;
            r.cp_id = cp.cp_id;
            r.p_max_kw = cp.p_max_kw;
            r.usable = cp.usable();
            r.n_sessions = cp.sessions.size();
            r.n_train = train_count(cp.sessions.size(), cfg.train_fraction);
            r.n_test = cp.sessions.size() - r.n_train;
            if (r.usable) {
                std::span<const Session> all_sessions(cp.sessions);
                const auto train = energised(all_sessions.first(r.n_train));
                const auto test = energised(all_sessions.subspan(r.n_train));
                const auto every = energised(all_sessions);
                const auto window = rolling_window(train, cfg.history);
                r.n_window = window.size();
                ChargingPolicy policy{0.0, 1.0};
                if (!window.empty()) {
                    SearchConfig search = cfg.search;
                    search.seed = derive_seed(cfg.search.seed, cp.cp_id);
                    r.learned = learn_policy(window, cp.p_max_kw, search, cfg.reward);
                    policy = r.learned->policy;
                } else {
                    // Nothing to learn from: behave like raw charging.
                    policy = raw_fallback_policy(every);
                }
                auto outcome_in = [&](const std::vector<Session>& ss) {
                    return [&, policy](std::size_t k) {
                        return std::pair{simulate_session(ss[k], policy, cp.p_max_kw), policy};
                    };
                };
                block.test.add_charge_point(test, cp.p_max_kw, outcome_in(test));
                block.all.add_charge_point(every, cp.p_max_kw, outcome_in(every));
                r.test_rl = block.test.cp_rl.back();
            }
            block.results.push_back(std::move(r));
        }
        return block;
    };
    auto fold = [&](Block&& b) {
        for (auto& r : b.results) {
            if (r.usable) ++result.evaluated;
            else ++result.skipped_unusable;
            result.charge_points.push_back(std::move(r));
        }
        test_acc.merge(b.test);
        all_acc.merge(b.all);
    };
    detail::blocked_reduce<Block>(selected.size(), cfg.workers, make_block, fold);
    if (result.evaluated == 0) throw Error("no eligible charge points: every selected charge point has zero P_max");

    result.test = summarize(test_acc, cfg.histogram_bins);
    result.all = summarize(all_acc, cfg.histogram_bins);
    return result;
}

// ---------------------------------------------------------------------------
// Online: replay sessions in order, re-learning after every session.

struct OnlineSessionRecord {
    std::size_t index = 0;
    std::int64_t event_id = 0;
    Instant start = 0;
    bool adaptive = false;
    ChargingPolicy policy;
    SessionOutcome outcome;
};

struct CpOnlineResult {
    std::string cp_id;
    double p_max_kw = 0.0;
    std::vector<OnlineSessionRecord> sessions;
    ChargingPolicy final_policy;
    double target_kwh = 0.0;
    double delivered_kwh = 0.0;
    double adaptive_mean_p_eff_kw = 0.0;
    double adaptive_mean_boost_hours = 0.0;
    double adaptive_mean_slow_hours = 0.0;
    double adaptive_mean_relative_speed = 0.0;
    double adaptive_median_relative_speed = 0.0;
    std::size_t adaptive_sessions = 0;
};

struct OnlineResult {
    std::vector<CpOnlineResult> charge_points;
    ScopeSummary summary;  // all replayed sessions
};

inline CpOnlineResult replay_charge_point(const ChargePoint& cp, const ExperimentConfig& cfg) {
    if (!cp.usable()) throw Error("charge point " + cp.cp_id + " never drew power");
    CpOnlineResult r;
    r.cp_id = cp.cp_id;
    r.p_max_kw = cp.p_max_kw;
    const auto sessions = energised(cp.sessions);
    std::optional<ChargingPolicy> current;
    std::vector<double> speeds;
    double sum_p_eff = 0.0, sum_boost = 0.0, sum_slow = 0.0;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const auto& s = sessions[i];
        OnlineSessionRecord rec;
        rec.index = i;
        rec.event_id = s.event_id;
        rec.start = s.start;
        if (i < cfg.online_warmup) {
            rec.policy = {s.plugin_hours, 1.0};
        } else {
            const auto window = rolling_window(std::span<const Session>(sessions).first(i), cfg.history);
            SearchConfig search = cfg.search;
            search.seed = derive_seed(cfg.search.seed, cp.cp_id, i);
            const auto learned = cfg.online_cold_start ? learn_policy(window, cp.p_max_kw, search, cfg.reward)
                                                       : learn_policy(window, cp.p_max_kw, search, cfg.reward, current);
            current = learned.policy;
            rec.policy = *current;
            rec.adaptive = true;
        }
        rec.outcome = simulate_session(s, rec.policy, cp.p_max_kw);
        r.target_kwh += s.energy_kwh;
        r.delivered_kwh += rec.outcome.e_total_kwh;
        if (rec.adaptive) {
            ++r.adaptive_sessions;
            sum_p_eff += rec.outcome.p_eff_kw;
            sum_boost += rec.outcome.t_boost_hours;
            sum_slow += rec.outcome.t_slow_hours;
            speeds.push_back(rec.outcome.p_eff_kw / cp.p_max_kw);
        }
        r.sessions.push_back(rec);
    }
    r.final_policy = current.value_or(ChargingPolicy{0.0, 1.0});
    if (r.adaptive_sessions > 0) {
        double n = static_cast<double>(r.adaptive_sessions);
        r.adaptive_mean_p_eff_kw = sum_p_eff / n;
        r.adaptive_mean_boost_hours = sum_boost / n;
        r.adaptive_mean_slow_hours = sum_slow / n;
        r.adaptive_mean_relative_speed = mean_of(speeds);
        r.adaptive_median_relative_speed = median_of(speeds);
    }
    return r;
}

inline OnlineResult run_online(const std::vector<ChargePoint>& cps, const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.cp_filter.empty()) throw Error("online mode needs at least one charge point (--cp)");
    for (const auto& id : cfg.cp_filter) {
        bool found = std::any_of(cps.begin(), cps.end(), [&](const ChargePoint& cp) { return cp.cp_id == id; });
        if (!found) throw Error("charge point not found: " + id);
    }
    const auto selected = detail::select(cps, cfg.cp_filter);

    struct Block {
        std::vector<CpOnlineResult> results;
        ScopeAccumulator acc;
    };
    OnlineResult result;
    ScopeAccumulator acc;
    auto make_block = [&](std::size_t lo, std::size_t hi) {
        Block block;
        for (std::size_t i = lo; i < hi; ++i) {
            const ChargePoint& cp = *selected[i];
            auto r = replay_charge_point(cp, cfg);
            const auto sessions = energised(cp.sessions);
            block.acc.add_charge_point(sessions, cp.p_max_kw, [&](std::size_t k) {
                return std::pair{r.sessions[k].outcome, r.sessions[k].policy};
            });
            block.results.push_back(std::move(r));
        }
        return block;
    };
    auto fold = [&](Block&& b) {
        for (auto& r : b.results) result.charge_points.push_back(std::move(r));
        acc.merge(b.acc);
    };
    detail::blocked_reduce<Block>(selected.size(), cfg.workers, make_block, fold);
    result.summary = summarize(acc, cfg.histogram_bins);
    return result;
}

// ---------------------------------------------------------------------------
// Predict: cross-validated duration regression with and without energy.

struct CpPrediction {
    std::string cp_id;
    std::size_t rows = 0;
    std::optional<PredictionMetrics> with_energy;
    std::optional<PredictionMetrics> without_energy;
};

struct PredictResult {
    std::vector<CpPrediction> charge_points;
    PredictionSummary with_energy;
    PredictionSummary without_energy;
};

inline PredictResult run_predict(const std::vector<ChargePoint>& cps, const ExperimentConfig& cfg) {
    cfg.validate();
    const auto selected = detail::select(cps, cfg.cp_filter);
    PredictResult result;
    result.charge_points.resize(selected.size());
    parallel_for(selected.size(), cfg.workers, [&](std::size_t i) {
        const auto& cp = *selected[i];
        auto& r = result.charge_points[i];
        r.cp_id = cp.cp_id;
        r.rows = cp.sessions.empty() ? 0 : cp.sessions.size() - 1;
        r.with_energy = cross_validate(cp.sessions, cfg.folds, true);
        r.without_energy = cross_validate(cp.sessions, cfg.folds, false);
    });
    std::vector<std::optional<PredictionMetrics>> with, without;
    for (const auto& r : result.charge_points) {
        with.push_back(r.with_energy);
        without.push_back(r.without_energy);
    }
    result.with_energy = summarize(std::span<const std::optional<PredictionMetrics>>(with));
    result.without_energy = summarize(std::span<const std::optional<PredictionMetrics>>(without));
    return result;
}

}  // namespace evcharge
