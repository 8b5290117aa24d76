#pragma once

// Reward-driven stochastic local search over (boost duration, slow rate).
//
// Each iteration perturbs the incumbent by a random step of random sign in
// both coordinates, replays the candidate over the history and keeps it
// only if the reward strictly improves. Step sizes are drawn fresh every
// iteration from [min, max], which lets the search jump out of the flat or
// non-concave regions of the reward surface.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "charging_model.hpp"
#include "error.hpp"

namespace evcharge {

struct RewardParams {
    double k1 = 0.1;   // penalty per kWh of deficit
    double k2 = 10.0;  // weight of the inverse aggregate rate, kW
    double e_max_loss_kwh = 10.0;

    bool valid() const { return k1 >= 0.0 && k2 > 0.0 && e_max_loss_kwh > 0.0; }
};

struct SearchConfig {
    std::size_t n_tries = 200;
    double dx_min = 0.01;  // boost step bounds, as a fraction of the mean plug-in duration
    double dx_max = 1.0;
    double dy_min = 0.001;  // slow-rate step bounds, absolute
    double dy_max = 0.25;
    std::uint64_t seed = 0;

    bool valid() const {
        return n_tries >= 1 && dx_min > 0.0 && dx_min <= dx_max && dy_min > 0.0 && dy_min <= dy_max && dy_max <= 1.0;
    }
};

struct LearnedPolicy {
    ChargingPolicy policy;
    double reward = -std::numeric_limits<double>::infinity();
    PolicyEvaluation evaluation;
    bool feasible = false;
};

/// One evaluated candidate, in search order.
struct SearchStep {
    ChargingPolicy candidate;
    PolicyEvaluation evaluation;
    double reward = 0.0;
    bool accepted = false;
};

inline double reward(const PolicyEvaluation& eval, const RewardParams& params) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (eval.e_loss_kwh >= params.e_max_loss_kwh) return -inf;
    if (eval.p_aggr_kw == 0.0) return inf;
    return -params.k1 * eval.e_loss_kwh + params.k2 / eval.p_aggr_kw;
}

inline bool is_feasible(const PolicyEvaluation& eval, const RewardParams& params) {
    return eval.e_loss_kwh < params.e_max_loss_kwh;
}

/// Mixes a base seed with a key (a charge-point id) so every charge point
/// draws an independent, order-insensitive random stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::uint64_t salt = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = base ^ h ^ (salt * 0x9e3779b97f4a7c15ULL);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace detail {

// Portable uniform draws; std::uniform_real_distribution is not
// bit-reproducible across standard libraries.
class SearchRng {
public:
    explicit SearchRng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }
    double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

private:
    std::mt19937_64 engine_;
};

}  // namespace detail

inline ChargingPolicy raw_fallback_policy(std::span<const Session> history) {
    double longest = 0.0;
    for (const auto& s : history) longest = std::max(longest, s.plugin_hours);
    return {longest, 1.0};
}

/// Learns a policy for one charge point. Always returns a feasible policy:
/// if the search never finds one, the raw-equivalent policy is returned.
inline LearnedPolicy learn_policy(std::span<const Session> history, double p_max_kw, const SearchConfig& cfg,
                                  const RewardParams& params, std::optional<ChargingPolicy> init = std::nullopt,
                                  std::vector<SearchStep>* trace = nullptr) {
    if (history.empty()) throw Error("cannot learn a policy from an empty history");
    if (!(p_max_kw > 0.0)) throw Error("learning needs a positive P_max");
    if (!cfg.valid()) throw Error("invalid search configuration");
    if (!params.valid()) throw Error("invalid reward parameters");

    double t_mean = 0.0;
    double t_longest = 0.0;
    for (const auto& s : history) {
        t_mean += s.plugin_hours;
        t_longest = std::max(t_longest, s.plugin_hours);
    }
    t_mean /= static_cast<double>(history.size());

    LearnedPolicy best;
    best.policy = init.value_or(ChargingPolicy{t_mean, 0.5});
    best.policy.t_boost_max_hours = std::clamp(best.policy.t_boost_max_hours, 0.0, t_longest);
    best.policy.p_rate = std::clamp(best.policy.p_rate, 0.0, 1.0);
    best.evaluation = evaluate_policy(history, best.policy, p_max_kw);
    best.reward = reward(best.evaluation, params);

    detail::SearchRng rng(cfg.seed);
    for (std::size_t i = 0; i < cfg.n_tries; ++i) {
        double dx = t_mean * rng.uniform(cfg.dx_min, cfg.dx_max) * rng.sign();
        double dy = rng.uniform(cfg.dy_min, cfg.dy_max) * rng.sign();
        ChargingPolicy candidate{std::clamp(best.policy.t_boost_max_hours + dx, 0.0, t_longest),
                                 std::clamp(best.policy.p_rate + dy, 0.0, 1.0)};
        auto eval = evaluate_policy(history, candidate, p_max_kw);
        double r = reward(eval, params);
        bool accept = r > best.reward;
        if (trace) trace->push_back({candidate, eval, r, accept});
        if (accept) {
            best.policy = candidate;
            best.evaluation = eval;
            best.reward = r;
        }
    }

    best.feasible = is_feasible(best.evaluation, params);
    if (!best.feasible) {
        best.policy = raw_fallback_policy(history);
        best.evaluation = evaluate_policy(history, best.policy, p_max_kw);
        best.reward = reward(best.evaluation, params);
        best.feasible = is_feasible(best.evaluation, params);
    }
    return best;
}

/// The most recent `size` sessions; all of them when size is unset.
inline std::span<const Session> rolling_window(std::span<const Session> history, std::optional<std::size_t> size) {
    if (!size || *size >= history.size()) return history;
    return history.subspan(history.size() - *size);
}

}  // namespace evcharge
