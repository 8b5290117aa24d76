#pragma once

// Two-phase charging: a boost phase at P_max for up to a learned duration,
// followed by a slow phase at a fraction of P_max until either the target
// energy is met or the vehicle unplugs. Also defines the raw (full power
// until done) and oracle (energy spread evenly over the plug-in) baselines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"

namespace evcharge {

struct ChargingPolicy {
    double t_boost_max_hours = 0.0;
    double p_rate = 1.0;  // slow power = p_rate * P_max

    bool valid() const { return t_boost_max_hours >= 0.0 && p_rate >= 0.0 && p_rate <= 1.0; }
    friend bool operator==(const ChargingPolicy&, const ChargingPolicy&) = default;
};

struct SessionOutcome {
    double e_target_kwh = 0.0;
    double t_boost_hours = 0.0;
    double e_boost_kwh = 0.0;
    double e_total_kwh = 0.0;  // energy actually delivered
    double e_slow_kwh = 0.0;
    double t_slow_hours = 0.0;
    double p_eff_kw = 0.0;
    double e_loss_kwh = 0.0;
};

struct PolicyEvaluation {
    double e_loss_kwh = 0.0;
    double p_aggr_kw = 0.0;
};

/// A constant-power segment; times are seconds after the profile origin.
struct PowerPiece {
    double begin_s = 0.0;
    double end_s = 0.0;
    double power_kw = 0.0;

    double energy_kwh() const { return power_kw * (end_s - begin_s) / kSecondsPerHour; }
};

struct PowerProfile {
    Instant origin = 0;
    std::vector<PowerPiece> pieces;

    double energy_kwh() const {
        double e = 0.0;
        for (const auto& p : pieces) e += p.energy_kwh();
        return e;
    }
    double peak_kw() const {
        double peak = 0.0;
        for (const auto& p : pieces) peak = std::max(peak, p.power_kw);
        return peak;
    }
};

/// Applies a policy to one session.
inline SessionOutcome simulate_session(const Session& s, const ChargingPolicy& policy, double p_max_kw) {
    const double e_target = s.energy_kwh;
    const double plugin = s.plugin_hours;
    const double rate = policy.p_rate;
    SessionOutcome o;
    o.e_target_kwh = e_target;
    o.t_boost_hours = std::min({e_target / p_max_kw, policy.t_boost_max_hours, plugin});
    o.e_boost_kwh = std::min(o.t_boost_hours * p_max_kw, e_target);
    o.e_total_kwh = std::min(e_target, p_max_kw * (o.t_boost_hours + (plugin - o.t_boost_hours) * rate));
    o.e_slow_kwh = o.e_total_kwh - o.e_boost_kwh;
    o.t_slow_hours = o.e_slow_kwh == 0.0 ? 0.0 : o.e_slow_kwh / (p_max_kw * rate);
    o.p_eff_kw = e_target == 0.0 ? 0.0 : (o.e_boost_kwh + rate * (o.e_total_kwh - o.e_boost_kwh)) * p_max_kw / e_target;
    o.e_loss_kwh = e_target - o.e_total_kwh;
    return o;
}

/// Energy deficit and energy-weighted charging rate of a policy replayed
/// over a session history.
inline PolicyEvaluation evaluate_policy(std::span<const Session> history, const ChargingPolicy& policy, double p_max_kw) {
    if (history.empty()) throw Error("cannot evaluate a policy on an empty history");
    double loss = 0.0;
    double weighted = 0.0;
    double delivered = 0.0;
    for (const auto& s : history) {
        auto o = simulate_session(s, policy, p_max_kw);
        loss += s.energy_kwh - o.e_total_kwh;
        weighted += o.p_eff_kw * o.e_total_kwh;
        delivered += o.e_total_kwh;
    }
    return {loss, delivered == 0.0 ? 0.0 : weighted / delivered};
}

/// Full power from plug-in until the target is met.
inline PowerProfile raw_profile(const Session& s, double p_max_kw) {
    if (!(p_max_kw > 0.0)) throw Error("raw charging needs a positive P_max");
    PowerProfile profile{s.start, {}};
    if (s.energy_kwh <= 0.0) return profile;
    double seconds = std::min(s.energy_kwh / p_max_kw * kSecondsPerHour, s.plugin_seconds());
    profile.pieces.push_back({0.0, seconds, p_max_kw});
    return profile;
}

/// Delivered energy under raw charging; equals the target unless P_max was
/// capped below the session's average power. A shortfall within rounding
/// (the session that defines P_max) counts as delivered in full.
inline double raw_delivered_kwh(const Session& s, double p_max_kw) {
    const double cap = p_max_kw * s.plugin_hours;
    return cap >= s.energy_kwh * (1.0 - 1e-12) ? s.energy_kwh : cap;
}

/// The target energy spread evenly over the whole plug-in duration.
inline PowerProfile oracle_profile(const Session& s) {
    if (!(s.plugin_hours > 0.0)) throw Error("oracle charging needs a positive plug-in duration");
    PowerProfile profile{s.start, {}};
    if (s.energy_kwh <= 0.0) return profile;
    profile.pieces.push_back({0.0, s.plugin_seconds(), s.energy_kwh / s.plugin_hours});
    return profile;
}

/// Boost piece at P_max followed by the slow piece, as simulated.
inline PowerProfile adaptive_profile(const Session& s, const SessionOutcome& o, double p_max_kw, const ChargingPolicy& policy) {
    PowerProfile profile{s.start, {}};
    const double limit = s.plugin_seconds();
    const double boost_end = o.t_boost_hours * kSecondsPerHour;
    double slow_end = boost_end + o.t_slow_hours * kSecondsPerHour;
    if (slow_end > limit) {
        if (slow_end > limit * (1.0 + 1e-9)) throw Error("adaptive profile overruns the session");
        slow_end = limit;
    }
    if (boost_end > 0.0) profile.pieces.push_back({0.0, boost_end, p_max_kw});
    if (o.e_slow_kwh > 0.0 && slow_end > boost_end) {
        profile.pieces.push_back({boost_end, slow_end, policy.p_rate * p_max_kw});
    }
    return profile;
}

}  // namespace evcharge
