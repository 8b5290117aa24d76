#pragma once

// Independent reference computations used to check the library. None of
// these call into the code paths they verify.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "evcharge/dataset.hpp"

namespace evcharge::testkit {

/// Line-by-line transcription of the per-session evaluation loop, written
/// with plain locals, one assignment per step, kept apart from the library.
struct TranscribedOutcome {
    double T_boost, E_boost, E_total, E_slow, T_slow, P_eff;
};

inline TranscribedOutcome transcribe_session(double E_target, double T_plugin, double P_max, double T_maxboost, double P_rate) {
    TranscribedOutcome r{};
    // the actual amount of time in boost mode (also bounded by the plug-in)
    r.T_boost = E_target / P_max;
    if (T_maxboost < r.T_boost) r.T_boost = T_maxboost;
    if (T_plugin < r.T_boost) r.T_boost = T_plugin;
    // energy dispensed in boost mode
    r.E_boost = r.T_boost * P_max;
    if (E_target < r.E_boost) r.E_boost = E_target;
    // total energy dispensed in adaptive mode
    r.E_total = P_max * (r.T_boost + (T_plugin - r.T_boost) * P_rate);
    if (E_target < r.E_total) r.E_total = E_target;
    // slow charge energy and duration
    r.E_slow = r.E_total - r.E_boost;
    if (r.E_slow == 0.0) {
        r.T_slow = 0.0;
    } else {
        r.T_slow = r.E_slow / (P_max * P_rate);
    }
    // effective charge rate
    if (E_target == 0.0) {
        r.P_eff = 0.0;
    } else {
        r.P_eff = (r.E_boost + P_rate * (r.E_total - r.E_boost)) * P_max / E_target;
    }
    return r;
}

struct TranscribedEvaluation {
    double E_loss, P_aggr;
};

inline TranscribedEvaluation transcribe_history(const std::vector<Session>& data, double P_max, double T_maxboost, double P_rate) {
    double loss = 0.0, num = 0.0, den = 0.0;
    for (const auto& s : data) {
        auto r = transcribe_session(s.energy_kwh, s.plugin_hours, P_max, T_maxboost, P_rate);
        loss += s.energy_kwh - r.E_total;
        num += r.P_eff * r.E_total;
        den += r.E_total;
    }
    return {loss, den == 0.0 ? 0.0 : num / den};
}

inline double transcribe_reward(const TranscribedEvaluation& e, double k1, double k2, double max_loss) {
    if (e.E_loss >= max_loss) return -std::numeric_limits<double>::infinity();
    return -k1 * e.E_loss + k2 / e.P_aggr;
}

struct GridBest {
    double reward = -std::numeric_limits<double>::infinity();
    double t_boost = 0.0;
    double p_rate = 0.0;
    double e_loss = 0.0;
    double p_aggr = 0.0;
};

/// Exhaustive search over t_boost in {0, step_t, ..., t_hi} and p_rate in
/// {0, 0.01, ..., 1}.
inline GridBest grid_search(const std::vector<Session>& data, double P_max, double k1, double k2, double max_loss,
                            double t_hi = 24.0, int t_steps = 480, int r_steps = 100) {
    GridBest best;
    for (int i = 0; i <= t_steps; ++i) {
        double t = t_hi * i / t_steps;
        for (int j = 0; j <= r_steps; ++j) {
            double r = static_cast<double>(j) / r_steps;
            auto e = transcribe_history(data, P_max, t, r);
            double rew = transcribe_reward(e, k1, k2, max_loss);
            if (rew > best.reward) best = {rew, t, r, e.E_loss, e.P_aggr};
        }
    }
    return best;
}

/// Pairwise overlap check, O(n^2), on instants.
inline bool any_overlap(const std::vector<Session>& ss) {
    for (std::size_t i = 0; i < ss.size(); ++i) {
        for (std::size_t j = i + 1; j < ss.size(); ++j) {
            if (ss[i].start < ss[j].end && ss[j].start < ss[i].end) return true;
        }
    }
    return false;
}

/// Solves (X^T X) b = X^T y with an explicit intercept column by Gaussian
/// elimination with partial pivoting. Returns {intercept, coefficients...}.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    const std::size_t p = x.front().size() + 1;
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row{1.0};
        row.insert(row.end(), x[r].begin(), x[r].end());
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) a[i][j] += row[i] * row[j];
            a[i][p] += row[i] * y[r];
        }
    }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> b(p);
    for (std::size_t i = 0; i < p; ++i) b[i] = a[i][p] / a[i][i];
    return b;
}

/// Lays a constant-power interval onto a 86,400-slot day one second at a
/// time (slow, obviously correct).
inline void layout_interval(std::vector<double>& slots, Instant origin, double begin_s, double end_s, double power_kw) {
    double t = begin_s;
    while (t < end_s) {
        double sec = std::floor(t);
        double next = std::min(sec + 1.0, end_s);
        Instant abs = origin + static_cast<Instant>(sec);
        std::size_t slot = static_cast<std::size_t>(((abs % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay);
        slots[slot] += power_kw * (next - t) / kSecondsPerHour;
        t = next;
    }
}

}  // namespace evcharge::testkit
