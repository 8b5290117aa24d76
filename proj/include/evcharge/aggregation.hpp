#pragma once

// Folding of power profiles into a single 24 h profile at 1-second
// resolution. Each slot holds the energy (kWh) dispensed during that
// second of the day, summed over all sessions and calendar days.
//
// Long constant-power runs are recorded in a difference array so adding a
// multi-hour piece costs O(1); partial seconds at the piece edges are
// prorated exactly into their slots.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "charging_model.hpp"
#include "error.hpp"

namespace evcharge {

class DailyProfile {
public:
    static constexpr std::size_t kSlots = static_cast<std::size_t>(kSecondsPerDay);

    DailyProfile() : direct_(kSlots, 0.0), ramp_(kSlots + 1, 0.0) {}

    void add(const PowerProfile& profile) {
        for (const auto& piece : profile.pieces) add_piece(profile.origin, piece);
    }

    void add_piece(Instant origin, const PowerPiece& piece) {
        if (!(piece.end_s > piece.begin_s) || piece.power_kw == 0.0) return;
        const double per_second = piece.power_kw / kSecondsPerHour;
        const double b0 = std::floor(piece.begin_s);
        const double b1 = std::floor(piece.end_s);
        const Instant first = origin + static_cast<Instant>(b0);
        const Instant last = origin + static_cast<Instant>(b1);
        if (first == last) {
            direct_[slot(first)] += per_second * (piece.end_s - piece.begin_s);
            return;
        }
        direct_[slot(first)] += per_second * (b0 + 1.0 - piece.begin_s);
        add_run(first + 1, last - first - 1, per_second);
        const double tail = piece.end_s - b1;
        if (tail > 0.0) direct_[slot(last)] += per_second * tail;
    }

    /// Element-wise sum.
    DailyProfile& merge(const DailyProfile& other) {
        for (std::size_t i = 0; i < kSlots; ++i) direct_[i] += other.direct_[i];
        for (std::size_t i = 0; i <= kSlots; ++i) ramp_[i] += other.ramp_[i];
        whole_days_ += other.whole_days_;
        return *this;
    }

    /// Energy per second-of-day slot, kWh.
    std::vector<double> slots() const {
        std::vector<double> out(kSlots);
        double running = 0.0;
        double carry = 0.0;
        for (std::size_t i = 0; i < kSlots; ++i) {
            // Neumaier-compensated prefix sum of the difference array.
            double v = ramp_[i];
            double t = running + v;
            carry += std::abs(running) >= std::abs(v) ? (running - t) + v : (v - t) + running;
            running = t;
            out[i] = std::max(0.0, direct_[i] + whole_days_ + (running + carry));
        }
        return out;
    }

private:
    static std::size_t slot(Instant t) { return static_cast<std::size_t>(second_of_day(t)); }

    void add_run(Instant start, Instant count, double value) {
        if (count <= 0) return;
        whole_days_ += value * static_cast<double>(count / kSecondsPerDay);
        auto rem = static_cast<std::size_t>(count % kSecondsPerDay);
        if (rem == 0) return;
        std::size_t s = slot(start);
        if (s + rem <= kSlots) {
            ramp_[s] += value;
            ramp_[s + rem] -= value;
        } else {
            ramp_[s] += value;
            ramp_[kSlots] -= value;
            ramp_[0] += value;
            ramp_[s + rem - kSlots] -= value;
        }
    }

    std::vector<double> direct_;
    std::vector<double> ramp_;
    double whole_days_ = 0.0;
};

inline DailyProfile accumulate(const PowerProfile& profile) {
    DailyProfile d;
    d.add(profile);
    return d;
}

inline DailyProfile merge(DailyProfile a, const DailyProfile& b) {
    a.merge(b);
    return a;
}

inline double total_energy(std::span<const double> slots) {
    double sum = 0.0;
    double carry = 0.0;
    for (double v : slots) {
        double t = sum + v;
        carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    return sum + carry;
}

struct Peak {
    double power_kw = 0.0;
    std::size_t second_of_day = 0;
};

/// Highest per-second average power. Ties resolve to the earliest second.
inline Peak peak(std::span<const double> slots) {
    Peak p;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        double kw = slots[i] * kSecondsPerHour;
        if (kw > p.power_kw) p = {kw, i};
    }
    return p;
}

/// Percentage by which the candidate's peak undercuts the baseline's.
inline double peak_reduction(std::span<const double> candidate, std::span<const double> baseline) {
    double base = peak(baseline).power_kw;
    if (!(base > 0.0)) throw Error("peak reduction needs a baseline with a positive peak");
    return 100.0 * (base - peak(candidate).power_kw) / base;
}

struct CpEnergy {
    double target_kwh = 0.0;
    double delivered_kwh = 0.0;
};

struct DeficitStats {
    double target_kwh = 0.0;
    double delivered_kwh = 0.0;
    double deficit_kwh = 0.0;
    double deficit_percent = 0.0;
    double cp_over_threshold_fraction = 0.0;
    std::size_t cp_count = 0;
};

/// Totals plus the fraction of charge points whose own deficit exceeds
/// `cp_threshold` (default 10%) of their target energy.
inline DeficitStats deficit_stats(std::span<const CpEnergy> per_cp, double cp_threshold = 0.10) {
    DeficitStats st;
    std::size_t over = 0;
    for (const auto& cp : per_cp) {
        st.target_kwh += cp.target_kwh;
        st.delivered_kwh += cp.delivered_kwh;
        double d = cp.target_kwh - cp.delivered_kwh;
        if (cp.target_kwh > 0.0 && d > cp_threshold * cp.target_kwh) ++over;
    }
    st.deficit_kwh = st.target_kwh - st.delivered_kwh;
    st.deficit_percent = st.target_kwh > 0.0 ? 100.0 * st.deficit_kwh / st.target_kwh : 0.0;
    st.cp_count = per_cp.size();
    st.cp_over_threshold_fraction = per_cp.empty() ? 0.0 : static_cast<double>(over) / static_cast<double>(per_cp.size());
    return st;
}

/// Normalized histogram of relative speeds (p_eff / p_max) over [0, 1].
inline std::vector<double> speed_histogram(std::span<const double> relative_speeds, std::size_t bins = 100) {
    if (bins == 0) throw Error("histogram needs at least one bin");
    std::vector<double> hist(bins, 0.0);
    if (relative_speeds.empty()) return hist;
    for (double x : relative_speeds) {
        auto b = static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) * static_cast<double>(bins));
        ++hist[std::min(b, bins - 1)];
    }
    for (double& h : hist) h /= static_cast<double>(relative_speeds.size());
    return hist;
}

inline double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    auto mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    double upper = xs[mid];
    if (xs.size() % 2 == 1) return upper;
    double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace evcharge
