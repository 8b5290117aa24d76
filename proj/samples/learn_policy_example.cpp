// Learns a charging policy for each charge point in a session file from its
// 30 most recent sessions, then shows what the policy would do to the next
// plug-in compared with charging flat out.
//
//   learn_policy_example [sessions.csv]

#include <cstdio>
#include <fstream>

#include "evcharge/evcharge.hpp"

int main(int argc, char** argv) {
    using namespace evcharge;
    const char* path = argc > 1 ? argv[1] : "sample_sessions.csv";
    try {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(std::string("cannot open ") + path);
        auto parsed = parse_dataset(in);
        auto cleaned = clean_sessions(std::move(parsed.sessions), {});
        std::printf("%zu charge points kept, %zu rows rejected\n", cleaned.charge_points.size(), parsed.errors.size());

        for (const auto& cp : cleaned.charge_points) {
            if (!cp.usable() || cp.sessions.size() < 2) continue;
            std::span<const Session> all(cp.sessions);
            auto history = rolling_window(all.first(all.size() - 1), 30);
            SearchConfig search;
            search.seed = derive_seed(1, cp.cp_id);
            auto learned = learn_policy(history, cp.p_max_kw, search, {});

            const Session& next = cp.sessions.back();
            auto o = simulate_session(next, learned.policy, cp.p_max_kw);
            std::printf("%s  P_max %.2f kW  boost <= %.2f h, slow at %.0f%%  |  next: %.2f of %.2f kWh at %.2f kW (raw %.2f kW)\n",
                        cp.cp_id.c_str(), cp.p_max_kw, learned.policy.t_boost_max_hours, 100.0 * learned.policy.p_rate, o.e_total_kwh,
                        o.e_target_kwh, o.p_eff_kw, cp.p_max_kw);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
