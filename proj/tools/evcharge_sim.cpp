// evcharge-sim: learn per-charge-point charging policies from session
// history and compare them against raw and oracle charging.
//
//   evcharge-sim --input sessions.csv --mode offline --history 30 --out-dir out/h30
//   evcharge-sim --input sessions.csv --mode online --cp AN15123 --history 60
//   evcharge-sim --input sessions.csv --mode predict
//
// Any flag may also be set in an INI/TOML file passed with --config; flags
// given on the command line take precedence.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "evcharge/evcharge.hpp"

namespace {

std::optional<std::size_t> parse_history(const std::string& text) {
    if (text == "unlimited" || text == "all") return std::nullopt;
    auto v = evcharge::parse_integer<std::size_t>(text);
    if (!v || *v == 0) throw evcharge::Error("--history expects a positive count or 'unlimited', got '" + text + "'");
    return *v;
}

}  // namespace

int main(int argc, char** argv) {
    evcharge::ExperimentConfig cfg;
    std::string mode = "offline";
    std::string history = "30";
    double p_max_quantile = 0.0;

    CLI::App app{"Adaptive EV charging simulator"};
    app.set_config("--config", "", "INI/TOML file with default flag values");
    app.add_option("--input", cfg.input_path, "Session CSV file")->required();
    app.add_option("--mode", mode, "offline | online | predict")
        ->check(CLI::IsMember({"offline", "online", "predict"}));
    app.add_option("--history", history, "Training window: session count or 'unlimited'");
    app.add_option("--seed", cfg.search.seed, "Base random seed");
    app.add_option("--min-sessions", cfg.cleaning.min_sessions, "Drop charge points with fewer sessions");
    app.add_option("--max-hours", cfg.cleaning.max_hours, "Drop sessions plugged in longer than this");
    app.add_option("--p-max-quantile", p_max_quantile, "Derive P_max from this quantile of session power (0 = maximum)");
    app.add_option("--n-tries", cfg.search.n_tries, "Search iterations per policy");
    app.add_option("--dx-min", cfg.search.dx_min, "Smallest boost step, fraction of mean plug-in time");
    app.add_option("--dx-max", cfg.search.dx_max, "Largest boost step, fraction of mean plug-in time");
    app.add_option("--dy-min", cfg.search.dy_min, "Smallest slow-rate step");
    app.add_option("--dy-max", cfg.search.dy_max, "Largest slow-rate step");
    app.add_option("--k1", cfg.reward.k1, "Reward penalty per kWh of deficit");
    app.add_option("--k2", cfg.reward.k2, "Reward weight of inverse aggregate rate");
    app.add_option("--max-loss", cfg.reward.e_max_loss_kwh, "Deficit (kWh) at which a policy is rejected");
    app.add_option("--warmup", cfg.online_warmup, "Online mode: sessions charged raw before learning starts");
    app.add_flag("--cold-start", cfg.online_cold_start, "Online mode: re-learn from scratch after every session");
    app.add_option("--train-fraction", cfg.train_fraction, "Offline mode: leading share of sessions used for training");
    app.add_option("--out-dir", cfg.output_dir, "Report directory");
    app.add_option("--cp", cfg.cp_filter, "Restrict to these charge point ids (repeatable)");
    app.add_option("--workers", cfg.workers, "Worker threads (0 = all cores)");
    app.add_option("--emit-resolution", cfg.emit_resolution_s, "Seconds per row in profile CSVs");
    app.add_option("--folds", cfg.folds, "Predict mode: cross-validation folds");

    CLI11_PARSE(app, argc, argv);

    try {
        static const std::map<std::string, evcharge::Mode> modes{
            {"offline", evcharge::Mode::offline}, {"online", evcharge::Mode::online}, {"predict", evcharge::Mode::predict}};
        cfg.mode = modes.at(mode);
        cfg.history = parse_history(history);
        if (p_max_quantile > 0.0) cfg.cleaning.p_max_quantile = p_max_quantile;
        cfg.validate();

        const evcharge::fs::path out_dir = cfg.output_dir;
        auto data = evcharge::load_dataset(cfg);
        evcharge::emit_cleaning_report(data, out_dir);
        const auto& cps = data.cleaned.charge_points;
        std::fprintf(stderr, "loaded %zu sessions on %zu charge points (%zu rows rejected)\n",
                     data.cleaned.report.retained_sessions, cps.size(), data.parse_error_count);

        switch (cfg.mode) {
            case evcharge::Mode::offline: {
                auto result = evcharge::run_offline(cps, cfg);
                evcharge::emit_reports(result, cfg, out_dir);
                std::fprintf(stderr, "offline: %zu charge points, peak reduction %.2f%%, deficit %.2f%%\n", result.evaluated,
                             result.test.rl_peak_reduction_percent, result.test.rl.deficit.deficit_percent);
                break;
            }
            case evcharge::Mode::online: {
                auto result = evcharge::run_online(cps, cfg);
                evcharge::emit_reports(result, cfg, out_dir);
                std::fprintf(stderr, "online: %zu charge points, deficit %.2f%%\n", result.charge_points.size(),
                             result.summary.rl.deficit.deficit_percent);
                break;
            }
            case evcharge::Mode::predict: {
                auto result = evcharge::run_predict(cps, cfg);
                evcharge::emit_reports(result, cfg, out_dir);
                std::fprintf(stderr, "predict: MAE %.3f h over %zu charge points (%zu skipped)\n", result.with_energy.mean.mae,
                             result.with_energy.evaluated, result.with_energy.skipped);
                break;
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
