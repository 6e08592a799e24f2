#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "replaysim/errors.hpp"
#include "replaysim/monte_carlo.hpp"
#include "replaysim/report.hpp"
#include "replaysim/scenario.hpp"
#include "replaysim/simulation.hpp"

namespace fs = std::filesystem;

namespace {

using namespace replaysim;

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << contents;
}

std::string aggregate_text(const MonteCarloResult& result) {
    std::ostringstream out;
    write_aggregate_csv(out, result);
    return out.str();
}

/// scenario.json, manifest.json, aggregate.csv and per-step rows for the
/// first trace_runs runs.
void emit_result(const MonteCarloResult& result, const fs::path& out_dir,
                 int trace_runs) {
    fs::create_directories(out_dir);
    write_file(out_dir / "scenario.json", save_scenario(result.config));
    std::ostringstream manifest;
    write_manifest(manifest, result);
    write_file(out_dir / "manifest.json", manifest.str());
    write_file(out_dir / "aggregate.csv", aggregate_text(result));

    const int traced =
        std::min(trace_runs, static_cast<int>(result.runs.size()));
    std::ostringstream steps;
    steps << step_csv_header(result.config) << '\n';
    for (int run = 0; run < traced; ++run) {
        const SimulationTrace trace =
            run_scenario(result.config, run, RecordOptions{true, false});
        write_run_csv(steps, result.config, trace, run);
    }
    write_file(out_dir / "runs.csv", steps.str());
}

void print_summary(const MonteCarloResult& result) {
    const ScenarioConfig& config = result.config;
    std::cout << "runs " << config.runs << ", horizon " << config.horizon
              << ", window " << config.window_capacity << ", seed "
              << config.seed << '\n';
    std::cout << "kl threshold " << format_number(result.kl_threshold)
              << '\n';
    double cost = 0.0;
    for (const RunSummary& run : result.runs) {
        cost += run.average_cost;
    }
    cost /= static_cast<double>(result.runs.size());
    std::cout << "mean stage cost " << format_number(cost) << '\n';

    if (config.attack.mode == AttackMode::Replay) {
        const DelayDistribution kl_delays = delay_distribution(
            result, SeriesKind::KlStatistic, result.kl_threshold);
        const std::optional<double> kl_median = median_delay(kl_delays);
        std::cout << "kl detector: detected " << kl_delays.detected << "/"
                  << result.runs.size() << ", median delay "
                  << (kl_median ? format_number(*kl_median) : "inf") << '\n';
        if (result.chi2_empirical_threshold.has_value()) {
            const DelayDistribution chi2_delays =
                delay_distribution(result, SeriesKind::Chi2Statistic,
                                   *result.chi2_empirical_threshold);
            const std::optional<double> chi2_median =
                median_delay(chi2_delays);
            std::cout << "chi2 detector (matched operating point): detected "
                      << chi2_delays.detected << "/" << result.runs.size()
                      << ", median delay "
                      << (chi2_median ? format_number(*chi2_median) : "inf")
                      << '\n';
        }
    } else {
        const DelayDistribution kl_fa = delay_distribution(
            result, SeriesKind::KlStatistic, result.kl_threshold);
        if (kl_fa.false_alarm_opportunities > 0) {
            std::cout << "kl false-alarm rate "
                      << format_number(
                             static_cast<double>(kl_fa.false_alarms) /
                             static_cast<double>(
                                 kl_fa.false_alarm_opportunities))
                      << '\n';
        }
    }
}

int cmd_run(const ScenarioConfig& config, const fs::path& out_dir,
            int trace_runs, int threads, bool with_baseline) {
    const MonteCarloResult result = run_monte_carlo(config, threads);
    emit_result(result, out_dir, trace_runs);
    if (with_baseline && config.attack.mode == AttackMode::Replay) {
        const MonteCarloResult baseline =
            run_monte_carlo(without_attack(result.config), threads);
        write_file(out_dir / "baseline_aggregate.csv",
                   aggregate_text(baseline));
    }
    print_summary(result);
    std::cout << "wrote " << out_dir.string() << '\n';
    return 0;
}

int cmd_scan_tau(const ScenarioConfig& config,
                 const std::vector<double>& scales,
                 const std::string& out_dir) {
    const SteadyStateGains gains =
        compute_steady_gains(config.model, config.beta);
    const LqgDesign design = design_lqg(config.model, config.F, config.G);
    const std::vector<TauTradeoffRow> rows = tau_tradeoff_scan(
        config.model, design, gains, config.watermark.tau, scales);
    std::ostringstream table;
    table << "scale,cost_penalty,detectability,attack_kl,"
             "attack_kl_unhalved\n";
    for (const TauTradeoffRow& row : rows) {
        table << format_number(row.scale) << ','
              << format_number(row.cost_penalty) << ','
              << format_number(row.detectability) << ','
              << format_number(row.attack_kl) << ','
              << format_number(row.attack_kl_unhalved) << '\n';
    }
    std::cout << table.str();
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "tau_scan.csv", table.str());
        std::cout << "wrote " << out_dir << "/tau_scan.csv\n";
    }
    return 0;
}

int cmd_calibrate(const ScenarioConfig& config, int threads) {
    const CalibratedThresholds thresholds =
        calibrate_thresholds(config, threads);
    std::cout << "kl_threshold " << format_number(thresholds.kl) << '\n';
    std::cout << "chi2_threshold " << format_number(thresholds.chi2) << '\n';
    return 0;
}

int cmd_validate(const ScenarioConfig& config) {
    const SteadyStateGains gains =
        compute_steady_gains(config.model, config.beta);
    const LqgDesign design = design_lqg(config.model, config.F, config.G);
    const Matrix lambda = virtual_gain_matrix(config.model, design, gains);
    const bool stealthy =
        stealthiness_classification(lambda) == Stealthiness::Stealthy;
    std::cout << "ok: n=" << config.model.n() << " p=" << config.model.p()
              << " m=" << config.model.m() << ", steady cost "
              << format_number(lqg_cost(design, gains, config.model))
              << ", replay spectral radius "
              << format_number(spectral_radius(lambda)) << " ("
              << (stealthy ? "stealthy" : "self-exposing") << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear-Gaussian control loop simulator: replay attacks, "
                 "watermarking, divergence and whiteness detectors"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string preset_name;
    std::string out_dir = "out";
    int trace_runs = 5;
    int threads = 0;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> runs_override;
    std::vector<double> scales;

    CLI::App* run_cmd =
        app.add_subcommand("run", "simulate a scenario file");
    run_cmd->add_option("scenario", scenario_path, "scenario JSON file")
        ->required();
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--seed", seed_override, "override the seed");
    run_cmd->add_option("--runs", runs_override, "override the run count");
    run_cmd->add_option("--trace-runs", trace_runs,
                        "runs emitted to the per-step CSV");
    run_cmd->add_option("--threads", threads, "worker threads (0 = auto)");

    CLI::App* preset_cmd =
        app.add_subcommand("preset", "simulate a named experiment");
    preset_cmd->add_option("name", preset_name, "preset name")->required();
    preset_cmd->add_option("--out", out_dir, "output directory");
    preset_cmd->add_option("--seed", seed_override, "override the seed");
    preset_cmd->add_option("--runs", runs_override, "override the run count");
    preset_cmd->add_option("--trace-runs", trace_runs,
                           "runs emitted to the per-step CSV");
    preset_cmd->add_option("--threads", threads, "worker threads (0 = auto)");

    CLI::App* scan_cmd = app.add_subcommand(
        "scan-tau", "cost/detectability trade-off of scaled watermarks");
    scan_cmd->add_option("scenario", scenario_path, "scenario JSON file")
        ->required();
    scan_cmd->add_option("--scales", scales, "watermark scale factors")
        ->required()
        ->delimiter(',');
    scan_cmd->add_option("--out", out_dir, "output directory");

    CLI::App* calibrate_cmd = app.add_subcommand(
        "calibrate", "emit the no-attack detector thresholds");
    calibrate_cmd
        ->add_option("scenario", scenario_path, "scenario JSON file")
        ->required();
    calibrate_cmd->add_option("--threads", threads,
                              "worker threads (0 = auto)");

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "parse and check a scenario file");
    validate_cmd
        ->add_option("scenario", scenario_path, "scenario JSON file")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run_cmd || *preset_cmd) {
            ScenarioConfig config = *run_cmd
                                        ? load_scenario_file(scenario_path)
                                        : preset(preset_name);
            if (seed_override.has_value()) {
                config.seed = *seed_override;
            }
            if (runs_override.has_value()) {
                config.runs = *runs_override;
            }
            validate_scenario(config);
            const bool with_baseline =
                *preset_cmd &&
                (preset_name == "figure2" || preset_name == "figure3");
            if (*preset_cmd && !preset_cmd->count("--out")) {
                out_dir = "out-" + preset_name;
            }
            return cmd_run(config, out_dir, trace_runs, threads,
                           with_baseline);
        }
        if (*scan_cmd) {
            const std::string scan_out =
                scan_cmd->count("--out") ? out_dir : std::string();
            return cmd_scan_tau(load_scenario_file(scenario_path), scales,
                                scan_out);
        }
        if (*calibrate_cmd) {
            return cmd_calibrate(load_scenario_file(scenario_path), threads);
        }
        if (*validate_cmd) {
            return cmd_validate(load_scenario_file(scenario_path));
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const UnknownPreset& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NonConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Singular& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const UnstableOperator& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const NotPSD& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
