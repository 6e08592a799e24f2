#include <cmath>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "replaysim/detector.hpp"
#include "replaysim/errors.hpp"
#include "replaysim/monte_carlo.hpp"
#include "replaysim/report.hpp"
#include "replaysim/simulation.hpp"

using namespace replaysim;

namespace {

// Steady cost and innovation variance of the all-ones scalar loop.
constexpr double kScalarOptimalCost = 2.236067977500;
constexpr double kScalarSigma = 2.618033988750;
// Steady divergence bought by a unit watermark on that loop, and the control
// cost it burns.
constexpr double kScalarWatermarkKl = 0.101813174168;
constexpr double kScalarWatermarkCost = 2.618033988750;

ScenarioConfig quiet_config() {
    ScenarioConfig config;
    config.horizon = 400;
    config.window_capacity = 30;
    config.kl_threshold = 0.5;
    config.runs = 6;
    return config;
}

std::string aggregate_text(const MonteCarloResult& result) {
    std::ostringstream out;
    write_aggregate_csv(out, result);
    return out.str();
}

// Bitwise series equality; unlike operator== this treats the NaN padding in
// the detector columns as equal to itself.
bool same_series(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           (a.empty() ||
            std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("warm-up covers the window and a floor of fifty steps") {
    ScenarioConfig config = quiet_config();
    config.window_capacity = 10;
    CHECK(warmup_steps(config) == 50);
    config.window_capacity = 128;
    CHECK(warmup_steps(config) == 128);
}

TEST_CASE("identical inputs reproduce a trace bit for bit") {
    const ScenarioConfig config = quiet_config();
    const SimulationTrace a = run_scenario(config, 3);
    const SimulationTrace b = run_scenario(config, 3);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
        CHECK(a.steps[k].x == b.steps[k].x);
        CHECK(a.steps[k].z == b.steps[k].z);
        CHECK(a.steps[k].u == b.steps[k].u);
    }
    CHECK(same_series(a.summary.kl_series, b.summary.kl_series));
    CHECK(same_series(a.summary.chi2_series, b.summary.chi2_series));
    CHECK(same_series(a.summary.cost_series, b.summary.cost_series));
    CHECK(a.summary.average_cost == b.summary.average_cost);

    const SimulationTrace other = run_scenario(config, 4);
    CHECK(other.summary.average_cost != a.summary.average_cost);
}

TEST_CASE("thread count does not change Monte Carlo output") {
    ScenarioConfig config = quiet_config();
    config.attack = {AttackMode::Replay, 0, 100, true};
    const MonteCarloResult serial = run_monte_carlo(config, 1);
    const MonteCarloResult pooled = run_monte_carlo(config, 4);
    CHECK(aggregate_text(serial) == aggregate_text(pooled));
    CHECK(serial.kl_threshold == pooled.kl_threshold);
    for (std::size_t i = 0; i < serial.runs.size(); ++i) {
        CHECK(serial.runs[i].kl_delay == pooled.runs[i].kl_delay);
        CHECK(serial.runs[i].average_cost == pooled.runs[i].average_cost);
    }
}

TEST_CASE("innovations settle at the predicted variance") {
    ScenarioConfig config = quiet_config();
    config.horizon = 20000;
    config.runs = 1;
    const SimulationTrace trace = run_scenario(config, 0);
    double sum_sq = 0.0;
    long count = 0;
    for (std::size_t k = 100; k < trace.steps.size(); ++k) {
        sum_sq += trace.steps[k].z.squaredNorm();
        ++count;
    }
    const double variance = sum_sq / static_cast<double>(count);
    CHECK(variance ==
          doctest::Approx(kScalarSigma).epsilon(0.05));
}

TEST_CASE("long-run average cost approaches the design optimum") {
    ScenarioConfig config = quiet_config();
    config.horizon = 200000;
    config.window_capacity = 20;
    const SimulationTrace trace =
        run_scenario(config, 0, RecordOptions{false, false});
    CHECK(trace.summary.average_cost ==
          doctest::Approx(kScalarOptimalCost).epsilon(0.03));
}

TEST_CASE("a noise-free plant stays exactly at the origin") {
    ScenarioConfig config = quiet_config();
    config.model.W(0, 0) = 0.0;
    const SimulationTrace trace = run_scenario(config, 0);
    for (const double cost : trace.summary.cost_series) {
        CHECK(cost == 0.0);
    }
    for (const double err : trace.summary.error_sq_series) {
        CHECK(err == 0.0);
    }
}

TEST_CASE("the control applied is the feedback law plus the watermark") {
    ScenarioConfig config = quiet_config();
    config.watermark = {Matrix::Identity(1, 1), 10};
    const LqgDesign design =
        design_lqg(config.model, config.F, config.G);
    const SimulationTrace trace = run_scenario(config, 1);
    bool saw_excitation = false;
    for (std::size_t k = 1; k < trace.steps.size(); ++k) {
        const Vector expected =
            design.M * trace.steps[k - 1].x_est + trace.steps[k].du;
        CHECK((trace.steps[k].u - expected).norm() < 1e-12);
        if (static_cast<long>(k) < config.watermark.active_from) {
            CHECK(trace.steps[k].du.isZero());
        } else if (!trace.steps[k].du.isZero()) {
            saw_excitation = true;
        }
    }
    CHECK(saw_excitation);
}

TEST_CASE("the replay era delivers the recorded cycle verbatim") {
    ScenarioConfig config = quiet_config();
    config.attack = {AttackMode::Replay, 0, 10, true};
    config.horizon = 60;
    const SimulationTrace trace = run_scenario(config, 0);
    for (long k = 10; k < config.horizon; ++k) {
        const long source = (k - 10) % 10;
        CHECK(trace.steps[static_cast<std::size_t>(k)].y_delivered ==
              trace.steps[static_cast<std::size_t>(source)].y_delivered);
    }
}

TEST_CASE("replayed innovations stay white when the record outlasts the "
          "window") {
    ScenarioConfig config;
    config.attack = {AttackMode::Replay, 0, 1000, true};
    config.horizon = 3000;
    config.window_capacity = 300;
    config.kl_threshold = 1e9;
    config.runs = 4;
    for (int run = 0; run < config.runs; ++run) {
        const SimulationTrace trace =
            run_scenario(config, run, RecordOptions{false, true});
        CHECK(trace.summary.kl_series.back() < 0.05);
    }
}

TEST_CASE("recorded statistics match the standalone detectors") {
    const ScenarioConfig config = quiet_config();
    const SteadyStateGains gains =
        compute_steady_gains(config.model, config.beta);
    const SimulationTrace trace = run_scenario(config, 2);
    InnovationWindow window(config.window_capacity);
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        window.push(static_cast<long>(k), trace.steps[k].z);
        if (k % 37 != 0 && k != 1 && k + 1 != trace.steps.size()) {
            continue;
        }
        const DetectorVerdict chi2 =
            chi2_detect(window, gains, config.chi2_significance);
        CHECK(chi2.statistic ==
              doctest::Approx(trace.steps[k].chi2_stat).epsilon(1e-12));
        CHECK(chi2.alarm == trace.steps[k].chi2_alarm);
        if (k >= 1) {
            const DetectorVerdict kl =
                kl_detect(window, gains, *config.kl_threshold);
            CHECK(kl.statistic ==
                  doctest::Approx(trace.steps[k].kl_stat).epsilon(1e-12));
            CHECK(kl.alarm == trace.steps[k].kl_alarm);
        } else {
            CHECK(std::isnan(trace.steps[k].kl_stat));
        }
    }
}

TEST_CASE("calibration tracks the requested false-alarm rate") {
    ScenarioConfig config = quiet_config();
    config.kl_threshold.reset();
    config.horizon = 600;
    config.window_capacity = 50;
    config.runs = 30;
    const CalibratedThresholds thresholds = calibrate_thresholds(config, 0);
    CHECK(thresholds.kl > 0.0);
    CHECK(thresholds.chi2 > 0.0);

    ScenarioConfig loose = config;
    loose.chi2_significance = 0.2;
    CHECK(calibrate_thresholds(loose, 0).kl < thresholds.kl);

    config.kl_threshold = thresholds.kl;
    const MonteCarloResult result = run_monte_carlo(config, 0);
    long alarms = 0;
    for (const RunSummary& run : result.runs) {
        alarms += run.kl_false_alarms;
    }
    const double opportunities =
        static_cast<double>(config.runs) *
        static_cast<double>(config.horizon - warmup_steps(config));
    const double rate = static_cast<double>(alarms) / opportunities;
    CHECK(rate > 0.0005);
    CHECK(rate < 0.06);
}

TEST_CASE("calibration is too short to run without settled samples") {
    ScenarioConfig config = quiet_config();
    config.kl_threshold.reset();
    config.horizon = 40;
    CHECK_THROWS_AS(calibrate_thresholds(config, 0), InsufficientSamples);
}

TEST_CASE("the ensemble resolves thresholds exactly once") {
    ScenarioConfig config = quiet_config();
    config.kl_threshold.reset();
    config.horizon = 300;
    config.runs = 8;
    const MonteCarloResult calibrated = run_monte_carlo(config, 0);
    CHECK(calibrated.config.kl_threshold.has_value());
    CHECK(calibrated.chi2_empirical_threshold.has_value());
    CHECK(calibrated.kl_threshold == *calibrated.config.kl_threshold);

    config.kl_threshold = 0.75;
    const MonteCarloResult pinned = run_monte_carlo(config, 0);
    CHECK(pinned.kl_threshold == 0.75);
    CHECK_FALSE(pinned.chi2_empirical_threshold.has_value());
}

TEST_CASE("an ensemble of one reduces to the single run") {
    ScenarioConfig config = quiet_config();
    config.runs = 1;
    const MonteCarloResult result = run_monte_carlo(config, 0);
    const SimulationTrace trace = run_scenario(config, 0);
    CHECK(ensemble_mean(result, SeriesKind::StepCost) ==
          trace.summary.cost_series);
    CHECK(ensemble_mean(result, SeriesKind::Chi2Statistic) ==
          trace.summary.chi2_series);
    CHECK_THROWS_AS(estimation_error_trace_series(result),
                    InsufficientSamples);
}

TEST_CASE("ensemble statistics skip the filling-window gap") {
    ScenarioConfig config = quiet_config();
    config.runs = 4;
    const MonteCarloResult result = run_monte_carlo(config, 0);
    const std::vector<double> mean =
        ensemble_mean(result, SeriesKind::KlStatistic);
    CHECK(std::isnan(mean[0]));
    CHECK(std::isfinite(mean[1]));
    const std::vector<double> median =
        ensemble_quantile(result, SeriesKind::KlStatistic, 0.5);
    CHECK(std::isnan(median[0]));
    CHECK(std::isfinite(median[1]));
    const std::vector<double> error = estimation_error_trace_series(result);
    CHECK(error.size() == static_cast<std::size_t>(config.horizon));
    for (const double v : error) {
        CHECK(std::isfinite(v));
    }
}

TEST_CASE("delay accounting is consistent across layers") {
    ScenarioConfig config;
    config.attack = {AttackMode::Replay, 0, 200, true};
    config.horizon = 500;
    config.window_capacity = 50;
    config.watermark = {Matrix::Identity(1, 1), 0};
    config.kl_threshold = 0.2;
    config.runs = 6;
    const MonteCarloResult result = run_monte_carlo(config, 0);
    const DelayDistribution distribution =
        delay_distribution(result, SeriesKind::KlStatistic,
                           result.kl_threshold);
    REQUIRE(distribution.delays.size() == result.runs.size());
    long detected = 0;
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        CHECK(distribution.delays[i] == result.runs[i].kl_delay);
        detected += result.runs[i].kl_delay.has_value() ? 1 : 0;
    }
    CHECK(distribution.detected == detected);
    CHECK(distribution.false_alarm_opportunities ==
          static_cast<long>(result.runs.size()) *
              (config.attack.attack_start - warmup_steps(config)));
}

TEST_CASE("median delay uses the lower median and ignores misses sensibly") {
    DelayDistribution distribution;
    distribution.delays = {std::optional<long>(4), std::optional<long>(1),
                           std::nullopt};
    CHECK(median_delay(distribution) == 4.0);
    distribution.delays = {std::nullopt, std::nullopt,
                           std::optional<long>(1)};
    CHECK_FALSE(median_delay(distribution).has_value());
    distribution.delays.clear();
    CHECK_FALSE(median_delay(distribution).has_value());

    CHECK(empirical_quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
    CHECK(empirical_quantile({3.0, 1.0, 2.0}, 0.0) == 1.0);
    CHECK(empirical_quantile({3.0, 1.0, 2.0}, 1.0) == 3.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(empirical_quantile({nan, 5.0}, 0.99) == 5.0);
    CHECK_THROWS_AS(empirical_quantile({nan}, 0.5), InsufficientSamples);
    CHECK_THROWS_AS(empirical_quantile({1.0}, 1.5), ValidationError);
}

TEST_CASE("the excitation trade-off table matches the closed forms") {
    const ScenarioConfig config = quiet_config();
    const SteadyStateGains gains =
        compute_steady_gains(config.model, config.beta);
    const LqgDesign design = design_lqg(config.model, config.F, config.G);
    const Matrix tau = Matrix::Identity(1, 1);
    const std::vector<TauTradeoffRow> rows = tau_tradeoff_scan(
        config.model, design, gains, tau, {2.0, 0.0, 1.0, 4.0});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].scale == 0.0);
    CHECK(rows[1].scale == 1.0);
    CHECK(rows[2].scale == 2.0);
    CHECK(rows[0].cost_penalty == 0.0);
    CHECK(rows[0].detectability == 0.0);
    CHECK(std::abs(rows[0].attack_kl) < 1e-12);

    CHECK(rows[1].cost_penalty ==
          doctest::Approx(kScalarWatermarkCost).epsilon(1e-9));
    CHECK(rows[1].attack_kl ==
          doctest::Approx(kScalarWatermarkKl).epsilon(1e-9));
    CHECK(rows[1].attack_kl_unhalved ==
          doctest::Approx(2.0 * kScalarWatermarkKl + 1.0).epsilon(1e-9));

    // Cost and innovation inflation scale linearly with tau. The divergence
    // is second-order small at weak excitation, so its increments grow.
    CHECK(rows[2].cost_penalty ==
          doctest::Approx(2.0 * rows[1].cost_penalty).epsilon(1e-12));
    CHECK(rows[2].detectability ==
          doctest::Approx(2.0 * rows[1].detectability).epsilon(1e-9));
    CHECK(rows[3].attack_kl > rows[2].attack_kl);
    CHECK(rows[2].attack_kl > rows[1].attack_kl);
    CHECK(rows[2].attack_kl - rows[1].attack_kl >
          rows[1].attack_kl - rows[0].attack_kl);

    CHECK_THROWS_AS(
        tau_tradeoff_scan(config.model, design, gains, tau, {-1.0}),
        ValidationError);
    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(
        tau_tradeoff_scan(config.model, design, gains, bad, {1.0}),
        ValidationError);
}

TEST_CASE("per-run CSV rows expose every simulated step") {
    ScenarioConfig config = quiet_config();
    config.horizon = 25;
    CHECK(step_csv_header(config) ==
          "run,k,x0,xhat0,y0,z0,u0,du0,kl_stat,chi2_stat,kl_alarm,"
          "chi2_alarm,step_cost");
    const SimulationTrace trace = run_scenario(config, 0);
    std::ostringstream out;
    write_run_csv(out, config, trace, 7);
    const std::string text = out.str();
    std::size_t lines = 0;
    for (const char c : text) {
        lines += c == '\n' ? 1 : 0;
    }
    CHECK(lines == 25);
    CHECK(text.rfind("7,0,", 0) == 0);
    CHECK(text.find("nan") != std::string::npos);

    SimulationTrace truncated = trace;
    truncated.steps.pop_back();
    CHECK_THROWS_AS(write_run_csv(out, config, truncated, 7),
                    ValidationError);
}

TEST_CASE("the manifest records the loop constants it claims") {
    ScenarioConfig config = quiet_config();
    config.runs = 2;
    config.horizon = 120;
    const MonteCarloResult result = run_monte_carlo(config, 0);
    std::ostringstream out;
    write_manifest(out, result);
    const nlohmann::json manifest = nlohmann::json::parse(out.str());
    CHECK(manifest.at("artifact") == "replaysim");
    CHECK(manifest.at("thresholds").at("kl").get<double>() ==
          *config.kl_threshold);
    const nlohmann::json& refs = manifest.at("references");
    CHECK(refs.at("lqg_cost").get<double>() ==
          doctest::Approx(kScalarOptimalCost).epsilon(1e-9));
    CHECK(refs.at("sigma_trace").get<double>() ==
          doctest::Approx(kScalarSigma).epsilon(1e-9));
    CHECK(refs.at("replay_stealthy").get<bool>());
    CHECK(std::abs(refs.at("attack_kl").get<double>()) < 1e-12);

    ScenarioConfig marked = config;
    marked.watermark = {Matrix::Identity(1, 1), 0};
    const MonteCarloResult marked_result = run_monte_carlo(marked, 0);
    std::ostringstream marked_out;
    write_manifest(marked_out, marked_result);
    const nlohmann::json marked_manifest =
        nlohmann::json::parse(marked_out.str());
    CHECK(marked_manifest.at("references").at("attack_kl").get<double>() ==
          doctest::Approx(kScalarWatermarkKl).epsilon(1e-9));
    CHECK(marked_manifest.at("references")
              .at("watermarked_cost")
              .get<double>() ==
          doctest::Approx(kScalarOptimalCost + kScalarWatermarkCost)
              .epsilon(1e-9));

    const std::string hash =
        manifest.at("config_hash").get<std::string>();
    CHECK(hash.rfind("0x", 0) == 0);
    CHECK(hash.size() == 18);
}

TEST_CASE("numbers survive the CSV round trip exactly") {
    const double value = 1.0 / 3.0;
    CHECK(std::stod(format_number(value)) == value);
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
}
