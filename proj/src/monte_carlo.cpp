#include "replaysim/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "replaysim/errors.hpp"

namespace replaysim {

namespace {

const std::vector<double>& series_of(const RunSummary& run, SeriesKind kind) {
    switch (kind) {
        case SeriesKind::KlStatistic:
            return run.kl_series;
        case SeriesKind::Chi2Statistic:
            return run.chi2_series;
        case SeriesKind::ErrorSq:
            return run.error_sq_series;
        case SeriesKind::StepCost:
        default:
            return run.cost_series;
    }
}

std::vector<RunSummary> run_all(const ScenarioConfig& config, int threads,
                                const RecordOptions& options) {
    const int total = config.runs;
    std::vector<RunSummary> out(static_cast<std::size_t>(total));
    int workers = threads > 0
                      ? threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, total));

    if (workers == 1) {
        for (int run = 0; run < total; ++run) {
            out[static_cast<std::size_t>(run)] =
                std::move(run_scenario(config, run, options).summary);
        }
        return out;
    }

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        try {
            for (int run = next.fetch_add(1); run < total;
                 run = next.fetch_add(1)) {
                out[static_cast<std::size_t>(run)] =
                    std::move(run_scenario(config, run, options).summary);
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) {
        pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

}  // namespace

double empirical_quantile(std::vector<double> values, double q) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return std::isnan(v); }),
                 values.end());
    if (values.empty()) {
        throw InsufficientSamples("quantile of an empty sample");
    }
    if (!(q >= 0.0) || !(q <= 1.0)) {
        throw ValidationError("quantile order must lie in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto index = static_cast<long>(std::ceil(q * n)) - 1;
    index = std::max<long>(0, std::min<long>(index,
                                             static_cast<long>(n) - 1));
    return values[static_cast<std::size_t>(index)];
}

CalibratedThresholds calibrate_thresholds(const ScenarioConfig& config,
                                          int threads) {
    validate_scenario(config);
    ScenarioConfig null_config = without_attack(config);
    null_config.kl_threshold.reset();
    null_config.seed = Rng(config.seed).split("calibration").key();
    const long warmup = warmup_steps(null_config);
    if (warmup >= null_config.horizon) {
        throw InsufficientSamples(
            "calibration needs post-warmup steps; extend the horizon past "
            "max(window_capacity, 50)");
    }
    const std::vector<RunSummary> runs =
        run_all(null_config, threads, RecordOptions{false, true});

    std::vector<double> kl_pool;
    std::vector<double> chi2_pool;
    const std::size_t per_run =
        static_cast<std::size_t>(null_config.horizon - warmup);
    kl_pool.reserve(per_run * runs.size());
    chi2_pool.reserve(per_run * runs.size());
    for (const RunSummary& run : runs) {
        for (long k = warmup; k < null_config.horizon; ++k) {
            kl_pool.push_back(run.kl_series[static_cast<std::size_t>(k)]);
            chi2_pool.push_back(run.chi2_series[static_cast<std::size_t>(k)]);
        }
    }
    CalibratedThresholds thresholds;
    const double q = 1.0 - config.chi2_significance;
    thresholds.kl = empirical_quantile(std::move(kl_pool), q);
    thresholds.chi2 = empirical_quantile(std::move(chi2_pool), q);
    return thresholds;
}

MonteCarloResult run_monte_carlo(const ScenarioConfig& config, int threads) {
    validate_scenario(config);
    MonteCarloResult result;
    result.config = config;
    result.warmup = warmup_steps(config);
    if (!config.kl_threshold.has_value()) {
        const CalibratedThresholds thresholds =
            calibrate_thresholds(config, threads);
        result.config.kl_threshold = thresholds.kl;
        result.chi2_empirical_threshold = thresholds.chi2;
    }
    result.kl_threshold = *result.config.kl_threshold;
    result.runs = run_all(result.config, threads, RecordOptions{false, true});
    return result;
}

std::vector<double> ensemble_mean(const MonteCarloResult& result,
                                  SeriesKind kind) {
    if (result.runs.empty()) {
        throw InsufficientSamples("ensemble of zero runs");
    }
    const std::size_t horizon = series_of(result.runs.front(), kind).size();
    std::vector<double> out(horizon,
                            std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < horizon; ++k) {
        double sum = 0.0;
        long count = 0;
        for (const RunSummary& run : result.runs) {
            const double v = series_of(run, kind)[k];
            if (!std::isnan(v)) {
                sum += v;
                ++count;
            }
        }
        if (count > 0) {
            out[k] = sum / static_cast<double>(count);
        }
    }
    return out;
}

std::vector<double> ensemble_quantile(const MonteCarloResult& result,
                                      SeriesKind kind, double q) {
    if (result.runs.empty()) {
        throw InsufficientSamples("ensemble of zero runs");
    }
    const std::size_t horizon = series_of(result.runs.front(), kind).size();
    std::vector<double> out(horizon,
                            std::numeric_limits<double>::quiet_NaN());
    std::vector<double> column;
    column.reserve(result.runs.size());
    for (std::size_t k = 0; k < horizon; ++k) {
        column.clear();
        for (const RunSummary& run : result.runs) {
            const double v = series_of(run, kind)[k];
            if (!std::isnan(v)) {
                column.push_back(v);
            }
        }
        if (!column.empty()) {
            out[k] = empirical_quantile(column, q);
        }
    }
    return out;
}

std::vector<double> estimation_error_trace_series(
    const MonteCarloResult& result) {
    if (result.runs.size() < 2) {
        throw InsufficientSamples(
            "ensemble error covariance needs at least 2 runs");
    }
    return ensemble_mean(result, SeriesKind::ErrorSq);
}

DelayDistribution delay_distribution(const MonteCarloResult& result,
                                     SeriesKind kind, double threshold) {
    const bool attacked =
        result.config.attack.mode == AttackMode::Replay;
    const long attack_start = result.config.attack.attack_start;
    const long horizon = result.config.horizon;
    DelayDistribution distribution;
    distribution.delays.reserve(result.runs.size());
    for (const RunSummary& run : result.runs) {
        const std::vector<double>& series = series_of(run, kind);
        std::optional<long> delay;
        for (long k = 0; k < horizon; ++k) {
            const double v = series[static_cast<std::size_t>(k)];
            if (std::isnan(v) || !(v > threshold)) {
                continue;
            }
            if (attacked && k >= attack_start) {
                delay = k - attack_start;
                break;
            }
            if (k >= result.warmup) {
                ++distribution.false_alarms;
            }
        }
        distribution.detected += delay.has_value() ? 1 : 0;
        distribution.delays.push_back(delay);
    }
    const long per_run_opportunities =
        attacked ? std::max<long>(0, attack_start - result.warmup)
                 : std::max<long>(0, horizon - result.warmup);
    distribution.false_alarm_opportunities =
        per_run_opportunities * static_cast<long>(result.runs.size());
    return distribution;
}

std::optional<double> median_delay(const DelayDistribution& distribution) {
    if (distribution.delays.empty()) {
        return std::nullopt;
    }
    std::vector<double> values;
    values.reserve(distribution.delays.size());
    for (const std::optional<long>& delay : distribution.delays) {
        values.push_back(delay.has_value()
                             ? static_cast<double>(*delay)
                             : std::numeric_limits<double>::infinity());
    }
    std::sort(values.begin(), values.end());
    const double median = values[(values.size() - 1) / 2];
    if (std::isinf(median)) {
        return std::nullopt;
    }
    return median;
}

}  // namespace replaysim
