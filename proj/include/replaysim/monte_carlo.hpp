#pragma once

#include <optional>
#include <vector>

#include "replaysim/simulation.hpp"

namespace replaysim {

/// Empirical (1 - chi2_significance) quantiles of both detector statistics
/// under the no-attack variant of a scenario: the matched operating point
/// for delay comparisons.
struct CalibratedThresholds {
    double kl = 0.0;
    double chi2 = 0.0;
};

/// Runs the no-attack variant of config (same plant, watermark and window,
/// attack disabled) on an independent seed derived from config.seed, pools
/// the post-warmup statistics across all runs and steps, and returns their
/// empirical quantiles. threads = 0 picks the hardware concurrency.
CalibratedThresholds calibrate_thresholds(const ScenarioConfig& config,
                                          int threads = 0);

struct MonteCarloResult {
    /// Input config with kl_threshold resolved (calibrated when it was
    /// empty), exactly as the runs saw it.
    ScenarioConfig config;
    double kl_threshold = 0.0;
    /// Set when calibration ran: the whiteness-statistic threshold with the
    /// same empirical false-alarm rate as the divergence threshold.
    std::optional<double> chi2_empirical_threshold;
    long warmup = 0;
    std::vector<RunSummary> runs;  // index = run id
};

/// Executes config.runs independent simulations and collects their
/// summaries. Results are bitwise identical for any thread count and any
/// scheduling order. Calibrates the divergence threshold first when the
/// config asks for it.
MonteCarloResult run_monte_carlo(const ScenarioConfig& config,
                                 int threads = 0);

enum class SeriesKind { KlStatistic, Chi2Statistic, ErrorSq, StepCost };

/// Per-step mean across runs, ignoring NaN entries (statistics are NaN
/// while the detector window is still filling); NaN where no run has a
/// value.
std::vector<double> ensemble_mean(const MonteCarloResult& result,
                                  SeriesKind kind);

/// Per-step empirical quantile across runs, q in [0, 1]; NaN handling as
/// in ensemble_mean.
std::vector<double> ensemble_quantile(const MonteCarloResult& result,
                                      SeriesKind kind, double q);

/// Per-step trace of the ensemble estimation-error covariance, i.e. the
/// across-run mean of |x - x_est|^2 (the zero-mean estimator: the error is
/// zero-mean by construction). Throws InsufficientSamples when runs < 2.
std::vector<double> estimation_error_trace_series(
    const MonteCarloResult& result);

/// Threshold-crossing delays for one statistic, recomputed from the stored
/// per-run series so any operating point can be examined after the fact.
struct DelayDistribution {
    /// Per run: steps from attack_start to the first crossing at or after
    /// it; empty when the run never crosses.
    std::vector<std::optional<long>> delays;
    long detected = 0;
    /// Post-warmup crossings that cannot be detections (before onset under
    /// replay, anywhere under no attack), pooled across runs.
    long false_alarms = 0;
    long false_alarm_opportunities = 0;
};

DelayDistribution delay_distribution(const MonteCarloResult& result,
                                     SeriesKind kind, double threshold);

/// Lower median with undetected runs counted as +infinity; empty when the
/// median itself lands on an undetected run.
std::optional<double> median_delay(const DelayDistribution& distribution);

/// Order statistic at ceil(q * n): the value at least a fraction q of the
/// sample sits at or below. NaN entries are dropped first.
double empirical_quantile(std::vector<double> values, double q);

}  // namespace replaysim
