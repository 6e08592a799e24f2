#pragma once

#include <optional>
#include <vector>

#include "replaysim/scenario.hpp"

namespace replaysim {

/// One simulated step. Detector statistics are NaN while the window is
/// still too small to evaluate them; alarms are false there.
struct StepRecord {
    long k = 0;
    Vector x;
    Vector x_est;
    Vector y_delivered;
    Vector z;
    Vector u;
    Vector du;
    double kl_stat = 0.0;
    double chi2_stat = 0.0;
    bool kl_alarm = false;
    bool chi2_alarm = false;
    double step_cost = 0.0;
};

/// Per-run reductions. The per-step series are what the Monte Carlo layer
/// aggregates; the scalars summarize the run.
struct RunSummary {
    double average_cost = 0.0;
    /// First alarm at or after attack_start, minus attack_start; empty when
    /// never detected or when the scenario has no attack.
    std::optional<long> kl_delay;
    std::optional<long> chi2_delay;
    /// Post-warmup alarms that cannot be detections: before attack_start
    /// under replay, anywhere under no attack.
    long kl_false_alarms = 0;
    long chi2_false_alarms = 0;
    std::vector<double> kl_series;
    std::vector<double> chi2_series;
    std::vector<double> error_sq_series;  // |x - x_est|^2 after the update
    std::vector<double> cost_series;
};

struct SimulationTrace {
    std::vector<StepRecord> steps;  // horizon entries unless keep_steps off
    RunSummary summary;
};

/// What run_scenario retains. Long-horizon probes that only need the
/// summary scalars can drop both to keep memory flat.
struct RecordOptions {
    bool keep_steps = true;
    bool keep_series = true;
};

/// Steps excluded from calibration, false-alarm tallies and settled-value
/// statistics: max(window_capacity, 50).
long warmup_steps(const ScenarioConfig& config);

/// Executes the closed loop for config.horizon steps.
///
/// Step 0 initializes: x(0) ~ N(0, P) with P the steady prior covariance
/// (the loop starts statistically settled), the filter prior at zero, and
/// u(0) = du(0) = 0; the first measurement is filtered immediately.
/// Each later step k applies, in order: the watermark draw du(k), the
/// control u(k) = M x_est(k-1) + du(k), the plant transition to x(k), the
/// measurement, the attacker's observe/intercept, the filter predict and
/// update, and both detector windows.
///
/// All randomness derives from (config.seed, run_index) through named
/// substreams, so traces are byte-identical across repeated invocations
/// and any execution order. When kl_threshold is unresolved the divergence
/// statistic is recorded but never alarms.
SimulationTrace run_scenario(const ScenarioConfig& config, int run_index,
                             const RecordOptions& options = {});

/// Trade-off table row for one watermark scale: the cost penalty
/// Trace[(G + B'RB) tau] against detectability Trace(Sigma^-1 2 C Omega C')
/// and the steady divergence it buys.
struct TauTradeoffRow {
    double scale = 0.0;
    double cost_penalty = 0.0;
    double detectability = 0.0;
    double attack_kl = 0.0;
    double attack_kl_unhalved = 0.0;
};

/// Evaluates the rows for tau = scale * tau_base, sorted by scale.
/// Scales must be nonnegative; tau_base must be symmetric PSD.
std::vector<TauTradeoffRow> tau_tradeoff_scan(const SystemModel& model,
                                              const LqgDesign& design,
                                              const SteadyStateGains& gains,
                                              const Matrix& tau_base,
                                              const std::vector<double>& scales);

}  // namespace replaysim
