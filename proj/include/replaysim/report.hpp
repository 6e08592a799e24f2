#pragma once

#include <iosfwd>
#include <string>

#include "replaysim/monte_carlo.hpp"

namespace replaysim {

/// Shortest exact decimal rendering (%.17g): repeated invocations with the
/// same seed produce byte-identical files.
std::string format_number(double value);

/// Header of the per-step CSV. Vector-valued columns are expanded with
/// index suffixes: run,k,x0..,xhat0..,y0..,z0..,u0..,du0..,kl_stat,
/// chi2_stat,kl_alarm,chi2_alarm,step_cost.
std::string step_csv_header(const ScenarioConfig& config);

/// One CSV row per step of one run, in header order; booleans as 0/1,
/// undefined statistics as nan. The trace must have been recorded with
/// keep_steps on.
void write_run_csv(std::ostream& out, const ScenarioConfig& config,
                   const SimulationTrace& trace, int run_index);

/// Aggregate series keyed by k: mean and median of both detector
/// statistics, the across-run mean squared estimation error, and the mean
/// stage cost.
void write_aggregate_csv(std::ostream& out, const MonteCarloResult& result);

/// JSON manifest for reproducibility: library version, resolved config and
/// its hash, warmup, applied thresholds, and closed-form reference values
/// of the configured loop (steady cost, watermarked cost, innovation
/// covariance trace, replay spectral radius, theoretical attack
/// divergence when the replay is stealthy).
void write_manifest(std::ostream& out, const MonteCarloResult& result);

}  // namespace replaysim
