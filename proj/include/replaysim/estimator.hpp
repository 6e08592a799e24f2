#pragma once

#include <utility>

#include "replaysim/numerics.hpp"
#include "replaysim/plant.hpp"

namespace replaysim {

/// Steady-state filter quantities for a measurement channel that delivers
/// packets with probability beta:
///   P     steady prior error covariance, fixed point of
///         P <- A (P - beta K C P) A' + W with K = P C' (C P C' + V)^-1
///   K     steady innovation gain at that fixed point
///   Sigma = C P C' + V, the innovation covariance
struct SteadyStateGains {
    Matrix P;
    Matrix K;
    Matrix Sigma;
    double beta = 1.0;
};

/// How the arrival probability enters the estimate update.
///   Fixed:     x_est = x_pred + beta * K * z every step (the averaged,
///              constant-coefficient form; the default).
///   Bernoulli: x_est = x_pred + K * z when the packet arrived, else
///              x_est = x_pred. Matches the stochastic arrival model that
///              the steady covariance recursion describes exactly.
enum class BetaMode { Fixed, Bernoulli };

struct FilterState {
    Vector x_pred;
    Vector x_est;
    long k = 0;
};

/// Zeroed filter state (x_pred(0) = x_est(0) = 0).
FilterState initial_filter_state(const SystemModel& model);

/// Iterates the dropout Riccati recursion from P0 = W.
/// beta must lie in (0, 1]. With C = 0 the gain collapses to zero and P
/// solves the plain Lyapunov equation.
SteadyStateGains compute_steady_gains(const SystemModel& model, double beta,
                                      const SolverOptions& opts = {});

/// Time update: x_pred' = A x_est + B u, step count advances.
FilterState predict(const FilterState& state, const SystemModel& model,
                    const Vector& u);

/// Measurement update. Returns the updated state and the innovation
/// z = y - C x_pred. `arrived` is consulted only in Bernoulli mode.
std::pair<FilterState, Vector> update(const FilterState& state,
                                      const SystemModel& model,
                                      const SteadyStateGains& gains,
                                      BetaMode mode, bool arrived,
                                      const Vector& y);

}  // namespace replaysim
