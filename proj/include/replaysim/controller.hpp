#pragma once

#include "replaysim/estimator.hpp"
#include "replaysim/numerics.hpp"
#include "replaysim/plant.hpp"

namespace replaysim {

/// Infinite-horizon LQG design for stage cost x'Fx + u'Gu.
///   R solves R = A'RA + F - A'RB (B'RB + G)^-1 B'RA
///   M = -(B'RB + G)^-1 B'RA, applied as u = M x_est
/// closed_loop_radius is spectral_radius(A + BM); closed_loop_stable is a
/// reported status, not an error: a design for an uncontrollable unstable
/// plant is returned with M = 0 and the flag cleared.
struct LqgDesign {
    Matrix R;
    Matrix M;
    Matrix F;
    Matrix G;
    double closed_loop_radius = 0.0;
    bool closed_loop_stable = false;
};

/// Additive Gaussian control perturbation delta_u ~ N(0, tau), injected
/// from step active_from onward. tau must be PSD (tau = 0 disables it).
struct Watermark {
    Matrix tau;
    long active_from = 0;
};

/// Solves the control Riccati equation and reports closed-loop stability.
/// F must be PSD and G PD. With B = 0 the design degenerates to M = 0 and
/// stability reduces to spectral_radius(A) < 1.
LqgDesign design_lqg(const SystemModel& model, const Matrix& F,
                     const Matrix& G, const SolverOptions& opts = {});

/// Steady-state average stage cost of the estimate-feedback loop:
///   lambda = Tr(R W) + Tr[(A'RA + F - R)(P - beta K C P)]
double lqg_cost(const LqgDesign& design, const SteadyStateGains& gains,
                const SystemModel& model);

/// u = M x_est + delta_u.
Vector control(const LqgDesign& design, const Vector& x_est,
               const Vector& delta_u);

/// Watermark draw for step k: zero before active_from, else N(0, tau).
Vector watermark_sample(const Watermark& wm, long k, Rng& rng);

/// Same, through a prepared sampler for per-step loops.
Vector watermark_sample(const Watermark& wm, long k,
                        const GaussianSampler& sampler, Rng& rng);

/// Average stage cost with the watermark on:
///   lambda + Tr[(G + B'RB) tau]
double watermarked_cost(const LqgDesign& design, const SteadyStateGains& gains,
                        const SystemModel& model, const Watermark& wm);

}  // namespace replaysim
