#pragma once

#include "replaysim/numerics.hpp"
#include "replaysim/rng.hpp"

namespace replaysim {

/// Discrete-time linear plant
///     x(k+1) = A x(k) + B u(k) + w(k),   w ~ N(0, W)
///     y(k)   = C x(k) + v(k),            v ~ N(0, V)
/// Dimensions: A is n x n, B is n x p, C is m x n, W is n x n PSD,
/// V is m x m positive definite.
struct SystemModel {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix W;
    Matrix V;

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index p() const { return B.cols(); }
    Eigen::Index m() const { return C.rows(); }
};

/// Checks shapes, symmetry/definiteness of the noise covariances, and
/// finiteness of every entry. Throws ValidationError naming the offending
/// field.
void validate_model(const SystemModel& model);

struct PlantState {
    Vector x;
    long k = 0;
};

/// Advances the plant one step with fresh process noise.
PlantState plant_step(const SystemModel& model, const PlantState& state,
                      const Vector& u, Rng& rng);

/// Same, drawing w through a prepared sampler (per-step loops should reuse
/// one sampler instead of refactorizing W every call).
PlantState plant_step(const SystemModel& model, const PlantState& state,
                      const Vector& u, const GaussianSampler& process_noise,
                      Rng& rng);

/// Measures the current state with fresh measurement noise.
Vector measure(const SystemModel& model, const PlantState& state, Rng& rng);

Vector measure(const SystemModel& model, const PlantState& state,
               const GaussianSampler& measurement_noise, Rng& rng);

/// Scalar default plant: A = B = C = W = V = [1]. Marginally stable open
/// loop, so a broken feedback path shows up as unbounded drift.
SystemModel scalar_default_model();

/// Two-state example plant: A = B = C = W = V = I2. Same per-axis dynamics
/// as the scalar default, used to exercise matrix-valued watermarks and
/// two-dimensional detector statistics.
SystemModel two_state_example_model();

}  // namespace replaysim
