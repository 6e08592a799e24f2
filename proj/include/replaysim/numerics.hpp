#pragma once

#include <Eigen/Dense>

#include "replaysim/rng.hpp"

namespace replaysim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Stopping rule shared by the fixed-point solvers: iterate until the
/// max-abs difference between successive iterates drops below tolerance,
/// giving up after max_iterations.
struct SolverOptions {
    double tolerance = 1e-10;
    long max_iterations = 100000;
};

/// Largest eigenvalue magnitude of a square real matrix.
/// Exact for defective/nilpotent matrices as well (full eigen-decomposition,
/// not power iteration).
double spectral_radius(const Matrix& m);

/// Solves R = A'RA + F - A'RB (B'RB + G)^-1 B'RA for the stabilizing
/// positive semi-definite R, by fixed-point iteration from R0 = F.
/// F must be PSD and G PD; B may be zero (the quadratic term drops out).
Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& F,
                  const Matrix& G, const SolverOptions& opts = {});

/// Solves X = L X L' + Q by fixed-point iteration from X0 = Q.
/// Requires spectral_radius(L) < 1 and symmetric Q.
Matrix solve_discrete_lyapunov(const Matrix& L, const Matrix& Q,
                               const SolverOptions& opts = {});

/// Precomputed factor S with S S' = cov, for repeated Gaussian draws.
///
/// The factorization is eigenvalue-based and tolerant of slightly
/// indefinite inputs: eigenvalues in [-1e-10 * ||cov||, 0) are clipped to
/// zero (||cov|| = spectral norm); anything more negative raises NotPSD.
class GaussianSampler {
public:
    GaussianSampler(Vector mean, const Matrix& cov);

    Vector draw(Rng& rng) const;
    Eigen::Index dim() const { return mean_.size(); }

private:
    Vector mean_;
    Matrix transform_;
};

/// One draw from N(mean, cov). For per-step simulation loops prefer a
/// persistent GaussianSampler; this convenience form refactorizes cov.
Vector sample_gaussian(const Vector& mean, const Matrix& cov, Rng& rng);

/// (m + m') / 2; the solvers apply this each sweep to stop asymmetry drift.
Matrix symmetrize(const Matrix& m);

/// True when max |m - m'| entry is within atol.
bool is_symmetric(const Matrix& m, double atol = 1e-9);

}  // namespace replaysim
