#pragma once

#include <optional>
#include <vector>

#include "replaysim/estimator.hpp"
#include "replaysim/numerics.hpp"
#include "replaysim/plant.hpp"

namespace replaysim {

/// Fixed-capacity ring of innovation vectors. Maintains a running sum of
/// outer products so the empirical second moment is available in O(m^2)
/// per push; the sum is recomputed from scratch periodically to wash out
/// floating-point drift from the add/subtract updates.
class InnovationWindow {
public:
    explicit InnovationWindow(int capacity);

    /// Appends z observed at step k, evicting the oldest entry when full.
    /// The vector dimension is fixed by the first push.
    void push(long k, const Vector& z);

    int capacity() const noexcept { return capacity_; }
    int count() const noexcept { return count_; }
    /// 0 until the first push.
    int dimension() const noexcept { return dimension_; }
    /// Step index of the newest entry. Throws EmptyBuffer when empty.
    long last_step() const;
    /// Sum of z z' over the current contents. Throws EmptyBuffer when empty.
    const Matrix& sum_outer() const;

private:
    void refresh();

    int capacity_ = 0;
    int dimension_ = 0;
    int count_ = 0;
    int head_ = 0;
    long last_step_ = 0;
    long since_refresh_ = 0;
    std::vector<Vector> ring_;
    Matrix sum_outer_;

    static constexpr long kRefreshInterval = 8192;
};

struct DetectorVerdict {
    double statistic = 0.0;
    double threshold = 0.0;
    bool alarm = false;
    long k = 0;
};

/// Divergence between two zero-mean Gaussians N(0, cov_tilde) and N(0, cov):
///   1/2 [ trace(cov^-1 cov_tilde) - m + ln det(cov) - ln det(cov_tilde) ].
/// Nonnegative, zero iff the covariances coincide, and asymmetric in its
/// arguments. Throws Singular when either matrix fails its Cholesky
/// factorization or a log-determinant is not finite.
double kl_gaussian_zero_mean(const Matrix& cov_tilde, const Matrix& cov);

/// Steady mismatch covariance injected by a watermark with covariance tau
/// into a loop whose replay dynamics are governed by Lambda:
///   Omega = Lambda Omega Lambda' + B tau B' = sum_j Lambda^j B tau B' Lambda^j'.
/// Throws UnstableOperator when rho(Lambda) >= 1.
Matrix compute_omega(const Matrix& Lambda, const Matrix& B, const Matrix& tau,
                     const SolverOptions& opts = {});

/// Steady-state divergence of the replayed innovation stream from the
/// nominal one when a watermark is active: with phi = Sigma + 2 C Omega C',
/// returns kl_gaussian_zero_mean(phi, Sigma).
double theoretical_attack_kl(const SteadyStateGains& gains,
                             const SystemModel& model, const Matrix& Omega);

/// Un-halved companion statistic reported alongside the divergence:
///   2 - m + trace(Sigma^-1 2 C Omega C') + ln det Sigma - ln det phi,
/// which equals 2 * theoretical_attack_kl + (2 - m).
double theoretical_attack_kl_unhalved(const SteadyStateGains& gains,
                                      const SystemModel& model,
                                      const Matrix& Omega);

/// Zero-mean second-moment estimator (1/count) sum z z'. Innovations are
/// zero-mean under both hypotheses, so no mean is subtracted. Requires
/// count >= dimension + 1 samples; throws InsufficientSamples otherwise.
Matrix empirical_covariance(const InnovationWindow& window);

/// Windowed divergence detector: statistic =
/// kl_gaussian_zero_mean(empirical_covariance + eps I, Sigma) with the
/// regularizer eps = 1e-9 trace(Sigma) / m; alarm iff statistic > threshold.
DetectorVerdict kl_detect(const InnovationWindow& window,
                          const SteadyStateGains& gains, double threshold);

/// (1 - significance) quantile of the chi-square law with dof degrees of
/// freedom. significance must lie in (0, 1).
double chi2_threshold(int dof, double significance);

/// Whiteness baseline: statistic g = sum over the window of z' Sigma^-1 z,
/// compared against the chi-square quantile with m * count degrees of
/// freedom at the given significance.
DetectorVerdict chi2_detect(const InnovationWindow& window,
                            const SteadyStateGains& gains, double significance);

/// Delay from attack onset to the first alarm at or after it. Alarms
/// strictly before attack_start never count as detections; they are
/// tallied as pre_attack_alarms.
struct DetectionDelay {
    std::optional<long> delay;
    long pre_attack_alarms = 0;
};

/// Verdicts must be ordered by step index k.
DetectionDelay detection_delay(const std::vector<DetectorVerdict>& verdicts,
                               long attack_start);

}  // namespace replaysim
