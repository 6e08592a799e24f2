#include "replaysim/detector.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <string>

#include "replaysim/errors.hpp"

namespace replaysim {

namespace {

Eigen::LLT<Matrix> cholesky_or_throw(const Matrix& cov, const char* what) {
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if (!is_symmetric(cov, 1e-9 * scale)) {
        throw NotPSD(std::string(what) + " must be symmetric");
    }
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw Singular(std::string(what) + " is not positive definite");
    }
    return llt;
}

double log_det_from_llt(const Eigen::LLT<Matrix>& llt, const char* what) {
    const Matrix& factor = llt.matrixLLT();
    double half_log_det = 0.0;
    for (Eigen::Index i = 0; i < factor.rows(); ++i) {
        half_log_det += std::log(factor(i, i));
    }
    if (!std::isfinite(half_log_det)) {
        throw Singular(std::string(what) + " has a vanishing determinant");
    }
    return 2.0 * half_log_det;
}

}  // namespace

InnovationWindow::InnovationWindow(int capacity) : capacity_(capacity) {
    if (capacity <= 0) {
        throw ValidationError("window capacity must be positive");
    }
    ring_.resize(static_cast<std::size_t>(capacity));
}

void InnovationWindow::push(long k, const Vector& z) {
    if (dimension_ == 0) {
        if (z.size() == 0) {
            throw DimensionMismatch("innovation vector must be non-empty");
        }
        dimension_ = static_cast<int>(z.size());
        sum_outer_ = Matrix::Zero(dimension_, dimension_);
    } else if (z.size() != dimension_) {
        throw DimensionMismatch("innovation dimension changed mid-stream");
    }
    if (count_ == capacity_) {
        const Vector& oldest = ring_[static_cast<std::size_t>(head_)];
        sum_outer_.noalias() -= oldest * oldest.transpose();
    } else {
        ++count_;
    }
    ring_[static_cast<std::size_t>(head_)] = z;
    sum_outer_.noalias() += z * z.transpose();
    head_ = (head_ + 1) % capacity_;
    last_step_ = k;
    if (++since_refresh_ >= kRefreshInterval) {
        refresh();
    }
}

long InnovationWindow::last_step() const {
    if (count_ == 0) {
        throw EmptyBuffer("innovation window is empty");
    }
    return last_step_;
}

const Matrix& InnovationWindow::sum_outer() const {
    if (count_ == 0) {
        throw EmptyBuffer("innovation window is empty");
    }
    return sum_outer_;
}

void InnovationWindow::refresh() {
    sum_outer_.setZero();
    const int oldest = (head_ - count_ + capacity_) % capacity_;
    for (int j = 0; j < count_; ++j) {
        const Vector& z = ring_[static_cast<std::size_t>((oldest + j) % capacity_)];
        sum_outer_.noalias() += z * z.transpose();
    }
    since_refresh_ = 0;
}

double kl_gaussian_zero_mean(const Matrix& cov_tilde, const Matrix& cov) {
    if (cov.rows() == 0 || cov.rows() != cov.cols() ||
        cov_tilde.rows() != cov_tilde.cols() || cov_tilde.rows() != cov.rows()) {
        throw DimensionMismatch(
            "covariances must be square with matching dimensions");
    }
    const auto m = static_cast<double>(cov.rows());
    const Eigen::LLT<Matrix> reference = cholesky_or_throw(cov, "reference covariance");
    const Eigen::LLT<Matrix> compared = cholesky_or_throw(cov_tilde, "compared covariance");
    const double trace_term = reference.solve(cov_tilde).trace();
    const double log_det_gap = log_det_from_llt(reference, "reference covariance") -
                               log_det_from_llt(compared, "compared covariance");
    return 0.5 * (trace_term - m + log_det_gap);
}

Matrix compute_omega(const Matrix& Lambda, const Matrix& B, const Matrix& tau,
                     const SolverOptions& opts) {
    if (Lambda.rows() != Lambda.cols() || B.rows() != Lambda.rows() ||
        tau.rows() != tau.cols() || tau.rows() != B.cols()) {
        throw DimensionMismatch(
            "compute_omega needs Lambda n x n, B n x p and tau p x p");
    }
    const double scale = std::max(1.0, tau.cwiseAbs().maxCoeff());
    if (!is_symmetric(tau, 1e-9 * scale)) {
        throw NotPSD("tau must be symmetric");
    }
    return solve_discrete_lyapunov(Lambda, symmetrize(B * tau * B.transpose()),
                                   opts);
}

namespace {

Matrix attacked_innovation_covariance(const SteadyStateGains& gains,
                                      const SystemModel& model,
                                      const Matrix& Omega) {
    if (Omega.rows() != model.n() || Omega.cols() != model.n()) {
        throw DimensionMismatch("Omega must be n x n");
    }
    return symmetrize(gains.Sigma +
                      2.0 * model.C * Omega * model.C.transpose());
}

}  // namespace

double theoretical_attack_kl(const SteadyStateGains& gains,
                             const SystemModel& model, const Matrix& Omega) {
    return kl_gaussian_zero_mean(
        attacked_innovation_covariance(gains, model, Omega), gains.Sigma);
}

double theoretical_attack_kl_unhalved(const SteadyStateGains& gains,
                                      const SystemModel& model,
                                      const Matrix& Omega) {
    const auto m = static_cast<double>(gains.Sigma.rows());
    return 2.0 * theoretical_attack_kl(gains, model, Omega) + (2.0 - m);
}

Matrix empirical_covariance(const InnovationWindow& window) {
    const int m = window.dimension();
    if (m == 0 || window.count() < m + 1) {
        throw InsufficientSamples(
            "empirical covariance needs at least dimension + 1 samples");
    }
    return symmetrize(window.sum_outer() / window.count());
}

DetectorVerdict kl_detect(const InnovationWindow& window,
                          const SteadyStateGains& gains, double threshold) {
    const auto m = gains.Sigma.rows();
    if (window.dimension() != 0 && window.dimension() != m) {
        throw DimensionMismatch("window dimension does not match Sigma");
    }
    if (window.count() < m + 1) {
        throw InsufficientSamples(
            "divergence detector needs at least m + 1 innovations");
    }
    Matrix estimate = empirical_covariance(window);
    estimate.diagonal().array() += 1e-9 * gains.Sigma.trace() / static_cast<double>(m);
    DetectorVerdict verdict;
    verdict.statistic = kl_gaussian_zero_mean(estimate, gains.Sigma);
    verdict.threshold = threshold;
    verdict.alarm = verdict.statistic > threshold;
    verdict.k = window.last_step();
    return verdict;
}

double chi2_threshold(int dof, double significance) {
    if (dof < 1) {
        throw ValidationError("degrees of freedom must be positive");
    }
    if (!(significance > 0.0) || !(significance < 1.0)) {
        throw ValidationError("significance must lie in (0, 1)");
    }
    const boost::math::chi_squared law(static_cast<double>(dof));
    return boost::math::quantile(law, 1.0 - significance);
}

DetectorVerdict chi2_detect(const InnovationWindow& window,
                            const SteadyStateGains& gains,
                            double significance) {
    if (window.count() == 0) {
        throw InsufficientSamples(
            "whiteness statistic needs a nonempty window");
    }
    const auto m = gains.Sigma.rows();
    if (window.dimension() != m) {
        throw DimensionMismatch("window dimension does not match Sigma");
    }
    const Eigen::LLT<Matrix> llt =
        cholesky_or_throw(gains.Sigma, "innovation covariance");
    DetectorVerdict verdict;
    verdict.statistic = llt.solve(window.sum_outer()).trace();
    verdict.threshold =
        chi2_threshold(static_cast<int>(m) * window.count(), significance);
    verdict.alarm = verdict.statistic > verdict.threshold;
    verdict.k = window.last_step();
    return verdict;
}

DetectionDelay detection_delay(const std::vector<DetectorVerdict>& verdicts,
                               long attack_start) {
    DetectionDelay result;
    for (const DetectorVerdict& verdict : verdicts) {
        if (!verdict.alarm) {
            continue;
        }
        if (verdict.k < attack_start) {
            ++result.pre_attack_alarms;
        } else if (!result.delay.has_value()) {
            result.delay = verdict.k - attack_start;
        }
    }
    return result;
}

}  // namespace replaysim
