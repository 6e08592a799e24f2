#include "replaysim/attacker.hpp"

#include <stdexcept>
#include <string>
#include <utility>

#include "replaysim/errors.hpp"

namespace replaysim {

void validate_schedule(const AttackSchedule& schedule) {
    if (schedule.record_from < 0) {
        throw ValidationError("record_from must be non-negative");
    }
    if (schedule.mode == AttackMode::Replay &&
        schedule.record_from >= schedule.attack_start) {
        throw ValidationError("record_from must precede attack_start");
    }
}

ReplayAttacker::ReplayAttacker(AttackSchedule schedule)
    : schedule_(std::move(schedule)) {
    validate_schedule(schedule_);
}

void ReplayAttacker::observe(long k, const Vector& y) {
    if (k <= last_observed_) {
        throw std::logic_error("observe() steps must be strictly increasing; "
                               "step " + std::to_string(k) +
                               " after step " + std::to_string(last_observed_));
    }
    last_observed_ = k;
    if (schedule_.mode != AttackMode::Replay) return;
    if (k >= schedule_.record_from && k < schedule_.attack_start) {
        buffer_.push_back(y);
    }
}

Vector ReplayAttacker::intercept(long k, const Vector& y) const {
    if (schedule_.mode != AttackMode::Replay || k < schedule_.attack_start) {
        return y;
    }
    if (buffer_.empty()) {
        throw EmptyBuffer("replay requested with an empty recording");
    }
    const long len = static_cast<long>(buffer_.size());
    const long offset = k - schedule_.attack_start;
    const long idx = schedule_.wrap ? offset % len : std::min(offset, len - 1);
    return buffer_[static_cast<std::size_t>(idx)];
}

Matrix virtual_gain_matrix(const SystemModel& model, const LqgDesign& design,
                           const SteadyStateGains& gains) {
    const auto n = model.n();
    Matrix closed = model.A + model.B * design.M;
    return closed *
           (Matrix::Identity(n, n) - gains.beta * gains.K * model.C);
}

Stealthiness stealthiness_classification(const Matrix& lambda_matrix) {
    return spectral_radius(lambda_matrix) < 1.0 ? Stealthiness::Stealthy
                                                : Stealthiness::Detectable;
}

}  // namespace replaysim
