#pragma once

#include <vector>

#include "replaysim/controller.hpp"
#include "replaysim/estimator.hpp"
#include "replaysim/numerics.hpp"
#include "replaysim/plant.hpp"

namespace replaysim {

enum class AttackMode { None, Replay };

/// Replay schedule: measurements are recorded on [record_from, attack_start)
/// and substituted for the live feed from attack_start onward, shifted back
/// by time_shift = attack_start - record_from steps. With wrap the buffer
/// repeats cyclically; without it the last recorded value holds.
struct AttackSchedule {
    AttackMode mode = AttackMode::None;
    long record_from = 0;
    long attack_start = 0;
    bool wrap = true;

    long time_shift() const { return attack_start - record_from; }
};

/// Throws ValidationError unless record_from >= 0 and, for replay mode,
/// record_from < attack_start.
void validate_schedule(const AttackSchedule& schedule);

/// Man-in-the-middle recorder/replayer. Records raw measurements y(k),
/// not estimates: the replayed feed must look like a genuine sensor
/// stream to the filter downstream.
class ReplayAttacker {
public:
    explicit ReplayAttacker(AttackSchedule schedule);

    /// Offers the step-k measurement for recording. Steps must be offered
    /// in strictly increasing order; re-offering a step is a usage error
    /// (std::logic_error). Only [record_from, attack_start) is kept.
    void observe(long k, const Vector& y);

    /// Delivered measurement for step k: y itself before attack_start,
    /// the replayed recording afterwards. Throws EmptyBuffer if the attack
    /// is active but nothing was recorded.
    Vector intercept(long k, const Vector& y) const;

    const AttackSchedule& schedule() const { return schedule_; }
    const std::vector<Vector>& buffer() const { return buffer_; }

private:
    AttackSchedule schedule_;
    std::vector<Vector> buffer_;
    long last_observed_ = -1;
};

/// Closed-loop operator the attacked filter obeys between arrivals of
/// replayed data: Lambda = (A + B M)(I - beta K C).
Matrix virtual_gain_matrix(const SystemModel& model, const LqgDesign& design,
                           const SteadyStateGains& gains);

/// A replay is stealthy exactly when Lambda is stable: the filter then
/// forgets the state mismatch geometrically and the replayed feed remains
/// statistically plausible.
enum class Stealthiness { Stealthy, Detectable };

Stealthiness stealthiness_classification(const Matrix& lambda_matrix);

}  // namespace replaysim
