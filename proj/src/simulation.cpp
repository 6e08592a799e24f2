#include "replaysim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "replaysim/detector.hpp"
#include "replaysim/errors.hpp"

namespace replaysim {

namespace {

double log_det_of_llt(const Eigen::LLT<Matrix>& llt) {
    const Matrix& factor = llt.matrixLLT();
    double half = 0.0;
    for (Eigen::Index i = 0; i < factor.rows(); ++i) {
        half += std::log(factor(i, i));
    }
    return 2.0 * half;
}

}  // namespace

long warmup_steps(const ScenarioConfig& config) {
    return std::max<long>(config.window_capacity, 50);
}

SimulationTrace run_scenario(const ScenarioConfig& config, int run_index,
                             const RecordOptions& options) {
    validate_scenario(config);
    if (run_index < 0) {
        throw ValidationError("run_index must be nonnegative");
    }

    const SystemModel& model = config.model;
    const Eigen::Index p = model.p();
    const Eigen::Index m_dim = model.m();
    const long horizon = config.horizon;

    const SteadyStateGains gains = compute_steady_gains(model, config.beta);
    const LqgDesign design = design_lqg(model, config.F, config.G);

    const GaussianSampler process_noise(Vector::Zero(model.n()), model.W);
    const GaussianSampler measurement_noise(Vector::Zero(m_dim), model.V);
    const GaussianSampler initial_state(Vector::Zero(model.n()), gains.P);
    const GaussianSampler watermark_noise(Vector::Zero(p),
                                          config.watermark.tau);

    const Rng run_rng = Rng(config.seed).split(
        static_cast<std::uint64_t>(run_index));
    Rng process_rng = run_rng.split("process");
    Rng measurement_rng = run_rng.split("measurement");
    Rng arrival_rng = run_rng.split("arrival");
    Rng watermark_rng = run_rng.split("watermark");
    Rng init_rng = run_rng.split("init");

    const Eigen::LLT<Matrix> sigma_llt(gains.Sigma);
    if (sigma_llt.info() != Eigen::Success) {
        throw Singular("innovation covariance is not positive definite");
    }
    const double sigma_log_det = log_det_of_llt(sigma_llt);
    const double regularizer =
        1e-9 * gains.Sigma.trace() / static_cast<double>(m_dim);
    const int max_count =
        static_cast<int>(std::min<long>(config.window_capacity, horizon));
    std::vector<double> chi2_thresholds(
        static_cast<std::size_t>(max_count) + 1, 0.0);
    for (int count = 1; count <= max_count; ++count) {
        chi2_thresholds[static_cast<std::size_t>(count)] = chi2_threshold(
            static_cast<int>(m_dim) * count, config.chi2_significance);
    }
    const double kl_threshold = config.kl_threshold.value_or(
        std::numeric_limits<double>::infinity());
    const long warmup = warmup_steps(config);
    const bool attacked = config.attack.mode == AttackMode::Replay;
    const long attack_start = config.attack.attack_start;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    ReplayAttacker attacker(config.attack);
    InnovationWindow window(config.window_capacity);
    FilterState filter = initial_filter_state(model);
    PlantState plant{initial_state.draw(init_rng), 0};
    Vector u = Vector::Zero(p);
    Vector du = Vector::Zero(p);

    SimulationTrace trace;
    RunSummary& summary = trace.summary;
    if (options.keep_steps) {
        trace.steps.reserve(static_cast<std::size_t>(horizon));
    }
    if (options.keep_series) {
        summary.kl_series.reserve(static_cast<std::size_t>(horizon));
        summary.chi2_series.reserve(static_cast<std::size_t>(horizon));
        summary.error_sq_series.reserve(static_cast<std::size_t>(horizon));
        summary.cost_series.reserve(static_cast<std::size_t>(horizon));
    }
    double cost_accumulator = 0.0;

    for (long k = 0; k < horizon; ++k) {
        if (k > 0) {
            du = watermark_sample(config.watermark, k, watermark_noise,
                                  watermark_rng);
            u = control(design, filter.x_est, du);
            plant = plant_step(model, plant, u, process_noise, process_rng);
        }
        const Vector y = measure(model, plant, measurement_noise,
                                 measurement_rng);
        attacker.observe(k, y);
        const Vector y_delivered = attacker.intercept(k, y);
        bool arrived = true;
        if (config.beta_mode == BetaMode::Bernoulli) {
            arrived = arrival_rng.uniform() <= config.beta;
        }
        if (k > 0) {
            filter = predict(filter, model, u);
        }
        auto [updated, z] = update(filter, model, gains, config.beta_mode,
                                   arrived, y_delivered);
        filter = updated;
        window.push(k, z);

        const int count = window.count();
        const double chi2_stat =
            sigma_llt.solve(window.sum_outer()).trace();
        const bool chi2_alarm =
            chi2_stat > chi2_thresholds[static_cast<std::size_t>(count)];
        double kl_stat = nan;
        bool kl_alarm = false;
        if (count >= m_dim + 1) {
            Matrix estimate = window.sum_outer() / count;
            estimate.diagonal().array() += regularizer;
            const Eigen::LLT<Matrix> estimate_llt(estimate);
            if (estimate_llt.info() == Eigen::Success) {
                kl_stat = 0.5 * (sigma_llt.solve(estimate).trace() -
                                 static_cast<double>(m_dim) + sigma_log_det -
                                 log_det_of_llt(estimate_llt));
                kl_alarm = kl_stat > kl_threshold;
            }
        }

        const double step_cost =
            plant.x.dot(config.F * plant.x) + u.dot(config.G * u);
        cost_accumulator += step_cost;
        const double error_sq = (plant.x - filter.x_est).squaredNorm();

        const bool in_false_alarm_region =
            k >= warmup && (!attacked || k < attack_start);
        if (in_false_alarm_region) {
            summary.kl_false_alarms += kl_alarm ? 1 : 0;
            summary.chi2_false_alarms += chi2_alarm ? 1 : 0;
        }
        if (attacked && k >= attack_start) {
            if (kl_alarm && !summary.kl_delay.has_value()) {
                summary.kl_delay = k - attack_start;
            }
            if (chi2_alarm && !summary.chi2_delay.has_value()) {
                summary.chi2_delay = k - attack_start;
            }
        }

        if (options.keep_series) {
            summary.kl_series.push_back(kl_stat);
            summary.chi2_series.push_back(chi2_stat);
            summary.error_sq_series.push_back(error_sq);
            summary.cost_series.push_back(step_cost);
        }
        if (options.keep_steps) {
            StepRecord record;
            record.k = k;
            record.x = plant.x;
            record.x_est = filter.x_est;
            record.y_delivered = y_delivered;
            record.z = z;
            record.u = u;
            record.du = du;
            record.kl_stat = kl_stat;
            record.chi2_stat = chi2_stat;
            record.kl_alarm = kl_alarm;
            record.chi2_alarm = chi2_alarm;
            record.step_cost = step_cost;
            trace.steps.push_back(std::move(record));
        }
    }

    summary.average_cost = cost_accumulator / static_cast<double>(horizon);
    return trace;
}

std::vector<TauTradeoffRow> tau_tradeoff_scan(
    const SystemModel& model, const LqgDesign& design,
    const SteadyStateGains& gains, const Matrix& tau_base,
    const std::vector<double>& scales) {
    const double tau_scale = std::max(1.0, tau_base.cwiseAbs().maxCoeff());
    if (!is_symmetric(tau_base, 1e-9 * tau_scale)) {
        throw ValidationError("tau_base must be symmetric");
    }
    for (const double scale : scales) {
        if (!(scale >= 0.0)) {
            throw ValidationError("scales must be nonnegative");
        }
    }
    const Matrix lambda = virtual_gain_matrix(model, design, gains);
    const Matrix penalty_weight =
        design.G + model.B.transpose() * design.R * model.B;
    const Eigen::LLT<Matrix> sigma_llt(gains.Sigma);
    if (sigma_llt.info() != Eigen::Success) {
        throw Singular("innovation covariance is not positive definite");
    }

    std::vector<double> sorted_scales = scales;
    std::sort(sorted_scales.begin(), sorted_scales.end());
    std::vector<TauTradeoffRow> rows;
    rows.reserve(sorted_scales.size());
    for (const double scale : sorted_scales) {
        const Matrix tau = scale * tau_base;
        const Matrix omega = compute_omega(lambda, model.B, tau);
        TauTradeoffRow row;
        row.scale = scale;
        row.cost_penalty = (penalty_weight * tau).trace();
        row.detectability =
            sigma_llt
                .solve(2.0 * model.C * omega * model.C.transpose())
                .trace();
        row.attack_kl = theoretical_attack_kl(gains, model, omega);
        row.attack_kl_unhalved =
            theoretical_attack_kl_unhalved(gains, model, omega);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace replaysim
