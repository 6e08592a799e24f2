#include "replaysim/report.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "replaysim/detector.hpp"
#include "replaysim/errors.hpp"

namespace replaysim {

namespace {

using nlohmann::json;

void append_indexed(std::ostringstream& out, const char* stem,
                    Eigen::Index dim) {
    for (Eigen::Index i = 0; i < dim; ++i) {
        out << ',' << stem << i;
    }
}

void append_vector(std::ostream& out, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << ',' << format_number(v(i));
    }
}

}  // namespace

std::string format_number(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string step_csv_header(const ScenarioConfig& config) {
    std::ostringstream out;
    out << "run,k";
    append_indexed(out, "x", config.model.n());
    append_indexed(out, "xhat", config.model.n());
    append_indexed(out, "y", config.model.m());
    append_indexed(out, "z", config.model.m());
    append_indexed(out, "u", config.model.p());
    append_indexed(out, "du", config.model.p());
    out << ",kl_stat,chi2_stat,kl_alarm,chi2_alarm,step_cost";
    return out.str();
}

void write_run_csv(std::ostream& out, const ScenarioConfig& config,
                   const SimulationTrace& trace, int run_index) {
    if (trace.steps.size() != static_cast<std::size_t>(config.horizon)) {
        throw ValidationError(
            "per-step CSV needs a trace recorded with keep_steps");
    }
    for (const StepRecord& step : trace.steps) {
        out << run_index << ',' << step.k;
        append_vector(out, step.x);
        append_vector(out, step.x_est);
        append_vector(out, step.y_delivered);
        append_vector(out, step.z);
        append_vector(out, step.u);
        append_vector(out, step.du);
        out << ',' << format_number(step.kl_stat) << ','
            << format_number(step.chi2_stat) << ','
            << (step.kl_alarm ? 1 : 0) << ',' << (step.chi2_alarm ? 1 : 0)
            << ',' << format_number(step.step_cost) << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, const MonteCarloResult& result) {
    const std::vector<double> kl_mean =
        ensemble_mean(result, SeriesKind::KlStatistic);
    const std::vector<double> kl_median =
        ensemble_quantile(result, SeriesKind::KlStatistic, 0.5);
    const std::vector<double> chi2_mean =
        ensemble_mean(result, SeriesKind::Chi2Statistic);
    const std::vector<double> chi2_median =
        ensemble_quantile(result, SeriesKind::Chi2Statistic, 0.5);
    const std::vector<double> error_mean =
        ensemble_mean(result, SeriesKind::ErrorSq);
    const std::vector<double> cost_mean =
        ensemble_mean(result, SeriesKind::StepCost);
    out << "k,kl_mean,kl_median,chi2_mean,chi2_median,error_trace_mean,"
           "cost_mean\n";
    for (std::size_t k = 0; k < kl_mean.size(); ++k) {
        out << k << ',' << format_number(kl_mean[k]) << ','
            << format_number(kl_median[k]) << ','
            << format_number(chi2_mean[k]) << ','
            << format_number(chi2_median[k]) << ','
            << format_number(error_mean[k]) << ','
            << format_number(cost_mean[k]) << '\n';
    }
}

void write_manifest(std::ostream& out, const MonteCarloResult& result) {
    const ScenarioConfig& config = result.config;
    const SteadyStateGains gains =
        compute_steady_gains(config.model, config.beta);
    const LqgDesign design = design_lqg(config.model, config.F, config.G);
    const Matrix lambda = virtual_gain_matrix(config.model, design, gains);
    const double replay_radius = spectral_radius(lambda);
    const bool stealthy =
        stealthiness_classification(lambda) == Stealthiness::Stealthy;
    const Matrix posterior =
        gains.P - config.beta * gains.K * config.model.C * gains.P;

    json references;
    references["lqg_cost"] = lqg_cost(design, gains, config.model);
    references["watermarked_cost"] =
        watermarked_cost(design, gains, config.model, config.watermark);
    references["sigma_trace"] = gains.Sigma.trace();
    references["posterior_error_trace"] = posterior.trace();
    references["replay_spectral_radius"] = replay_radius;
    references["replay_stealthy"] = stealthy;
    if (stealthy) {
        const Matrix omega =
            compute_omega(lambda, config.model.B, config.watermark.tau);
        references["attack_kl"] =
            theoretical_attack_kl(gains, config.model, omega);
        references["attack_kl_unhalved"] =
            theoretical_attack_kl_unhalved(gains, config.model, omega);
    } else {
        references["attack_kl"] = nullptr;
        references["attack_kl_unhalved"] = nullptr;
    }

    json thresholds;
    thresholds["kl"] = result.kl_threshold;
    if (result.chi2_empirical_threshold.has_value()) {
        thresholds["chi2_empirical"] = *result.chi2_empirical_threshold;
    } else {
        thresholds["chi2_empirical"] = nullptr;
    }

    char hash_text[19];
    std::snprintf(hash_text, sizeof(hash_text), "0x%016llx",
                  static_cast<unsigned long long>(config_hash(config)));

    json manifest;
    manifest["artifact"] = "replaysim";
    manifest["version"] = kLibraryVersion;
    manifest["config"] = json::parse(save_scenario(config));
    manifest["config_hash"] = hash_text;
    manifest["warmup"] = result.warmup;
    manifest["thresholds"] = thresholds;
    manifest["references"] = references;
    out << manifest.dump(2) << '\n';
}

}  // namespace replaysim
