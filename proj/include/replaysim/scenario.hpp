#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "replaysim/attacker.hpp"
#include "replaysim/controller.hpp"
#include "replaysim/estimator.hpp"
#include "replaysim/plant.hpp"

namespace replaysim {

inline constexpr const char* kLibraryVersion = "1.0.0";

/// Complete description of one experiment: the plant, the loop parameters,
/// the attack, the detector settings and the Monte Carlo plan. The file
/// format is JSON with matrices written as row lists; every field is
/// optional and defaults to the scalar reference loop below.
struct ScenarioConfig {
    SystemModel model = scalar_default_model();
    double beta = 1.0;
    BetaMode beta_mode = BetaMode::Fixed;
    Matrix F = Matrix::Identity(1, 1);
    Matrix G = Matrix::Identity(1, 1);
    Watermark watermark{Matrix::Zero(1, 1), 0};
    AttackSchedule attack;
    long horizon = 2000;
    int window_capacity = 100;
    /// Alarm threshold for the divergence detector; empty means "calibrate"
    /// (the Monte Carlo driver replaces it with the empirical
    /// 1 - chi2_significance quantile of the no-attack statistic).
    std::optional<double> kl_threshold;
    double chi2_significance = 0.01;
    std::uint64_t seed = 20260814;
    int runs = 100;
};

/// Throws ValidationError naming the violated field.
void validate_scenario(const ScenarioConfig& config);

/// Parses and validates scenario text. Structural problems (bad JSON,
/// wrong types, ragged matrices, unknown keys) raise ParseError with the
/// offending field; semantic problems raise ValidationError.
ScenarioConfig load_scenario(const std::string& text);

/// Reads the file and delegates to load_scenario.
ScenarioConfig load_scenario_file(const std::string& path);

/// Canonical text form: sorted keys, round-trip-exact numbers. Two configs
/// serialize identically iff they compare equal field by field.
std::string save_scenario(const ScenarioConfig& config);

/// FNV-1a hash of the canonical text, for run manifests.
std::uint64_t config_hash(const ScenarioConfig& config);

/// Named experiment configurations:
///   figure2          replayed feed without watermark: divergence statistic
///                    indistinguishable from the no-attack baseline
///   figure3          same schedule, viewed through the estimation-error
///                    trace (settles without attack, diverges under it)
///   figure4          watermarked replay on the two-state example: the
///                    statistic climbs to its steady theoretical value
///   figure5          watermark switched on mid-run, no attack: the stage
///                    cost steps up by the predicted penalty
///   delay_comparison watermarked replay tuned for racing the divergence
///                    detector against the whiteness baseline
/// Throws UnknownPreset for anything else.
ScenarioConfig preset(const std::string& name);

std::vector<std::string> preset_names();

/// Copy of the config with the attack disabled; the baseline used for
/// threshold calibration and for paired no-attack comparisons.
ScenarioConfig without_attack(const ScenarioConfig& config);

}  // namespace replaysim
