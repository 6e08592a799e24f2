#include "replaysim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"
#include "replaysim/errors.hpp"
#include "replaysim/numerics.hpp"

namespace replaysim {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& message) {
    throw ParseError(message);
}

void expect_keys(const json& object, const std::string& prefix,
                 std::initializer_list<const char*> allowed) {
    for (auto it = object.begin(); it != object.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            parse_fail("unknown field '" + prefix + it.key() + "'");
        }
    }
}

Matrix matrix_from(const json& value, const std::string& field) {
    if (!value.is_array() || value.empty()) {
        parse_fail(field + " must be a non-empty list of rows");
    }
    const auto rows = static_cast<Eigen::Index>(value.size());
    if (!value[0].is_array() || value[0].empty()) {
        parse_fail(field + " rows must be non-empty lists of numbers");
    }
    const auto cols = static_cast<Eigen::Index>(value[0].size());
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = value[static_cast<std::size_t>(i)];
        if (!row.is_array() ||
            static_cast<Eigen::Index>(row.size()) != cols) {
            parse_fail(field + " rows must all have the same length");
        }
        for (Eigen::Index j = 0; j < cols; ++j) {
            const json& entry = row[static_cast<std::size_t>(j)];
            if (!entry.is_number()) {
                parse_fail(field + " entries must be numbers");
            }
            out(i, j) = entry.get<double>();
        }
    }
    return out;
}

json matrix_to(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(row);
    }
    return rows;
}

double number_from(const json& value, const std::string& field) {
    if (!value.is_number()) {
        parse_fail(field + " must be a number");
    }
    return value.get<double>();
}

long integer_from(const json& value, const std::string& field) {
    if (!value.is_number_integer()) {
        parse_fail(field + " must be an integer");
    }
    return value.get<long>();
}

bool boolean_from(const json& value, const std::string& field) {
    if (!value.is_boolean()) {
        parse_fail(field + " must be a boolean");
    }
    return value.get<bool>();
}

void check_symmetric_weight(const Matrix& m, Eigen::Index dim,
                            const std::string& field) {
    if (m.rows() != dim || m.cols() != dim) {
        throw ValidationError(field + " has the wrong dimensions");
    }
    if (!m.allFinite()) {
        throw ValidationError(field + " must have finite entries");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (!is_symmetric(m, 1e-9 * scale)) {
        throw ValidationError(field + " must be symmetric");
    }
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace

void validate_scenario(const ScenarioConfig& config) {
    validate_model(config.model);
    const Eigen::Index n = config.model.n();
    const Eigen::Index p = config.model.p();
    if (!(config.beta > 0.0) || config.beta > 1.0) {
        throw ValidationError("beta must lie in (0, 1]");
    }
    check_symmetric_weight(config.F, n, "F");
    check_symmetric_weight(config.G, p, "G");
    check_symmetric_weight(config.watermark.tau, p, "tau");
    Eigen::SelfAdjointEigenSolver<Matrix> tau_eigs(config.watermark.tau);
    const double tau_scale =
        std::max(1.0, config.watermark.tau.cwiseAbs().maxCoeff());
    if (tau_eigs.eigenvalues().minCoeff() < -1e-9 * tau_scale) {
        throw ValidationError("tau must be positive semi-definite");
    }
    if (config.watermark.active_from < 0) {
        throw ValidationError("active_from must be nonnegative");
    }
    validate_schedule(config.attack);
    if (config.attack.mode == AttackMode::Replay &&
        config.attack.attack_start >= config.horizon) {
        throw ValidationError("attack_start must be less than horizon");
    }
    if (config.horizon < 1) {
        throw ValidationError("horizon must be positive");
    }
    if (config.window_capacity < 1) {
        throw ValidationError("window_capacity must be positive");
    }
    if (config.kl_threshold.has_value() &&
        !std::isfinite(*config.kl_threshold)) {
        throw ValidationError("kl_threshold must be finite");
    }
    if (!(config.chi2_significance > 0.0) ||
        !(config.chi2_significance < 1.0)) {
        throw ValidationError("chi2_significance must lie in (0, 1)");
    }
    if (config.runs < 1) {
        throw ValidationError("runs must be positive");
    }
}

ScenarioConfig load_scenario(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        parse_fail(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        parse_fail("scenario root must be an object");
    }
    expect_keys(root, "",
                {"model", "beta", "beta_mode", "F", "G", "watermark", "attack",
                 "horizon", "window_capacity", "kl_threshold",
                 "chi2_significance", "seed", "runs"});

    ScenarioConfig config;
    if (root.contains("model")) {
        const json& model = root["model"];
        if (!model.is_object()) {
            parse_fail("model must be an object");
        }
        expect_keys(model, "model.", {"A", "B", "C", "W", "V"});
        for (const char* key : {"A", "B", "C", "W", "V"}) {
            if (!model.contains(key)) {
                parse_fail(std::string("model.") + key +
                           " is required when model is given");
            }
        }
        config.model.A = matrix_from(model["A"], "model.A");
        config.model.B = matrix_from(model["B"], "model.B");
        config.model.C = matrix_from(model["C"], "model.C");
        config.model.W = matrix_from(model["W"], "model.W");
        config.model.V = matrix_from(model["V"], "model.V");
    }
    const Eigen::Index n = config.model.A.rows();
    const Eigen::Index p = config.model.B.cols();
    config.F = Matrix::Identity(n, n);
    config.G = Matrix::Identity(p, p);
    config.watermark.tau = Matrix::Zero(p, p);

    if (root.contains("beta")) {
        config.beta = number_from(root["beta"], "beta");
    }
    if (root.contains("beta_mode")) {
        const json& mode = root["beta_mode"];
        if (mode == "fixed") {
            config.beta_mode = BetaMode::Fixed;
        } else if (mode == "bernoulli") {
            config.beta_mode = BetaMode::Bernoulli;
        } else {
            parse_fail("beta_mode must be \"fixed\" or \"bernoulli\"");
        }
    }
    if (root.contains("F")) {
        config.F = matrix_from(root["F"], "F");
    }
    if (root.contains("G")) {
        config.G = matrix_from(root["G"], "G");
    }
    if (root.contains("watermark")) {
        const json& wm = root["watermark"];
        if (!wm.is_object()) {
            parse_fail("watermark must be an object");
        }
        expect_keys(wm, "watermark.", {"tau", "active_from"});
        if (wm.contains("tau")) {
            config.watermark.tau = matrix_from(wm["tau"], "watermark.tau");
        }
        if (wm.contains("active_from")) {
            config.watermark.active_from =
                integer_from(wm["active_from"], "watermark.active_from");
        }
    }
    if (root.contains("attack")) {
        const json& attack = root["attack"];
        if (!attack.is_object()) {
            parse_fail("attack must be an object");
        }
        expect_keys(attack, "attack.",
                    {"mode", "record_from", "attack_start", "wrap"});
        if (attack.contains("mode")) {
            const json& mode = attack["mode"];
            if (mode == "none") {
                config.attack.mode = AttackMode::None;
            } else if (mode == "replay") {
                config.attack.mode = AttackMode::Replay;
            } else {
                parse_fail("attack.mode must be \"none\" or \"replay\"");
            }
        }
        if (attack.contains("record_from")) {
            config.attack.record_from =
                integer_from(attack["record_from"], "attack.record_from");
        }
        if (attack.contains("attack_start")) {
            config.attack.attack_start =
                integer_from(attack["attack_start"], "attack.attack_start");
        }
        if (attack.contains("wrap")) {
            config.attack.wrap = boolean_from(attack["wrap"], "attack.wrap");
        }
    }
    if (root.contains("horizon")) {
        config.horizon = integer_from(root["horizon"], "horizon");
    }
    if (root.contains("window_capacity")) {
        config.window_capacity = static_cast<int>(
            integer_from(root["window_capacity"], "window_capacity"));
    }
    if (root.contains("kl_threshold")) {
        const json& threshold = root["kl_threshold"];
        if (threshold.is_string()) {
            if (threshold != "calibrate") {
                parse_fail("kl_threshold must be a number or \"calibrate\"");
            }
            config.kl_threshold.reset();
        } else {
            config.kl_threshold = number_from(threshold, "kl_threshold");
        }
    }
    if (root.contains("chi2_significance")) {
        config.chi2_significance =
            number_from(root["chi2_significance"], "chi2_significance");
    }
    if (root.contains("seed")) {
        const json& seed = root["seed"];
        if (!seed.is_number_integer() ||
            (seed.is_number_integer() && !seed.is_number_unsigned() &&
             seed.get<long long>() < 0)) {
            parse_fail("seed must be a nonnegative integer");
        }
        config.seed = seed.get<std::uint64_t>();
    }
    if (root.contains("runs")) {
        config.runs = static_cast<int>(integer_from(root["runs"], "runs"));
    }

    validate_scenario(config);
    return config;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot read scenario file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_scenario(buffer.str());
}

std::string save_scenario(const ScenarioConfig& config) {
    json root;
    root["model"] = {{"A", matrix_to(config.model.A)},
                     {"B", matrix_to(config.model.B)},
                     {"C", matrix_to(config.model.C)},
                     {"W", matrix_to(config.model.W)},
                     {"V", matrix_to(config.model.V)}};
    root["beta"] = config.beta;
    root["beta_mode"] =
        config.beta_mode == BetaMode::Fixed ? "fixed" : "bernoulli";
    root["F"] = matrix_to(config.F);
    root["G"] = matrix_to(config.G);
    root["watermark"] = {{"tau", matrix_to(config.watermark.tau)},
                         {"active_from", config.watermark.active_from}};
    root["attack"] = {
        {"mode", config.attack.mode == AttackMode::None ? "none" : "replay"},
        {"record_from", config.attack.record_from},
        {"attack_start", config.attack.attack_start},
        {"wrap", config.attack.wrap}};
    root["horizon"] = config.horizon;
    root["window_capacity"] = config.window_capacity;
    if (config.kl_threshold.has_value()) {
        root["kl_threshold"] = *config.kl_threshold;
    } else {
        root["kl_threshold"] = "calibrate";
    }
    root["chi2_significance"] = config.chi2_significance;
    root["seed"] = config.seed;
    root["runs"] = config.runs;
    return root.dump(2) + "\n";
}

std::uint64_t config_hash(const ScenarioConfig& config) {
    return fnv1a(save_scenario(config));
}

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig config;
    config.runs = 500;
    config.horizon = 2000;
    if (name == "figure2" || name == "figure3") {
        config.attack = {AttackMode::Replay, 0, 10, true};
        config.window_capacity = 10;
        if (name == "figure3") {
            config.watermark = {Matrix::Identity(1, 1), 0};
        }
    } else if (name == "figure4") {
        config.model = two_state_example_model();
        config.F = Matrix::Identity(2, 2);
        config.G = Matrix::Identity(2, 2);
        Matrix tau(2, 2);
        tau << 1.1721, 0.3146, 0.3146, 1.0229;
        config.watermark = {tau, 0};
        config.attack = {AttackMode::Replay, 0, 10, true};
        config.window_capacity = 100;
    } else if (name == "figure5") {
        config.watermark = {Matrix::Identity(1, 1), 10};
        config.window_capacity = 100;
    } else if (name == "delay_comparison") {
        // Four independent output channels with the excitation confined to
        // the first: the replay inflates one direction of the innovation
        // covariance, the regime where the divergence statistic's shape
        // sensitivity pays off against pooled-energy whiteness testing.
        const Matrix eye = Matrix::Identity(4, 4);
        config.model = SystemModel{eye, eye, eye, eye, eye};
        config.F = eye;
        config.G = eye;
        Matrix tau = Matrix::Zero(4, 4);
        tau(0, 0) = 2.0;
        config.watermark = {tau, 0};
        config.attack = {AttackMode::Replay, 0, 300, true};
        config.window_capacity = 100;
        config.horizon = 800;
    } else {
        throw UnknownPreset(
            "unknown preset '" + name +
            "'; known presets: figure2, figure3, figure4, figure5, "
            "delay_comparison");
    }
    validate_scenario(config);
    return config;
}

std::vector<std::string> preset_names() {
    return {"figure2", "figure3", "figure4", "figure5", "delay_comparison"};
}

ScenarioConfig without_attack(const ScenarioConfig& config) {
    ScenarioConfig out = config;
    out.attack = AttackSchedule{};
    return out;
}

}  // namespace replaysim
