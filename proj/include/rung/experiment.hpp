#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rung/attack.hpp"
#include "rung/datasets.hpp"
#include "rung/smoother.hpp"

namespace rung {

inline constexpr int kManifestFormatVersion = 1;

// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetFiles {
    std::filesystem::path edges;
    std::filesystem::path features;
    std::optional<std::filesystem::path> labels;
    bool self_loops = false;
};

struct DatasetSettings {
    std::variant<SyntheticParams, DatasetFiles> source = SyntheticParams{};
    bool seed_given = false;  // synthetic seed set explicitly instead of derived
    std::optional<std::filesystem::path> perturbation;  // flips applied after loading
};

struct SmootherSettings {
    SmootherConfig base;  // solver field unused; see `solvers`
    std::vector<Solver> solvers{QnIrlsSolver{}};
};

enum class Head { features, labels };

struct AttackSettings {
    bool local = false;
    std::vector<NodeId> targets;
    std::size_t target_count = 0;  // local: draw this many test nodes when targets is empty
    std::vector<double> budgets{10.0, 25.0, 40.0};
    AttackMethod method = GreedyMethod{};
    std::size_t candidate_pool = 2000;
    AttackLoss loss = AttackLoss::margin;
    std::vector<Penalty> penalties;  // empty: l2, l1 and the smoother's penalty
    Head head = Head::features;
    std::size_t histogram_bins = 20;
};

struct MeanSimSettings {
    std::size_t total = 100;
    std::vector<double> ratios{0.10, 0.25, 0.40};
    double gamma = 4.0;
    std::size_t max_iter = 1000;
    double tol = 1e-10;
};

struct SweepSettings {
    std::vector<double> lambda_hat{0.7, 0.8, 0.9};
    std::vector<double> gamma{0.5, 1.0, 2.0, 3.0, 5.0};
    std::vector<std::size_t> iterations{10};
    std::size_t max_cells = 500;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    DatasetSettings dataset;
    SmootherSettings smoother;
    std::optional<AttackSettings> attack;
    MeanSimSettings mean_sim;
    SweepSettings sweep;
};

// Relative file paths resolve against `base_dir`. A manifest document is
// accepted in place of a config and yields the configuration it recorded.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Full configuration with every default spelled out; parse_config(to_json(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

Penalty parse_penalty(const nlohmann::json& j, const std::string& path);
nlohmann::json penalty_to_json(const Penalty& p);

// Dataset as configured, after applying the optional perturbation file.
Dataset materialize_dataset(const ExperimentConfig& cfg);

struct RunOutput {
    std::vector<std::filesystem::path> artifacts;  // relative to output_dir
    std::vector<std::string> notes;
};

RunOutput run_generate(const ExperimentConfig& cfg);
RunOutput run_smooth(const ExperimentConfig& cfg);
RunOutput run_convergence(const ExperimentConfig& cfg);
RunOutput run_mean_sim(const ExperimentConfig& cfg);
RunOutput run_attack_eval(const ExperimentConfig& cfg);
RunOutput run_evaluate(const ExperimentConfig& cfg);
RunOutput run_sweep(const ExperimentConfig& cfg);

const std::vector<std::string>& command_names();

// Runs the named command and writes manifest.json last.
RunOutput run_command(const std::string& command, const ExperimentConfig& cfg);

}  // namespace rung
