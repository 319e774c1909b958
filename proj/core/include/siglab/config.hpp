#pragma once

#include "siglab/agent.hpp"
#include "siglab/coordination.hpp"
#include "siglab/roadnet.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace siglab {

enum class Method { fixed_time, max_pressure, iql, gamma_reward, gamma_attention_reward };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
bool method_learns(Method m);

/// Either a pair of scenario files or a synthetic generator spec.
struct ScenarioConfig {
    std::string roadnet_path;
    std::string flow_path;
    std::optional<SyntheticSpec> synthetic;
};

/// Learner hyperparameters exposed through config files.
struct TrainingConfig {
    int hidden = 64;
    int attention_dim = 32;
    double lr = 1e-3;
    double gamma_prime = 0.8;
    int target_sync_period = 5;
    int batch_size = 32;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_fraction = 0.5; // fraction of total decisions spent annealing
};

struct EmitConfig {
    bool audit = false;  // amendment audit CSV
    bool scores = false; // attention score dump CSV
};

struct ExperimentConfig {
    ScenarioConfig scenario;
    Method method = Method::gamma_reward;
    CoordinationConfig coordination;
    TrainingConfig training;
    int episodes = 30;
    int steps_per_episode = 3600; // seconds of simulated time per episode
    int action_interval = 10;     // seconds between decisions
    int min_steps_per_update = 100;
    double fixed_time_duration = 30.0;
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    int threads = 1;
    EmitConfig emit;
};

/// Parses and validates a config document. Rejects unknown keys and blocks
/// inconsistent with the method (coordination for rule-based methods,
/// attention fields outside the attention method, nonzero gamma for iql).
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string serialize_experiment_config(const ExperimentConfig& cfg);

/// Validates gamma sweep values: each in [0, 1], no duplicates, non-empty.
void validate_sweep_values(const std::vector<double>& values);

struct EpisodeRow {
    int episode = 0;
    double avg_travel_time = 0.0;
    double throughput = 0.0;
    double mean_queue = 0.0;
};

struct RunManifest {
    std::string config_json; // resolved config, reproduces the run
    std::string input_hash;  // fingerprint of scenario inputs
    double wall_seconds = 0.0;
    std::vector<EpisodeRow> episodes;
    bool failed = false;
    std::string error;
};

std::string serialize_manifest(const RunManifest& m);

/// Writes via a temp file + rename so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

} // namespace siglab
