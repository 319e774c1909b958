#pragma once

#include "siglab/config.hpp"
#include "siglab/roadnet.hpp"

#include <string>
#include <vector>

namespace siglab {

struct Scenario {
    RoadNetwork net;
    std::vector<FlowSpec> flows;
};

/// Parses scenario files or generates the synthetic network.
Scenario load_scenario(const ScenarioConfig& sc);

/// Fingerprint of the scenario actually used (serialized network + flows),
/// identical whether the scenario came from files or the generator.
std::string scenario_hash(const Scenario& s);

/// Runs the full training loop and writes metrics.csv, manifest.json and,
/// for learning methods, checkpoint.bin under cfg.out_dir (plus optional
/// audit.csv / scores.csv). Exceptions mark the manifest failed, write it,
/// and propagate.
RunManifest train(const ExperimentConfig& cfg);

/// One greedy episode (epsilon 0, no training). Learning methods restore
/// parameters from `checkpoint_path`; rule-based methods ignore it.
EpisodeRow evaluate(const ExperimentConfig& cfg, const std::string& checkpoint_path);

struct SweepRow {
    double gamma = 0.0;
    int episode = 0;
    double avg_travel_time = 0.0;
};

/// Trains gamma_reward once per value with a shared seed; writes the
/// long-form sweep.csv under cfg.out_dir and per-run outputs in
/// subdirectories.
std::vector<SweepRow> sweep_gamma(const ExperimentConfig& cfg, const std::vector<double>& values);

struct CompareRow {
    std::string method;
    double avg_travel_time = 0.0;
    double throughput = 0.0;
    double mean_queue = 0.0;
};

/// Runs each method on the shared scenario and seed; rows carry each run's
/// final-episode metrics. Writes compare.csv under cfg.out_dir.
std::vector<CompareRow> compare(const ExperimentConfig& cfg, const std::vector<Method>& methods);

} // namespace siglab
