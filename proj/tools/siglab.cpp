#include "siglab/baselines.hpp"
#include "siglab/checkpoint.hpp"
#include "siglab/config.hpp"
#include "siglab/errors.hpp"
#include "siglab/harness.hpp"
#include "siglab/roadnet.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace siglab;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> method;
    std::optional<int> episodes;
    std::optional<int> threads;
};

void add_override_flags(CLI::App* cmd, std::string& config_path, Overrides& ov) {
    cmd->add_option("--config", config_path, "Experiment config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", ov.seed, "Override the config seed");
    cmd->add_option("--out", ov.out, "Override the output directory");
    cmd->add_option("--method", ov.method,
                    "Override the method (fixed_time, max_pressure, iql, gamma_reward, "
                    "gamma_attention_reward)");
    cmd->add_option("--episodes", ov.episodes, "Override the episode count");
    cmd->add_option("--threads", ov.threads, "Override the worker thread count");
}

ExperimentConfig load_with_overrides(const std::string& path, const Overrides& ov) {
    ExperimentConfig cfg = load_experiment_config(path);
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.out) cfg.out_dir = *ov.out;
    if (ov.method) cfg.method = method_from_name(*ov.method);
    if (ov.episodes) {
        if (*ov.episodes < 1) throw ValidationError("--episodes must be >= 1");
        cfg.episodes = *ov.episodes;
    }
    if (ov.threads) {
        if (*ov.threads < 1) throw ValidationError("--threads must be >= 1");
        cfg.threads = *ov.threads;
    }
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"Traffic-signal control laboratory"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write synthetic roadnet/flow files");
    std::string gen_kind = "arterial";
    SyntheticSpec gen_spec;
    std::string gen_out = ".";
    gen->add_option("--kind", gen_kind, "arterial or grid")
        ->check(CLI::IsMember({"arterial", "grid"}));
    gen->add_option("--k", gen_spec.k, "Arterial: signalized intersections");
    gen->add_option("--rows", gen_spec.rows, "Grid rows");
    gen->add_option("--cols", gen_spec.cols, "Grid columns");
    gen->add_flag("--one-way", gen_spec.one_way, "Grid: one-way streets");
    gen->add_option("--link-length", gen_spec.link_length, "Link length (m)");
    gen->add_option("--speed", gen_spec.free_flow_speed, "Free-flow speed (m/s)");
    gen->add_option("--lanes", gen_spec.lanes, "Lanes per movement");
    gen->add_option("--rate", gen_spec.flow_rate, "Vehicles per 300 s, network total");
    gen->add_option("--out", gen_out, "Output directory");

    // train
    auto* tr = app.add_subcommand("train", "Run the training loop");
    std::string tr_config;
    Overrides tr_ov;
    add_override_flags(tr, tr_config, tr_ov);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "One greedy episode");
    std::string ev_config, ev_checkpoint;
    Overrides ev_ov;
    add_override_flags(ev, ev_config, ev_ov);
    ev->add_option("--checkpoint", ev_checkpoint,
                   "Checkpoint file (required for learning methods)");

    // sweep-gamma
    auto* sw = app.add_subcommand("sweep-gamma", "Train once per gamma value");
    std::string sw_config;
    Overrides sw_ov;
    std::vector<double> sw_values{0.1, 0.3, 0.5, 0.7, 0.9};
    add_override_flags(sw, sw_config, sw_ov);
    sw->add_option("--values", sw_values, "Gamma values to sweep");

    // compare
    auto* cp = app.add_subcommand("compare", "Run several methods on one scenario");
    std::string cp_config;
    Overrides cp_ov;
    std::vector<std::string> cp_methods{"fixed_time", "max_pressure", "iql", "gamma_reward"};
    add_override_flags(cp, cp_config, cp_ov);
    cp->add_option("--methods", cp_methods, "Methods to run");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        gen_spec.kind =
            gen_kind == "arterial" ? SyntheticSpec::Kind::arterial : SyntheticSpec::Kind::grid;
        SyntheticScenario sc = generate_synthetic(gen_spec);
        std::filesystem::create_directories(gen_out);
        write_file_atomic(gen_out + "/roadnet.json", serialize_roadnet(sc.net));
        write_file_atomic(gen_out + "/flow.json", serialize_flow(sc.flows));
        std::cout << "wrote " << gen_out << "/roadnet.json and " << gen_out << "/flow.json ("
                  << sc.net.intersections.size() << " intersections, " << sc.net.links.size()
                  << " links, " << sc.flows.size() << " flows)\n";
        return 0;
    }
    if (tr->parsed()) {
        ExperimentConfig cfg = load_with_overrides(tr_config, tr_ov);
        RunManifest m = train(cfg);
        std::cout << "trained " << cfg.episodes << " episodes; final avg travel time "
                  << m.episodes.back().avg_travel_time << " s; outputs in " << cfg.out_dir
                  << "\n";
        return 0;
    }
    if (ev->parsed()) {
        ExperimentConfig cfg = load_with_overrides(ev_config, ev_ov);
        if (method_learns(cfg.method) && ev_checkpoint.empty())
            throw ValidationError("evaluate: --checkpoint is required for learning methods");
        EpisodeRow row = evaluate(cfg, ev_checkpoint);
        std::cout << "avg_travel_time_s=" << row.avg_travel_time
                  << " throughput=" << row.throughput << " mean_queue=" << row.mean_queue
                  << "\n";
        return 0;
    }
    if (sw->parsed()) {
        ExperimentConfig cfg = load_with_overrides(sw_config, sw_ov);
        std::vector<SweepRow> rows = sweep_gamma(cfg, sw_values);
        std::cout << "swept " << sw_values.size() << " gamma values; sweep.csv in "
                  << cfg.out_dir << "\n";
        return 0;
    }
    if (cp->parsed()) {
        ExperimentConfig cfg = load_with_overrides(cp_config, cp_ov);
        std::vector<Method> methods;
        methods.reserve(cp_methods.size());
        for (const std::string& name : cp_methods) methods.push_back(method_from_name(name));
        std::vector<CompareRow> rows = compare(cfg, methods);
        for (const CompareRow& r : rows)
            std::cout << r.method << ": avg_travel_time_s=" << r.avg_travel_time << "\n";
        return 0;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
