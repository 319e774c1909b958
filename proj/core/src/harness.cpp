#include "siglab/harness.hpp"

#include "siglab/baselines.hpp"
#include "siglab/checkpoint.hpp"
#include "siglab/coordination.hpp"
#include "siglab/csv.hpp"
#include "siglab/errors.hpp"
#include "siglab/hash.hpp"
#include "siglab/parallel.hpp"
#include "siglab/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

namespace siglab {

namespace {

struct Topology {
    std::vector<std::string> ids; // sorted signalized intersection ids
    std::map<std::string, int> index;
    std::vector<std::vector<int>> neighbors; // ascending agent indices
    std::vector<int> phase_counts;
    int obs_dim = 0; // network-wide padded observation width
};

Topology build_topology(const RoadNetwork& net) {
    Topology topo;
    topo.ids = net.signalized_ids();
    std::sort(topo.ids.begin(), topo.ids.end());
    const int A = static_cast<int>(topo.ids.size());
    for (int i = 0; i < A; ++i) topo.index[topo.ids[i]] = i;
    topo.neighbors.resize(topo.ids.size());
    topo.phase_counts.resize(topo.ids.size());
    for (int i = 0; i < A; ++i) {
        const Intersection* inter = net.find_intersection(topo.ids[i]);
        topo.phase_counts[i] = static_cast<int>(inter->phases.size());
        int dim = static_cast<int>(inter->entering_lanes.size() + inter->exiting_lanes.size() +
                                   inter->phases.size());
        topo.obs_dim = std::max(topo.obs_dim, dim);
        auto it = net.neighbor_map.find(topo.ids[i]);
        if (it != net.neighbor_map.end())
            for (const std::string& nid : it->second)
                topo.neighbors[i].push_back(topo.index.at(nid));
    }
    return topo;
}

Eigen::VectorXd padded_obs(const Simulator& sim, const std::string& id, int width) {
    std::vector<double> v = observation_vector(sim.observe(id));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(width);
    for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k];
    return out;
}

std::vector<Eigen::VectorXd> observe_all(const Simulator& sim, const Topology& topo) {
    std::vector<Eigen::VectorXd> obs(topo.ids.size());
    for (std::size_t i = 0; i < topo.ids.size(); ++i)
        obs[i] = padded_obs(sim, topo.ids[i], topo.obs_dim);
    return obs;
}

std::vector<Eigen::MatrixXd> bundles_of(const std::vector<Eigen::VectorXd>& obs,
                                        const Topology& topo, bool attention) {
    std::vector<Eigen::MatrixXd> out(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const std::vector<int>& nb = topo.neighbors[i];
        Eigen::MatrixXd m(topo.obs_dim, attention ? 1 + nb.size() : 1);
        m.col(0) = obs[i];
        if (attention)
            for (std::size_t k = 0; k < nb.size(); ++k)
                m.col(static_cast<Eigen::Index>(1 + k)) = obs[static_cast<std::size_t>(nb[k])];
        out[i] = std::move(m);
    }
    return out;
}

AgentConfig agent_config_for(const ExperimentConfig& cfg, const Topology& topo, int i) {
    AgentConfig a;
    a.obs_dim = topo.obs_dim;
    a.actions = topo.phase_counts[i];
    a.hidden = cfg.training.hidden;
    a.attention_dim = cfg.training.attention_dim;
    a.attention = cfg.method == Method::gamma_attention_reward;
    a.adam.lr = cfg.training.lr;
    a.gamma_prime = cfg.training.gamma_prime;
    a.target_sync_period = cfg.training.target_sync_period;
    return a;
}

std::string fmt(double v) { return CsvWriter::format_double(v); }

/// The effective pipeline settings: iql is gamma_reward with gamma pinned 0.
ExperimentConfig pipeline_config(const ExperimentConfig& cfg) {
    return cfg.method == Method::iql ? iql_mode(cfg) : cfg;
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> all_named(std::vector<Agent>& agents) {
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
    for (Agent& a : agents)
        for (auto& [name, p] : a.named_params()) out.emplace_back(a.id() + "/" + name, p);
    return out;
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> all_named_const(
    const std::vector<Agent>& agents) {
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
    for (const Agent& a : agents)
        for (auto& [name, p] : a.named_params()) out.emplace_back(a.id() + "/" + name, p);
    return out;
}

} // namespace

Scenario load_scenario(const ScenarioConfig& sc) {
    if (sc.synthetic) {
        SyntheticScenario g = generate_synthetic(*sc.synthetic);
        return {std::move(g.net), std::move(g.flows)};
    }
    RoadNetwork net = parse_roadnet(read_file(sc.roadnet_path));
    std::vector<FlowSpec> flows = parse_flow(read_file(sc.flow_path), net);
    return {std::move(net), std::move(flows)};
}

std::string scenario_hash(const Scenario& s) {
    Fnv64 h;
    h.update(serialize_roadnet(s.net));
    h.update(serialize_flow(s.flows));
    return h.hex();
}

RunManifest train(const ExperimentConfig& user_cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = pipeline_config(user_cfg);
    const bool learns = method_learns(cfg.method);
    const bool attention = cfg.method == Method::gamma_attention_reward;

    Scenario scenario = load_scenario(cfg.scenario);
    RunManifest manifest;
    manifest.config_json = serialize_experiment_config(user_cfg);
    manifest.input_hash = scenario_hash(scenario);

    std::filesystem::create_directories(cfg.out_dir);
    const auto finish = [&](bool failed, const std::string& error) {
        manifest.failed = failed;
        manifest.error = error;
        manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_file_atomic(cfg.out_dir + "/manifest.json", serialize_manifest(manifest));
    };

    try {
        Topology topo = build_topology(scenario.net);
        const int A = static_cast<int>(topo.ids.size());
        Simulator sim(scenario.net, scenario.flows, cfg.seed);

        const int dpe = cfg.steps_per_episode / cfg.action_interval; // decisions per episode
        const long total_decisions = static_cast<long>(cfg.episodes) * dpe;
        const double anneal_span =
            cfg.training.epsilon_fraction * static_cast<double>(total_decisions);

        std::vector<Agent> agents;
        std::vector<Rng> rngs;
        std::unique_ptr<Coordinator> coord;
        Coordinator::WeightsProvider provider;
        std::vector<FixedTimePlan> plans;
        if (learns) {
            agents.reserve(static_cast<std::size_t>(A));
            rngs.reserve(static_cast<std::size_t>(A));
            for (int i = 0; i < A; ++i) {
                agents.emplace_back(topo.ids[i], agent_config_for(cfg, topo, i));
                rngs.push_back(Rng::stream(cfg.seed, "agent/" + topo.ids[i]));
                agents.back().init(rngs.back());
            }
            coord = std::make_unique<Coordinator>(topo.neighbors, cfg.coordination);
            if (attention)
                provider = [&agents](int j, const Eigen::MatrixXd& bundle) {
                    return agents[static_cast<std::size_t>(j)].target_attention_scores(bundle);
                };
        } else if (cfg.method == Method::fixed_time) {
            for (int i = 0; i < A; ++i)
                plans.push_back(equal_split_plan(topo.phase_counts[i], cfg.fixed_time_duration));
        }

        CsvWriter metrics_csv;
        metrics_csv.open(cfg.out_dir + "/metrics.csv",
                         {"episode", "avg_travel_time_s", "throughput", "mean_queue"});
        CsvWriter audit_csv;
        std::vector<AuditRow> audit_rows;
        if (cfg.emit.audit && coord) {
            audit_csv.open(cfg.out_dir + "/audit.csv",
                           {"agent", "t", "r", "R", "neighbor", "ratio", "weight"});
            coord->set_audit_sink(&audit_rows);
        }
        CsvWriter scores_csv;
        if (cfg.emit.scores && attention)
            scores_csv.open(cfg.out_dir + "/scores.csv",
                            {"episode", "step", "agent", "member", "score"});

        const auto maybe_amend = [&] {
            if (!coord) return;
            if (coord->latest() - coord->watermark() <
                cfg.min_steps_per_update + cfg.coordination.n)
                return;
            coord->amend(provider);
            if (audit_csv.is_open()) {
                for (const AuditRow& r : audit_rows)
                    audit_csv.write_row(
                        {topo.ids[static_cast<std::size_t>(r.agent)], std::to_string(r.t),
                         fmt(r.r), fmt(r.R),
                         r.neighbor < 0 ? std::string()
                                        : topo.ids[static_cast<std::size_t>(r.neighbor)],
                         fmt(r.ratio), fmt(r.weight)});
                audit_rows.clear();
            }
        };
        const auto maybe_train = [&] {
            const std::size_t batch = static_cast<std::size_t>(cfg.training.batch_size);
            parallel_for(static_cast<std::size_t>(A), cfg.threads, [&](std::size_t i) {
                if (coord->amended(static_cast<int>(i)).size() < batch) return;
                auto sample = coord->amended(static_cast<int>(i)).sample(batch, rngs[i]);
                agents[i].train_step(sample);
            });
        };

        long t_global = 0;
        for (int ep = 0; ep < cfg.episodes; ++ep) {
            sim.reset();
            std::vector<Eigen::MatrixXd> prev_bundles;
            std::vector<int> prev_actions(static_cast<std::size_t>(A), 0);

            for (int k = 0; k < dpe; ++k) {
                std::vector<Eigen::MatrixXd> bundles =
                    bundles_of(observe_all(sim, topo), topo, attention);

                if (learns && k > 0) {
                    for (int i = 0; i < A; ++i) {
                        RawEntry e;
                        e.t = t_global - 1;
                        e.obs = prev_bundles[static_cast<std::size_t>(i)];
                        e.action = prev_actions[static_cast<std::size_t>(i)];
                        e.raw_reward = sim.raw_reward(topo.ids[static_cast<std::size_t>(i)]);
                        e.next_obs = bundles[static_cast<std::size_t>(i)];
                        e.terminal = false;
                        coord->record(i, std::move(e));
                    }
                    maybe_amend();
                    maybe_train();
                }

                std::vector<int> chosen(static_cast<std::size_t>(A), 0);
                if (learns) {
                    double eps = cfg.training.epsilon_end;
                    if (anneal_span > 0.0) {
                        double frac = std::min(1.0, static_cast<double>(t_global) / anneal_span);
                        eps = cfg.training.epsilon_start +
                              (cfg.training.epsilon_end - cfg.training.epsilon_start) * frac;
                    }
                    parallel_for(static_cast<std::size_t>(A), cfg.threads, [&](std::size_t i) {
                        chosen[i] = agents[i].act(bundles[i], eps, rngs[i]);
                    });
                } else if (cfg.method == Method::fixed_time) {
                    for (int i = 0; i < A; ++i)
                        chosen[static_cast<std::size_t>(i)] =
                            fixed_time_act(plans[static_cast<std::size_t>(i)], sim.state().clock);
                } else {
                    for (int i = 0; i < A; ++i)
                        chosen[static_cast<std::size_t>(i)] = max_pressure_act(
                            sim, *scenario.net.find_intersection(topo.ids[static_cast<std::size_t>(i)]));
                }

                if (scores_csv.is_open()) {
                    for (int i = 0; i < A; ++i) {
                        Eigen::VectorXd row =
                            agents[static_cast<std::size_t>(i)].attention_scores(
                                bundles[static_cast<std::size_t>(i)]);
                        const std::vector<int>& nb = topo.neighbors[static_cast<std::size_t>(i)];
                        for (Eigen::Index m = 0; m < row.size(); ++m) {
                            const std::string& member =
                                m == 0 ? topo.ids[static_cast<std::size_t>(i)]
                                       : topo.ids[static_cast<std::size_t>(nb[m - 1])];
                            scores_csv.write_row({std::to_string(ep), std::to_string(t_global),
                                                  topo.ids[static_cast<std::size_t>(i)], member,
                                                  fmt(row(m))});
                        }
                    }
                }

                std::map<std::string, int> actions;
                for (int i = 0; i < A; ++i)
                    actions[topo.ids[static_cast<std::size_t>(i)]] =
                        chosen[static_cast<std::size_t>(i)];
                sim.step(actions, cfg.action_interval);
                prev_bundles = std::move(bundles);
                prev_actions = chosen;
                ++t_global;

                if (learns && k == dpe - 1) {
                    std::vector<Eigen::MatrixXd> final_bundles =
                        bundles_of(observe_all(sim, topo), topo, attention);
                    for (int i = 0; i < A; ++i) {
                        RawEntry e;
                        e.t = t_global - 1;
                        e.obs = prev_bundles[static_cast<std::size_t>(i)];
                        e.action = prev_actions[static_cast<std::size_t>(i)];
                        e.raw_reward = sim.raw_reward(topo.ids[static_cast<std::size_t>(i)]);
                        e.next_obs = final_bundles[static_cast<std::size_t>(i)];
                        e.terminal = true;
                        coord->record(i, std::move(e));
                    }
                    maybe_amend();
                    maybe_train();
                }
            }

            if (!sim.vehicles_accounted())
                throw ContractError("vehicle conservation violated in episode " +
                                    std::to_string(ep));
            MetricsReport m = sim.metrics();
            EpisodeRow row{ep, m.avg_travel_time, static_cast<double>(m.throughput),
                           m.mean_queue};
            manifest.episodes.push_back(row);
            metrics_csv.write_row({std::to_string(ep), fmt(row.avg_travel_time),
                                   fmt(row.throughput), fmt(row.mean_queue)});
            metrics_csv.flush();
            std::cerr << method_name(user_cfg.method) << " episode " << ep + 1 << "/"
                      << cfg.episodes << ": att=" << row.avg_travel_time
                      << " thr=" << row.throughput << " queue=" << row.mean_queue << "\n";
        }

        if (learns) {
            auto named = all_named_const(agents);
            save_checkpoint(cfg.out_dir + "/checkpoint.bin", named);
        }
    } catch (const std::exception& e) {
        finish(true, e.what());
        throw;
    }
    finish(false, "");
    return manifest;
}

EpisodeRow evaluate(const ExperimentConfig& user_cfg, const std::string& checkpoint_path) {
    const ExperimentConfig cfg = pipeline_config(user_cfg);
    const bool learns = method_learns(cfg.method);
    const bool attention = cfg.method == Method::gamma_attention_reward;

    Scenario scenario = load_scenario(cfg.scenario);
    Topology topo = build_topology(scenario.net);
    const int A = static_cast<int>(topo.ids.size());
    Simulator sim(scenario.net, scenario.flows, cfg.seed);

    std::vector<Agent> agents;
    std::vector<FixedTimePlan> plans;
    if (learns) {
        Rng init_rng = Rng::stream(cfg.seed, "evaluate/init");
        for (int i = 0; i < A; ++i) {
            agents.emplace_back(topo.ids[i], agent_config_for(cfg, topo, i));
            agents.back().init(init_rng);
        }
        auto named = all_named(agents);
        load_checkpoint(checkpoint_path, named);
    } else if (cfg.method == Method::fixed_time) {
        for (int i = 0; i < A; ++i)
            plans.push_back(equal_split_plan(topo.phase_counts[i], cfg.fixed_time_duration));
    }

    const int dpe = cfg.steps_per_episode / cfg.action_interval;
    for (int k = 0; k < dpe; ++k) {
        std::vector<Eigen::MatrixXd> bundles =
            bundles_of(observe_all(sim, topo), topo, attention);
        std::map<std::string, int> actions;
        for (int i = 0; i < A; ++i) {
            const std::string& id = topo.ids[static_cast<std::size_t>(i)];
            int a = 0;
            if (learns)
                a = agents[static_cast<std::size_t>(i)].greedy_action(
                    bundles[static_cast<std::size_t>(i)]);
            else if (cfg.method == Method::fixed_time)
                a = fixed_time_act(plans[static_cast<std::size_t>(i)], sim.state().clock);
            else
                a = max_pressure_act(sim, *scenario.net.find_intersection(id));
            actions[id] = a;
        }
        sim.step(actions, cfg.action_interval);
    }

    if (!sim.vehicles_accounted())
        throw ContractError("vehicle conservation violated during evaluation");
    MetricsReport m = sim.metrics();
    return {0, m.avg_travel_time, static_cast<double>(m.throughput), m.mean_queue};
}

std::vector<SweepRow> sweep_gamma(const ExperimentConfig& cfg, const std::vector<double>& values) {
    validate_sweep_values(values);
    std::vector<SweepRow> rows;
    for (double v : values) {
        ExperimentConfig c = cfg;
        c.method = Method::gamma_reward;
        c.coordination.gamma = v;
        c.emit = {};
        c.out_dir = cfg.out_dir + "/gamma_" + fmt(v);
        RunManifest m = train(c);
        for (const EpisodeRow& r : m.episodes)
            rows.push_back({v, r.episode, r.avg_travel_time});
    }
    CsvWriter out;
    out.open(cfg.out_dir + "/sweep.csv", {"gamma", "episode", "avg_travel_time_s"});
    for (const SweepRow& r : rows)
        out.write_row({fmt(r.gamma), std::to_string(r.episode), fmt(r.avg_travel_time)});
    return rows;
}

std::vector<CompareRow> compare(const ExperimentConfig& cfg, const std::vector<Method>& methods) {
    if (methods.empty()) throw ValidationError("compare: at least one method required");
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (methods[i] == methods[j])
                throw ValidationError("compare: duplicate method " + method_name(methods[i]));
    std::vector<CompareRow> rows;
    for (Method m : methods) {
        ExperimentConfig c = cfg;
        c.method = m;
        c.emit = {};
        c.out_dir = cfg.out_dir + "/" + method_name(m);
        RunManifest man = train(c);
        const EpisodeRow& last = man.episodes.back();
        rows.push_back({method_name(m), last.avg_travel_time, last.throughput, last.mean_queue});
    }
    CsvWriter out;
    out.open(cfg.out_dir + "/compare.csv",
             {"method", "avg_travel_time_s", "throughput", "mean_queue"});
    for (const CompareRow& r : rows)
        out.write_row({r.method, fmt(r.avg_travel_time), fmt(r.throughput), fmt(r.mean_queue)});
    return rows;
}

} // namespace siglab
