#include "siglab/config.hpp"

#include "siglab/errors.hpp"
#include "siglab/hash.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace siglab {

namespace {

using nlohmann::json;

void check_keys(const json& o, const char* where, const std::set<std::string>& allowed) {
    for (auto it = o.begin(); it != o.end(); ++it)
        if (!allowed.contains(it.key()))
            throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
}

const json* maybe(const json& o, const char* key) {
    auto it = o.find(key);
    return it == o.end() ? nullptr : &*it;
}

double get_num(const json& o, const char* key, double fallback) {
    const json* v = maybe(o, key);
    if (!v) return fallback;
    if (!v->is_number()) throw ValidationError(std::string("config: '") + key + "' must be a number");
    return v->get<double>();
}

int get_int(const json& o, const char* key, int fallback) {
    const json* v = maybe(o, key);
    if (!v) return fallback;
    if (!v->is_number_integer())
        throw ValidationError(std::string("config: '") + key + "' must be an integer");
    return v->get<int>();
}

bool get_bool(const json& o, const char* key, bool fallback) {
    const json* v = maybe(o, key);
    if (!v) return fallback;
    if (!v->is_boolean())
        throw ValidationError(std::string("config: '") + key + "' must be a boolean");
    return v->get<bool>();
}

std::string get_str(const json& o, const char* key, const std::string& fallback) {
    const json* v = maybe(o, key);
    if (!v) return fallback;
    if (!v->is_string())
        throw ValidationError(std::string("config: '") + key + "' must be a string");
    return v->get<std::string>();
}

void require_range(double v, double lo, double hi, const char* what) {
    if (!(v >= lo && v <= hi)) {
        std::ostringstream os;
        os << "config: " << what << " must be in [" << lo << ", " << hi << "], got " << v;
        throw ValidationError(os.str());
    }
}

void require_min(double v, double lo, const char* what) {
    if (!(v >= lo)) {
        std::ostringstream os;
        os << "config: " << what << " must be >= " << lo << ", got " << v;
        throw ValidationError(os.str());
    }
}

ScenarioConfig parse_scenario(const json& o) {
    check_keys(o, "scenario", {"roadnet", "flow", "synthetic"});
    ScenarioConfig sc;
    bool has_files = maybe(o, "roadnet") || maybe(o, "flow");
    bool has_synth = maybe(o, "synthetic");
    if (has_files == has_synth)
        throw ValidationError(
            "config: scenario needs either roadnet+flow paths or a synthetic block");
    if (has_files) {
        sc.roadnet_path = get_str(o, "roadnet", "");
        sc.flow_path = get_str(o, "flow", "");
        if (sc.roadnet_path.empty() || sc.flow_path.empty())
            throw ValidationError("config: scenario file paths must both be given");
        if (!std::filesystem::exists(sc.roadnet_path))
            throw ValidationError("config: roadnet file does not exist: " + sc.roadnet_path);
        if (!std::filesystem::exists(sc.flow_path))
            throw ValidationError("config: flow file does not exist: " + sc.flow_path);
        return sc;
    }
    const json& s = o.at("synthetic");
    if (!s.is_object()) throw ValidationError("config: synthetic must be an object");
    check_keys(s, "scenario.synthetic",
               {"kind", "k", "rows", "cols", "one_way", "link_length", "free_flow_speed",
                "lanes", "flow_rate"});
    SyntheticSpec spec;
    std::string kind = get_str(s, "kind", "arterial");
    if (kind == "arterial") spec.kind = SyntheticSpec::Kind::arterial;
    else if (kind == "grid") spec.kind = SyntheticSpec::Kind::grid;
    else throw ValidationError("config: synthetic kind must be 'arterial' or 'grid'");
    spec.k = get_int(s, "k", spec.k);
    spec.rows = get_int(s, "rows", spec.rows);
    spec.cols = get_int(s, "cols", spec.cols);
    spec.one_way = get_bool(s, "one_way", spec.one_way);
    spec.link_length = get_num(s, "link_length", spec.link_length);
    spec.free_flow_speed = get_num(s, "free_flow_speed", spec.free_flow_speed);
    spec.lanes = get_int(s, "lanes", spec.lanes);
    spec.flow_rate = get_num(s, "flow_rate", spec.flow_rate);
    sc.synthetic = spec;
    return sc;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::fixed_time: return "fixed_time";
        case Method::max_pressure: return "max_pressure";
        case Method::iql: return "iql";
        case Method::gamma_reward: return "gamma_reward";
        case Method::gamma_attention_reward: return "gamma_attention_reward";
    }
    throw ContractError("unreachable method");
}

Method method_from_name(const std::string& name) {
    if (name == "fixed_time") return Method::fixed_time;
    if (name == "max_pressure") return Method::max_pressure;
    if (name == "iql") return Method::iql;
    if (name == "gamma_reward") return Method::gamma_reward;
    if (name == "gamma_attention_reward") return Method::gamma_attention_reward;
    throw ValidationError("config: unknown method '" + name + "'");
}

bool method_learns(Method m) {
    return m == Method::iql || m == Method::gamma_reward ||
           m == Method::gamma_attention_reward;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!root.is_object()) throw ParseError("config: top level must be an object");
    check_keys(root, "config",
               {"scenario", "method", "coordination", "agent", "episodes", "steps_per_episode",
                "action_interval", "min_steps_per_update", "fixed_time_duration", "seed",
                "out_dir", "threads", "emit"});

    ExperimentConfig cfg;
    const json* sc = maybe(root, "scenario");
    if (!sc) throw ValidationError("config: scenario is required");
    cfg.scenario = parse_scenario(*sc);
    cfg.method = method_from_name(get_str(root, "method", "gamma_reward"));

    const json* coord = maybe(root, "coordination");
    if (coord) {
        if (!method_learns(cfg.method) || cfg.method == Method::iql)
            throw ValidationError("config: coordination block is only valid for gamma_reward "
                                  "and gamma_attention_reward");
        check_keys(*coord, "coordination", {"gamma", "n", "c", "buffer_capacity"});
        cfg.coordination.gamma = get_num(*coord, "gamma", cfg.coordination.gamma);
        cfg.coordination.n = get_int(*coord, "n", cfg.coordination.n);
        cfg.coordination.c = get_num(*coord, "c", cfg.coordination.c);
        int cap = get_int(*coord, "buffer_capacity",
                          static_cast<int>(cfg.coordination.capacity));
        require_min(cap, 1, "coordination.buffer_capacity");
        cfg.coordination.capacity = static_cast<std::size_t>(cap);
        require_range(cfg.coordination.gamma, 0.0, 1.0, "coordination.gamma");
        require_min(cfg.coordination.n, 1, "coordination.n");
        if (cfg.coordination.c <= 0.0)
            throw ValidationError("config: coordination.c must be > 0");
    }

    const json* ag = maybe(root, "agent");
    if (ag) {
        if (!method_learns(cfg.method))
            throw ValidationError("config: agent block is only valid for learning methods");
        check_keys(*ag, "agent",
                   {"hidden", "attention_dim", "lr", "gamma_prime", "target_sync_period",
                    "batch_size", "epsilon_start", "epsilon_end", "epsilon_fraction"});
        if (maybe(*ag, "attention_dim") && cfg.method != Method::gamma_attention_reward)
            throw ValidationError(
                "config: agent.attention_dim is only valid for gamma_attention_reward");
        TrainingConfig& t = cfg.training;
        t.hidden = get_int(*ag, "hidden", t.hidden);
        t.attention_dim = get_int(*ag, "attention_dim", t.attention_dim);
        t.lr = get_num(*ag, "lr", t.lr);
        t.gamma_prime = get_num(*ag, "gamma_prime", t.gamma_prime);
        t.target_sync_period = get_int(*ag, "target_sync_period", t.target_sync_period);
        t.batch_size = get_int(*ag, "batch_size", t.batch_size);
        t.epsilon_start = get_num(*ag, "epsilon_start", t.epsilon_start);
        t.epsilon_end = get_num(*ag, "epsilon_end", t.epsilon_end);
        t.epsilon_fraction = get_num(*ag, "epsilon_fraction", t.epsilon_fraction);
        require_min(t.hidden, 1, "agent.hidden");
        require_min(t.attention_dim, 1, "agent.attention_dim");
        if (t.lr <= 0.0) throw ValidationError("config: agent.lr must be > 0");
        require_range(t.gamma_prime, 0.0, 1.0, "agent.gamma_prime");
        require_min(t.target_sync_period, 1, "agent.target_sync_period");
        require_min(t.batch_size, 1, "agent.batch_size");
        require_range(t.epsilon_start, 0.0, 1.0, "agent.epsilon_start");
        require_range(t.epsilon_end, 0.0, t.epsilon_start, "agent.epsilon_end");
        if (!(t.epsilon_fraction > 0.0 && t.epsilon_fraction <= 1.0))
            throw ValidationError("config: agent.epsilon_fraction must be in (0, 1]");
    }

    cfg.episodes = get_int(root, "episodes", cfg.episodes);
    cfg.steps_per_episode = get_int(root, "steps_per_episode", cfg.steps_per_episode);
    cfg.action_interval = get_int(root, "action_interval", cfg.action_interval);
    cfg.min_steps_per_update = get_int(root, "min_steps_per_update", cfg.min_steps_per_update);
    cfg.fixed_time_duration = get_num(root, "fixed_time_duration", cfg.fixed_time_duration);
    require_min(cfg.episodes, 1, "episodes");
    require_min(cfg.steps_per_episode, 1, "steps_per_episode");
    require_min(cfg.action_interval, 1, "action_interval");
    require_min(cfg.min_steps_per_update, 1, "min_steps_per_update");
    if (cfg.steps_per_episode % cfg.action_interval != 0)
        throw ValidationError("config: steps_per_episode must be a multiple of action_interval");
    if (cfg.fixed_time_duration <= 0.0)
        throw ValidationError("config: fixed_time_duration must be > 0");

    const json* seed = maybe(root, "seed");
    if (seed) {
        if (!seed->is_number_unsigned() && !seed->is_number_integer())
            throw ValidationError("config: seed must be a nonnegative integer");
        if (seed->is_number_integer() && seed->get<long long>() < 0)
            throw ValidationError("config: seed must be a nonnegative integer");
        cfg.seed = seed->get<std::uint64_t>();
    }
    cfg.out_dir = get_str(root, "out_dir", cfg.out_dir);
    cfg.threads = get_int(root, "threads", cfg.threads);
    require_min(cfg.threads, 1, "threads");

    const json* emit = maybe(root, "emit");
    if (emit) {
        check_keys(*emit, "emit", {"audit", "scores"});
        cfg.emit.audit = get_bool(*emit, "audit", false);
        cfg.emit.scores = get_bool(*emit, "scores", false);
        if (cfg.emit.audit && !method_learns(cfg.method))
            throw ValidationError("config: emit.audit requires a learning method");
        if (cfg.emit.scores && cfg.method != Method::gamma_attention_reward)
            throw ValidationError("config: emit.scores requires gamma_attention_reward");
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file(path));
}

std::string serialize_experiment_config(const ExperimentConfig& cfg) {
    json root;
    json sc;
    if (cfg.scenario.synthetic) {
        const SyntheticSpec& s = *cfg.scenario.synthetic;
        json sy;
        sy["kind"] = s.kind == SyntheticSpec::Kind::arterial ? "arterial" : "grid";
        if (s.kind == SyntheticSpec::Kind::arterial) {
            sy["k"] = s.k;
        } else {
            sy["rows"] = s.rows;
            sy["cols"] = s.cols;
            sy["one_way"] = s.one_way;
        }
        sy["link_length"] = s.link_length;
        sy["free_flow_speed"] = s.free_flow_speed;
        sy["lanes"] = s.lanes;
        sy["flow_rate"] = s.flow_rate;
        sc["synthetic"] = sy;
    } else {
        sc["roadnet"] = cfg.scenario.roadnet_path;
        sc["flow"] = cfg.scenario.flow_path;
    }
    root["scenario"] = sc;
    root["method"] = method_name(cfg.method);
    if (cfg.method == Method::gamma_reward || cfg.method == Method::gamma_attention_reward) {
        root["coordination"] = {{"gamma", cfg.coordination.gamma},
                                {"n", cfg.coordination.n},
                                {"c", cfg.coordination.c},
                                {"buffer_capacity", cfg.coordination.capacity}};
    }
    if (method_learns(cfg.method)) {
        json ag = {{"hidden", cfg.training.hidden},
                   {"lr", cfg.training.lr},
                   {"gamma_prime", cfg.training.gamma_prime},
                   {"target_sync_period", cfg.training.target_sync_period},
                   {"batch_size", cfg.training.batch_size},
                   {"epsilon_start", cfg.training.epsilon_start},
                   {"epsilon_end", cfg.training.epsilon_end},
                   {"epsilon_fraction", cfg.training.epsilon_fraction}};
        if (cfg.method == Method::gamma_attention_reward)
            ag["attention_dim"] = cfg.training.attention_dim;
        root["agent"] = ag;
    }
    root["episodes"] = cfg.episodes;
    root["steps_per_episode"] = cfg.steps_per_episode;
    root["action_interval"] = cfg.action_interval;
    root["min_steps_per_update"] = cfg.min_steps_per_update;
    root["fixed_time_duration"] = cfg.fixed_time_duration;
    root["seed"] = cfg.seed;
    root["out_dir"] = cfg.out_dir;
    root["threads"] = cfg.threads;
    root["emit"] = {{"audit", cfg.emit.audit}, {"scores", cfg.emit.scores}};
    return root.dump(2);
}

void validate_sweep_values(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("sweep: at least one gamma value required");
    for (std::size_t i = 0; i < values.size(); ++i) {
        require_range(values[i], 0.0, 1.0, "sweep gamma");
        for (std::size_t j = 0; j < i; ++j)
            if (values[i] == values[j])
                throw ValidationError("sweep: duplicate gamma value");
    }
}

std::string serialize_manifest(const RunManifest& m) {
    json root;
    root["config"] = json::parse(m.config_json);
    root["input_hash"] = m.input_hash;
    root["wall_seconds"] = m.wall_seconds;
    json rows = json::array();
    for (const EpisodeRow& r : m.episodes)
        rows.push_back({{"episode", r.episode},
                        {"avg_travel_time", r.avg_travel_time},
                        {"throughput", r.throughput},
                        {"mean_queue", r.mean_queue}});
    root["episodes"] = rows;
    root["failed"] = m.failed;
    if (m.failed) root["error"] = m.error;
    Method method = method_from_name(root["config"]["method"].get<std::string>());
    root["coordination_active"] =
        method == Method::gamma_reward || method == Method::gamma_attention_reward;
    return root.dump(2);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ValidationError("short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string hash_file_hex(const std::string& path) {
    Fnv64 h;
    h.update(read_file(path));
    return h.hex();
}

} // namespace siglab
