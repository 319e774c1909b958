#include "siglab/agent.hpp"
#include "siglab/rng.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <vector>

using namespace siglab;
using Eigen::MatrixXd;

namespace {

AgentConfig bench_config(bool attention) {
    AgentConfig cfg;
    cfg.obs_dim = 28; // grid intersection observation width
    cfg.actions = 4;
    cfg.attention = attention;
    return cfg;
}

std::vector<Experience> make_batch(Rng& rng, const AgentConfig& cfg, int members, int n) {
    std::vector<Experience> out;
    for (int k = 0; k < n; ++k) {
        MatrixXd obs(cfg.obs_dim, members);
        MatrixXd next(cfg.obs_dim, members);
        for (int i = 0; i < obs.size(); ++i) obs(i) = rng.uniform01();
        for (int i = 0; i < next.size(); ++i) next(i) = rng.uniform01();
        out.push_back({obs, static_cast<int>(rng.below(4)), -rng.uniform01() * 20.0, next, false});
    }
    return out;
}

} // namespace

static void BM_TrainStepPlain(benchmark::State& state) {
    AgentConfig cfg = bench_config(false);
    Agent agent("bench", cfg);
    Rng rng = Rng::stream(1, "bench/plain");
    agent.init(rng);
    auto pool = make_batch(rng, cfg, 1, 256);
    std::vector<const Experience*> batch(32);
    for (auto _ : state) {
        for (auto& b : batch) b = &pool[rng.below(pool.size())];
        benchmark::DoNotOptimize(agent.train_step(batch));
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStepPlain);

static void BM_TrainStepAttention(benchmark::State& state) {
    AgentConfig cfg = bench_config(true);
    Agent agent("bench", cfg);
    Rng rng = Rng::stream(1, "bench/att");
    agent.init(rng);
    auto pool = make_batch(rng, cfg, 5, 256); // self + four neighbors
    std::vector<const Experience*> batch(32);
    for (auto _ : state) {
        for (auto& b : batch) b = &pool[rng.below(pool.size())];
        benchmark::DoNotOptimize(agent.train_step(batch));
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStepAttention);

static void BM_ActGreedy(benchmark::State& state) {
    AgentConfig cfg = bench_config(true);
    Agent agent("bench", cfg);
    Rng rng = Rng::stream(2, "bench/act");
    agent.init(rng);
    MatrixXd bundle(cfg.obs_dim, 5);
    for (int i = 0; i < bundle.size(); ++i) bundle(i) = rng.uniform01();
    for (auto _ : state) benchmark::DoNotOptimize(agent.act(bundle, 0.05, rng));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ActGreedy);
