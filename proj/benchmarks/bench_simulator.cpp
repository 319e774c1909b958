#include "siglab/roadnet.hpp"
#include "siglab/simulator.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <string>

using namespace siglab;

namespace {

SyntheticScenario grid_scenario() {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::grid;
    spec.rows = 3;
    spec.cols = 3;
    return generate_synthetic(spec);
}

std::map<std::string, int> zero_actions(const Simulator& sim) {
    std::map<std::string, int> actions;
    for (const std::string& id : sim.agent_ids()) actions[id] = 0;
    return actions;
}

} // namespace

static void BM_SimulatorTick(benchmark::State& state) {
    SyntheticScenario sc = grid_scenario();
    Simulator sim(sc.net, sc.flows, 1);
    auto actions = zero_actions(sim);
    for (auto _ : state) {
        sim.step(actions, 1.0);
        if (sim.state().clock > 3000.0) {
            state.PauseTiming();
            sim.reset();
            state.ResumeTiming();
        }
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimulatorTick);

static void BM_SimulatorDecisionInterval(benchmark::State& state) {
    SyntheticScenario sc = grid_scenario();
    Simulator sim(sc.net, sc.flows, 1);
    auto actions = zero_actions(sim);
    for (auto _ : state) {
        sim.step(actions, 10.0);
        if (sim.state().clock > 3000.0) {
            state.PauseTiming();
            sim.reset();
            state.ResumeTiming();
        }
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimulatorDecisionInterval);

static void BM_ObserveAllAgents(benchmark::State& state) {
    SyntheticScenario sc = grid_scenario();
    Simulator sim(sc.net, sc.flows, 1);
    auto actions = zero_actions(sim);
    sim.step(actions, 600.0); // populate queues
    for (auto _ : state) {
        for (const std::string& id : sim.agent_ids())
            benchmark::DoNotOptimize(sim.observe(id));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(sim.agent_ids().size()));
}
BENCHMARK(BM_ObserveAllAgents);

BENCHMARK_MAIN();
