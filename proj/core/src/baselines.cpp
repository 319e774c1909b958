#include "siglab/baselines.hpp"

#include "siglab/errors.hpp"

#include <cmath>

namespace siglab {

FixedTimePlan equal_split_plan(int phases, double duration) {
    if (phases <= 0) throw ContractError("fixed-time plan needs at least one phase");
    if (duration <= 0.0) throw ContractError("fixed-time phase duration must be positive");
    return {std::vector<double>(static_cast<std::size_t>(phases), duration)};
}

int fixed_time_act(const FixedTimePlan& plan, double clock) {
    if (plan.durations.empty()) throw ContractError("empty fixed-time plan");
    double cycle = 0.0;
    for (double d : plan.durations) {
        if (d <= 0.0) throw ContractError("fixed-time durations must be positive");
        cycle += d;
    }
    double within = std::fmod(clock, cycle);
    if (within < 0.0) within += cycle;
    double acc = 0.0;
    for (std::size_t k = 0; k < plan.durations.size(); ++k) {
        acc += plan.durations[k];
        if (within < acc) return static_cast<int>(k);
    }
    return 0; // within == cycle after fp roundoff wraps to the first phase
}

std::vector<double> phase_pressures(const Simulator& sim, const Intersection& inter) {
    std::vector<double> pressures;
    pressures.reserve(inter.phases.size());
    for (const Phase& phase : inter.phases) {
        double p = 0.0;
        for (const Movement& m : phase.movements)
            p += static_cast<double>(sim.queued_on_lane(m.in_lane)) -
                 static_cast<double>(sim.queued_on_lane(m.out_lane));
        pressures.push_back(p);
    }
    return pressures;
}

int max_pressure_act(const Simulator& sim, const Intersection& inter) {
    std::vector<double> pressures = phase_pressures(sim, inter);
    if (pressures.empty()) throw ContractError("max-pressure on a phaseless intersection");
    int best = 0;
    for (int k = 1; k < static_cast<int>(pressures.size()); ++k)
        if (pressures[k] > pressures[best]) best = k;
    return best;
}

ExperimentConfig iql_mode(ExperimentConfig cfg) {
    cfg.method = Method::iql;
    cfg.coordination.gamma = 0.0;
    return cfg;
}

} // namespace siglab
