#pragma once

#include "siglab/config.hpp"
#include "siglab/roadnet.hpp"
#include "siglab/simulator.hpp"

#include <vector>

namespace siglab {

/// Cyclic plan: phase k holds for durations[k] seconds, then the next phase,
/// wrapping at the end.
struct FixedTimePlan {
    std::vector<double> durations;
};

FixedTimePlan equal_split_plan(int phases, double duration);

/// Phase index active at `clock` seconds under the plan's cycle.
int fixed_time_act(const FixedTimePlan& plan, double clock);

/// Per-phase pressure: sum over the phase's movements of
/// (entering-lane queue - exiting-lane queue).
std::vector<double> phase_pressures(const Simulator& sim, const Intersection& inter);

/// Argmax-pressure phase, ties to the lowest index. Stateless; the
/// simulator's minimum-green hold applies when the action is executed.
int max_pressure_act(const Simulator& sim, const Intersection& inter);

/// The gamma-Reward pipeline configured as independent Q-learning: spatial
/// discount zero and attention disabled, everything else untouched.
ExperimentConfig iql_mode(ExperimentConfig cfg);

} // namespace siglab
