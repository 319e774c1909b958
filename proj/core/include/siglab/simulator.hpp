#pragma once

#include "siglab/roadnet.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

namespace siglab {

struct SimConfig {
    double saturation_rate = 0.5;         // vehicles/s per movement
    double all_red_time = 2.0;            // lost time on phase switch, seconds
    double min_green = 10.0;              // seconds a phase must hold
    double lane_capacity = 40.0;          // vehicles per lane, aggregated per link
    double waiting_speed_threshold = 0.1; // m/s; queued vehicles have speed 0
};

struct Observation {
    std::vector<int> waiting_per_entering_lane;
    std::vector<int> count_per_exiting_lane;
    std::vector<double> current_phase; // one-hot
    bool operator==(const Observation&) const = default;
};

/// Flattens an observation for network input; counts are divided by
/// count_scale, the one-hot block is untouched.
std::vector<double> observation_vector(const Observation& o, double count_scale = 40.0);

struct MetricsReport {
    double avg_travel_time = 0.0; // completed: exit-enter; active: clock-enter
    std::int64_t throughput = 0;  // completed trips
    double mean_queue = 0.0;      // time-average of total queued vehicles
    std::int64_t spawned = 0;
    std::int64_t active = 0;
};

struct VehicleRecord {
    std::int64_t id = -1;
    std::vector<std::string> route; // remaining link ids, front = current
    double spawn_time = 0.0;
    double current_speed = 0.0;
};

struct CompletedTrip {
    std::int64_t id;
    double enter;
    double exit;
};

struct TransitVehicle {
    std::int64_t vehicle;
    double arrival; // clock at which it reaches the downstream stop line
    int lane;       // flat lane it is attributed to while on the link
};

enum class VehicleLoc : std::uint8_t { transit, queued, done };

struct VehicleState {
    int route_ref = 0; // >= 0: flow route index; < 0: injected route ~route_ref
    int route_pos = 0; // index of current link within the route
    double spawn_time = 0.0;
    VehicleLoc loc = VehicleLoc::transit;
};

struct SimState {
    double clock = 0.0;
    std::vector<std::deque<std::int64_t>> lane_queues; // per flat lane, FIFO
    std::vector<std::deque<TransitVehicle>> link_transit; // per link, arrival-sorted
    std::vector<int> active_phase;        // per agent
    std::vector<double> phase_elapsed;    // per agent, includes all-red time
    std::vector<double> all_red_remaining;
    std::vector<double> movement_credit;  // per movement, in [0,1)
    std::vector<CompletedTrip> completed;
    std::vector<VehicleState> vehicles;   // index = vehicle id
    std::vector<double> flow_next_spawn;  // next spawn time per flow
    double queue_integral = 0.0;
    std::int64_t ticks = 0;
};

/// Deterministic point-queue traffic engine. Vehicles traverse links at the
/// link's free-flow speed (vehicle max speed is carried but not binding, which
/// keeps every link FIFO), wait in unbounded stop-line queues, and discharge
/// at the saturation rate while their movement is green and the downstream
/// link has spare capacity. Single-writer: step() mutates state; the
/// read-only accessors may run concurrently between steps.
class Simulator {
public:
    Simulator(RoadNetwork net, std::vector<FlowSpec> flows, std::uint64_t seed,
              SimConfig cfg = {});

    /// Advances dt seconds (a positive whole number of 1 s ticks). Actions
    /// apply at the first tick; a switch before min_green elapses is ignored.
    void step(const std::map<std::string, int>& actions, double dt);

    Observation observe(const std::string& intersection_id) const;
    double raw_reward(const std::string& intersection_id) const;
    MetricsReport metrics() const;

    /// Restores the spawn-ready initial state (clock 0, empty network).
    void reset();

    const RoadNetwork& network() const { return net_; }
    const std::vector<FlowSpec>& flows() const { return flows_; }
    const SimConfig& config() const { return cfg_; }
    const SimState& state() const { return state_; }
    SimState& mutable_state() { return state_; }

    const std::vector<std::string>& agent_ids() const { return agent_ids_; }
    int agent_index(const std::string& intersection_id) const;
    int phase_count(const std::string& intersection_id) const;
    int lane_index(const std::string& lane) const;
    int link_of_lane(int flat_lane) const;
    std::int64_t queued_on_lane(const std::string& lane) const;

    VehicleRecord vehicle_record(std::int64_t id) const;
    /// spawned == queued + in transit + completed
    bool vehicles_accounted() const;
    std::int64_t spawned_count() const;

    /// Test/benchmark hook: place a fresh vehicle at the tail of `lane`
    /// with the given remaining route (must start with the lane's link).
    std::int64_t inject_queued(const std::string& lane,
                               const std::vector<std::string>& remaining_route);
    /// Test/benchmark hook: place a fresh vehicle in transit on the first
    /// route link, arriving at the stop line at `arrival`.
    std::int64_t inject_transit(const std::vector<std::string>& remaining_route,
                                double arrival, int lane_in_link = 0);

private:
    struct LinkPlan {
        std::string id;
        int from = -1; // intersection plan index
        int to = -1;
        double travel_time = 0.0;
        int first_lane = 0;
        int lane_count = 0;
        double capacity = 0.0;
        std::map<int, std::vector<int>> lanes_to_next; // next link -> flat in-lanes
    };
    struct MovementPlan {
        int in_lane = -1;
        int out_lane = -1;
        int out_link = -1;
        int intersection = -1; // plan index
    };
    struct PhasePlan {
        std::vector<int> movements; // indices into movements_
    };
    struct IntersectionPlan {
        std::string id;
        bool signalized = false;
        int agent = -1; // index into agent arrays, -1 for virtual
        std::vector<int> entering_lanes;
        std::vector<int> exiting_lanes;
        std::vector<PhasePlan> phases;
        std::vector<int> always_green; // right-turn movement indices
        std::vector<int> all_movements;
    };

    void compile_plan();
    void tick(const std::map<std::string, int>* actions);
    void arrive(std::int64_t vehicle, int link, double arrival_time);
    bool try_discharge(const MovementPlan& m);
    std::int64_t link_occupancy(int link) const;
    std::int64_t total_queued() const;
    std::int64_t register_vehicle(const std::vector<std::string>& remaining_route);

    RoadNetwork net_;
    std::vector<FlowSpec> flows_;
    SimConfig cfg_;
    std::uint64_t seed_;

    std::vector<LinkPlan> links_;
    std::vector<IntersectionPlan> inters_;
    std::vector<MovementPlan> movements_;
    std::vector<std::string> lane_ids_;              // flat lane -> id
    std::map<std::string, int> lane_lookup_;
    std::map<std::string, int> link_lookup_;
    std::map<std::string, int> inter_lookup_;
    std::vector<std::string> agent_ids_;
    std::vector<int> agent_plan_;                    // agent -> intersection plan index
    std::vector<std::vector<int>> flow_routes_;  // flow -> link indices
    std::vector<std::vector<int>> extra_routes_; // injected vehicles' routes

    SimState state_;
};

} // namespace siglab
