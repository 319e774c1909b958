#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace siglab {

/// One permitted lane-to-lane movement through an intersection.
struct Movement {
    std::string in_lane;
    std::string out_lane;
    auto operator<=>(const Movement&) const = default;
};

struct Phase {
    int index = 0;
    std::vector<Movement> movements;
    /// Green duration hint (seconds) carried from the source document;
    /// consumed only by fixed-time plans.
    double default_duration = 30.0;
    bool operator==(const Phase&) const = default;
};

struct Intersection {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    std::vector<std::string> entering_lanes;
    std::vector<std::string> exiting_lanes;
    std::vector<Phase> phases;
    /// Right-turn movements: always green, never listed in a phase.
    std::vector<Movement> unsignalized_movements;
    bool signalized = false;
    bool operator==(const Intersection&) const = default;
};

struct Link {
    std::string id;
    std::string from;
    std::string to;
    double length = 0.0;          // meters
    double free_flow_speed = 0.0; // m/s
    int lane_count = 1;
    bool operator==(const Link&) const = default;
};

struct RoadNetwork {
    std::vector<Intersection> intersections;
    std::vector<Link> links;
    /// Adjacency over signalized intersections only (agents' N_i).
    /// Values are sorted and unique; the relation is symmetric.
    std::map<std::string, std::vector<std::string>> neighbor_map;

    const Intersection* find_intersection(const std::string& id) const;
    const Link* find_link(const std::string& id) const;
    std::vector<std::string> signalized_ids() const;

    bool operator==(const RoadNetwork&) const = default;
};

struct FlowSpec {
    std::vector<std::string> route; // link ids, contiguous in the graph
    double start_time = 0.0;
    double end_time = std::numeric_limits<double>::infinity();
    double interval = 1.0;          // headway seconds, one vehicle per interval
    double vehicle_length = 5.0;    // meters
    double vehicle_max_speed = 11.11;
    bool operator==(const FlowSpec&) const = default;
};

inline std::string lane_id(const std::string& road, int lane_index) {
    return road + "_" + std::to_string(lane_index);
}

RoadNetwork parse_roadnet(const std::string& bytes);
std::vector<FlowSpec> parse_flow(const std::string& bytes, const RoadNetwork& net);

/// Checks every structural invariant and fills the derived fields
/// (entering/exiting lane lists, neighbor_map). parse_roadnet calls this;
/// hand-built networks must call it before use.
void validate_and_index(RoadNetwork& net);

std::string serialize_roadnet(const RoadNetwork& net);
std::string serialize_flow(const std::vector<FlowSpec>& flows);

/// True when the two movements' paths cross inside the intersection
/// (chord-interleaving test on the intersection circle; movements that share
/// an entry or exit point merge or diverge rather than cross).
bool movements_conflict(const RoadNetwork& net, const Intersection& inter,
                        const Movement& a, const Movement& b);

struct SyntheticSpec {
    enum class Kind { arterial, grid };
    Kind kind = Kind::arterial;
    int k = 6;     // arterial: signalized intersections in a line
    int rows = 3;  // grid
    int cols = 3;
    bool one_way = false;
    double link_length = 300.0;
    double free_flow_speed = 11.11; // 40 km/h
    int lanes = 1;                  // lanes per movement
    double flow_rate = 300.0;       // vehicles per 300 s, network total
};

struct SyntheticScenario {
    RoadNetwork net;
    std::vector<FlowSpec> flows;
};

SyntheticScenario generate_synthetic(const SyntheticSpec& spec);

} // namespace siglab
