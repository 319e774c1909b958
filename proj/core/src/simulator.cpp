#include "siglab/simulator.hpp"

#include "siglab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace siglab {

namespace {

constexpr double kEps = 1e-9;

const std::vector<int>& route_of(const std::vector<std::vector<int>>& flow_routes,
                                 const std::vector<std::vector<int>>& extra_routes,
                                 const VehicleState& v) {
    return v.route_ref >= 0 ? flow_routes[v.route_ref] : extra_routes[~v.route_ref];
}

// keeps the per-link deque sorted by arrival; ties keep insertion order
void push_transit(std::deque<TransitVehicle>& transit, TransitVehicle tv) {
    auto pos = transit.end();
    while (pos != transit.begin() && std::prev(pos)->arrival > tv.arrival + 1e-12) --pos;
    transit.insert(pos, tv);
}

} // namespace

std::vector<double> observation_vector(const Observation& o, double count_scale) {
    std::vector<double> v;
    v.reserve(o.waiting_per_entering_lane.size() + o.count_per_exiting_lane.size() +
              o.current_phase.size());
    for (int w : o.waiting_per_entering_lane) v.push_back(w / count_scale);
    for (int c : o.count_per_exiting_lane) v.push_back(c / count_scale);
    for (double p : o.current_phase) v.push_back(p);
    return v;
}

Simulator::Simulator(RoadNetwork net, std::vector<FlowSpec> flows, std::uint64_t seed,
                     SimConfig cfg)
    : net_(std::move(net)), flows_(std::move(flows)), cfg_(cfg), seed_(seed) {
    compile_plan();
    reset();
}

void Simulator::compile_plan() {
    links_.reserve(net_.links.size());
    for (const auto& i : net_.intersections) {
        inter_lookup_[i.id] = static_cast<int>(inters_.size());
        IntersectionPlan plan;
        plan.id = i.id;
        plan.signalized = i.signalized;
        if (i.signalized) {
            plan.agent = static_cast<int>(agent_ids_.size());
            agent_ids_.push_back(i.id);
            agent_plan_.push_back(static_cast<int>(inters_.size()));
        }
        inters_.push_back(std::move(plan));
    }
    int next_lane = 0;
    for (const auto& l : net_.links) {
        LinkPlan plan;
        plan.id = l.id;
        plan.from = inter_lookup_.at(l.from);
        plan.to = inter_lookup_.at(l.to);
        plan.travel_time = l.length / l.free_flow_speed;
        plan.first_lane = next_lane;
        plan.lane_count = l.lane_count;
        plan.capacity = cfg_.lane_capacity * l.lane_count;
        link_lookup_[l.id] = static_cast<int>(links_.size());
        for (int i = 0; i < l.lane_count; ++i) {
            lane_ids_.push_back(lane_id(l.id, i));
            lane_lookup_[lane_ids_.back()] = next_lane++;
        }
        links_.push_back(std::move(plan));
    }

    auto lane_flat = [&](const std::string& lane) {
        auto it = lane_lookup_.find(lane);
        if (it == lane_lookup_.end())
            throw ContractError("simulator: unknown lane '" + lane + "'");
        return it->second;
    };
    auto add_movement = [&](const Movement& m, int inter_idx) {
        MovementPlan plan;
        plan.in_lane = lane_flat(m.in_lane);
        plan.out_lane = lane_flat(m.out_lane);
        plan.out_link = link_of_lane(plan.out_lane);
        plan.intersection = inter_idx;
        movements_.push_back(plan);
        return static_cast<int>(movements_.size() - 1);
    };
    for (std::size_t ii = 0; ii < net_.intersections.size(); ++ii) {
        const Intersection& inter = net_.intersections[ii];
        IntersectionPlan& plan = inters_[ii];
        for (const auto& lane : inter.entering_lanes)
            plan.entering_lanes.push_back(lane_flat(lane));
        for (const auto& lane : inter.exiting_lanes)
            plan.exiting_lanes.push_back(lane_flat(lane));
        // deduplicate identical lane pairs shared between phases
        std::map<std::pair<int, int>, int> seen;
        auto intern = [&](const Movement& m) {
            int in = lane_flat(m.in_lane);
            int out = lane_flat(m.out_lane);
            auto it = seen.find({in, out});
            if (it == seen.end()) {
                int idx = add_movement(m, static_cast<int>(ii));
                it = seen.emplace(std::make_pair(in, out), idx).first;
                plan.all_movements.push_back(idx);
            }
            return it->second;
        };
        for (const Phase& p : inter.phases) {
            PhasePlan pp;
            for (const Movement& m : p.movements) pp.movements.push_back(intern(m));
            plan.phases.push_back(std::move(pp));
        }
        for (const Movement& m : inter.unsignalized_movements)
            plan.always_green.push_back(intern(m));
    }
    for (const auto& m : movements_) {
        LinkPlan& in_link = links_[link_of_lane(m.in_lane)];
        auto& lanes = in_link.lanes_to_next[m.out_link];
        if (std::find(lanes.begin(), lanes.end(), m.in_lane) == lanes.end())
            lanes.push_back(m.in_lane);
    }

    flow_routes_.reserve(flows_.size());
    for (const FlowSpec& f : flows_) {
        std::vector<int> route;
        for (const auto& rid : f.route) {
            auto it = link_lookup_.find(rid);
            if (it == link_lookup_.end())
                throw ValidationError("flow route references unknown road '" + rid + "'");
            route.push_back(it->second);
        }
        // fail fast if the phase tables cannot carry this route
        for (std::size_t i = 0; i + 1 < route.size(); ++i) {
            const LinkPlan& cur = links_[route[i]];
            if (!inters_[cur.to].signalized) continue;
            if (!cur.lanes_to_next.count(route[i + 1]))
                throw ValidationError("no movement from road '" + cur.id + "' to road '" +
                                      links_[route[i + 1]].id + "' at intersection '" +
                                      inters_[cur.to].id + "'");
        }
        flow_routes_.push_back(std::move(route));
    }
}

void Simulator::reset() {
    state_ = SimState{};
    state_.lane_queues.assign(lane_ids_.size(), {});
    state_.link_transit.assign(links_.size(), {});
    state_.active_phase.assign(agent_ids_.size(), 0);
    state_.phase_elapsed.assign(agent_ids_.size(), cfg_.min_green);
    state_.all_red_remaining.assign(agent_ids_.size(), 0.0);
    state_.movement_credit.assign(movements_.size(), 0.0);
    state_.flow_next_spawn.clear();
    for (const FlowSpec& f : flows_) state_.flow_next_spawn.push_back(f.start_time);
    extra_routes_.clear();
}

std::int64_t Simulator::link_occupancy(int link) const {
    const LinkPlan& l = links_[link];
    std::int64_t n = static_cast<std::int64_t>(state_.link_transit[link].size());
    for (int i = 0; i < l.lane_count; ++i)
        n += static_cast<std::int64_t>(state_.lane_queues[l.first_lane + i].size());
    return n;
}

std::int64_t Simulator::total_queued() const {
    std::int64_t n = 0;
    for (const auto& q : state_.lane_queues) n += static_cast<std::int64_t>(q.size());
    return n;
}

void Simulator::arrive(std::int64_t vehicle, int link, double arrival_time) {
    VehicleState& v = state_.vehicles[vehicle];
    const std::vector<int>& route = route_of(flow_routes_, extra_routes_, v);
    const LinkPlan& cur = links_[link];
    if (v.route_pos + 1 >= static_cast<int>(route.size())) {
        v.loc = VehicleLoc::done;
        state_.completed.push_back(CompletedTrip{vehicle, v.spawn_time, arrival_time});
        return;
    }
    int next_link = route[v.route_pos + 1];
    if (!inters_[cur.to].signalized) {
        // pass-through node: continue onto the next link without stopping
        v.route_pos += 1;
        push_transit(state_.link_transit[next_link],
                     TransitVehicle{vehicle, arrival_time + links_[next_link].travel_time, 0});
        return;
    }
    auto it = cur.lanes_to_next.find(next_link);
    if (it == cur.lanes_to_next.end())
        throw ContractError("vehicle on road '" + cur.id + "' has no movement to '" +
                            links_[next_link].id + "'");
    int best = -1;
    std::size_t best_size = 0;
    for (int lane : it->second) {
        std::size_t size = state_.lane_queues[lane].size();
        if (best < 0 || size < best_size) {
            best = lane;
            best_size = size;
        }
    }
    state_.lane_queues[best].push_back(vehicle);
    v.loc = VehicleLoc::queued;
}

bool Simulator::try_discharge(const MovementPlan& m) {
    auto& queue = state_.lane_queues[m.in_lane];
    if (queue.empty()) return false;
    std::int64_t head = queue.front();
    VehicleState& v = state_.vehicles[head];
    const std::vector<int>& route = route_of(flow_routes_, extra_routes_, v);
    if (v.route_pos + 1 >= static_cast<int>(route.size())) return false;
    if (route[v.route_pos + 1] != m.out_link) return false;
    const LinkPlan& out = links_[m.out_link];
    if (static_cast<double>(link_occupancy(m.out_link)) >= out.capacity - kEps) return false;
    queue.pop_front();
    v.route_pos += 1;
    v.loc = VehicleLoc::transit;
    double arrival = state_.clock + out.travel_time;
    int lane_in_link = m.out_lane - out.first_lane;
    push_transit(state_.link_transit[m.out_link], TransitVehicle{head, arrival, lane_in_link});
    return true;
}

void Simulator::tick(const std::map<std::string, int>* actions) {
    double now = state_.clock + 1.0;

    // spawns due in [clock, clock+1), ordered by (time, flow index)
    std::vector<std::pair<double, int>> due;
    for (std::size_t f = 0; f < flows_.size(); ++f) {
        if (flow_routes_[f].empty()) continue;
        double t = state_.flow_next_spawn[f];
        const FlowSpec& spec = flows_[f];
        while (t < now - kEps && t < spec.end_time - kEps) {
            due.emplace_back(t, static_cast<int>(f));
            t += spec.interval;
        }
        state_.flow_next_spawn[f] = t;
    }
    std::stable_sort(due.begin(), due.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto [t, f] : due) {
        std::int64_t id = static_cast<std::int64_t>(state_.vehicles.size());
        state_.vehicles.push_back(VehicleState{f, 0, t, VehicleLoc::transit});
        int first = flow_routes_[f][0];
        push_transit(state_.link_transit[first],
                     TransitVehicle{id, t + links_[first].travel_time, 0});
    }

    // arrivals at stop lines (or trip completion)
    for (std::size_t l = 0; l < links_.size(); ++l) {
        auto& transit = state_.link_transit[l];
        while (!transit.empty() && transit.front().arrival <= now + kEps) {
            TransitVehicle tv = transit.front();
            transit.pop_front();
            arrive(tv.vehicle, static_cast<int>(l), tv.arrival);
        }
    }

    // signals
    if (actions) {
        for (std::size_t a = 0; a < agent_ids_.size(); ++a) {
            auto it = actions->find(agent_ids_[a]);
            if (it == actions->end())
                throw ContractError("step: no action for intersection '" + agent_ids_[a] + "'");
            int requested = it->second;
            const IntersectionPlan& plan = inters_[agent_plan_[a]];
            if (requested < 0 || requested >= static_cast<int>(plan.phases.size()))
                throw ContractError("step: phase " + std::to_string(requested) +
                                    " out of range for intersection '" + agent_ids_[a] + "'");
            if (requested != state_.active_phase[a] &&
                state_.phase_elapsed[a] >= cfg_.min_green - kEps) {
                state_.active_phase[a] = requested;
                state_.phase_elapsed[a] = 0.0;
                state_.all_red_remaining[a] = cfg_.all_red_time;
                for (int mi : plan.all_movements) state_.movement_credit[mi] = 0.0;
            }
        }
        for (auto& [id, phase] : *actions) {
            if (!inter_lookup_.count(id) || inters_[inter_lookup_.at(id)].agent < 0)
                throw ContractError("step: unknown intersection '" + id + "' in actions");
        }
    }

    // discharge
    state_.clock = now; // vehicles discharged this tick depart at its end
    for (std::size_t a = 0; a < agent_ids_.size(); ++a) {
        state_.phase_elapsed[a] += 1.0;
        if (state_.all_red_remaining[a] > kEps) {
            state_.all_red_remaining[a] -= 1.0;
            continue;
        }
        const IntersectionPlan& plan = inters_[agent_plan_[a]];
        const PhasePlan& phase = plan.phases[state_.active_phase[a]];
        auto serve = [&](int mi) {
            const MovementPlan& m = movements_[mi];
            double& credit = state_.movement_credit[mi];
            credit += cfg_.saturation_rate;
            int quota = static_cast<int>(std::floor(credit + kEps));
            int discharged = 0;
            while (discharged < quota && try_discharge(m)) ++discharged;
            credit -= discharged;
            credit -= std::floor(credit + kEps); // unused whole credits expire
        };
        for (int mi : phase.movements) serve(mi);
        for (int mi : plan.always_green) serve(mi);
    }

    state_.queue_integral += static_cast<double>(total_queued());
    state_.ticks += 1;
}

void Simulator::step(const std::map<std::string, int>& actions, double dt) {
    if (dt <= 0.0) throw ContractError("step: dt must be positive");
    double rounded = std::round(dt);
    if (std::fabs(dt - rounded) > 1e-6)
        throw ContractError("step: dt must be a whole number of seconds");
    auto ticks = static_cast<std::int64_t>(rounded);
    for (std::int64_t k = 0; k < ticks; ++k) tick(k == 0 ? &actions : nullptr);
}

Observation Simulator::observe(const std::string& intersection_id) const {
    auto it = inter_lookup_.find(intersection_id);
    if (it == inter_lookup_.end())
        throw ContractError("observe: unknown intersection '" + intersection_id + "'");
    const IntersectionPlan& plan = inters_[it->second];
    Observation o;
    o.waiting_per_entering_lane.reserve(plan.entering_lanes.size());
    for (int lane : plan.entering_lanes)
        o.waiting_per_entering_lane.push_back(
            static_cast<int>(state_.lane_queues[lane].size()));
    o.count_per_exiting_lane.reserve(plan.exiting_lanes.size());
    for (int lane : plan.exiting_lanes) {
        int link = link_of_lane(lane);
        int lane_in_link = lane - links_[link].first_lane;
        std::int64_t n = static_cast<std::int64_t>(state_.lane_queues[lane].size());
        for (const TransitVehicle& tv : state_.link_transit[link])
            if (tv.lane == lane_in_link) ++n;
        o.count_per_exiting_lane.push_back(static_cast<int>(n));
    }
    if (plan.agent >= 0) {
        o.current_phase.assign(plan.phases.size(), 0.0);
        o.current_phase[state_.active_phase[plan.agent]] = 1.0;
    }
    return o;
}

double Simulator::raw_reward(const std::string& intersection_id) const {
    auto it = inter_lookup_.find(intersection_id);
    if (it == inter_lookup_.end())
        throw ContractError("raw_reward: unknown intersection '" + intersection_id + "'");
    const IntersectionPlan& plan = inters_[it->second];
    std::int64_t waiting = 0;
    for (int lane : plan.entering_lanes)
        waiting += static_cast<std::int64_t>(state_.lane_queues[lane].size());
    return -static_cast<double>(waiting);
}

MetricsReport Simulator::metrics() const {
    MetricsReport report;
    report.spawned = spawned_count();
    report.throughput = static_cast<std::int64_t>(state_.completed.size());
    report.active = report.spawned - report.throughput;
    if (report.spawned > 0) {
        double total = 0.0;
        for (const CompletedTrip& t : state_.completed) total += t.exit - t.enter;
        for (const VehicleState& v : state_.vehicles)
            if (v.loc != VehicleLoc::done) total += state_.clock - v.spawn_time;
        report.avg_travel_time = total / static_cast<double>(report.spawned);
    }
    if (state_.ticks > 0)
        report.mean_queue = state_.queue_integral / static_cast<double>(state_.ticks);
    return report;
}

int Simulator::agent_index(const std::string& intersection_id) const {
    auto it = inter_lookup_.find(intersection_id);
    if (it == inter_lookup_.end() || inters_[it->second].agent < 0)
        throw ContractError("no agent at intersection '" + intersection_id + "'");
    return inters_[it->second].agent;
}

int Simulator::phase_count(const std::string& intersection_id) const {
    auto it = inter_lookup_.find(intersection_id);
    if (it == inter_lookup_.end())
        throw ContractError("unknown intersection '" + intersection_id + "'");
    return static_cast<int>(inters_[it->second].phases.size());
}

int Simulator::lane_index(const std::string& lane) const {
    auto it = lane_lookup_.find(lane);
    if (it == lane_lookup_.end()) throw ContractError("unknown lane '" + lane + "'");
    return it->second;
}

int Simulator::link_of_lane(int flat_lane) const {
    // links' lane ranges partition [0, lane count)
    int lo = 0;
    int hi = static_cast<int>(links_.size()) - 1;
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        if (links_[mid].first_lane <= flat_lane)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

std::int64_t Simulator::queued_on_lane(const std::string& lane) const {
    return static_cast<std::int64_t>(state_.lane_queues[lane_index(lane)].size());
}

VehicleRecord Simulator::vehicle_record(std::int64_t id) const {
    const VehicleState& v = state_.vehicles.at(static_cast<std::size_t>(id));
    const std::vector<int>& route = route_of(flow_routes_, extra_routes_, v);
    VehicleRecord rec;
    rec.id = id;
    rec.spawn_time = v.spawn_time;
    if (v.loc != VehicleLoc::done)
        for (std::size_t i = v.route_pos; i < route.size(); ++i)
            rec.route.push_back(links_[route[i]].id);
    rec.current_speed =
        v.loc == VehicleLoc::transit && !rec.route.empty()
            ? net_.links[route[v.route_pos]].free_flow_speed
            : 0.0;
    return rec;
}

bool Simulator::vehicles_accounted() const {
    std::int64_t transit = 0;
    for (const auto& t : state_.link_transit)
        transit += static_cast<std::int64_t>(t.size());
    return spawned_count() ==
           total_queued() + transit + static_cast<std::int64_t>(state_.completed.size());
}

std::int64_t Simulator::spawned_count() const {
    return static_cast<std::int64_t>(state_.vehicles.size());
}

std::int64_t Simulator::register_vehicle(const std::vector<std::string>& remaining_route) {
    if (remaining_route.empty())
        throw ContractError("injected vehicle needs a nonempty route");
    std::vector<int> route;
    for (const auto& rid : remaining_route) {
        auto it = link_lookup_.find(rid);
        if (it == link_lookup_.end())
            throw ContractError("injected route references unknown road '" + rid + "'");
        route.push_back(it->second);
    }
    extra_routes_.push_back(std::move(route));
    std::int64_t id = static_cast<std::int64_t>(state_.vehicles.size());
    VehicleState v;
    v.route_ref = ~static_cast<int>(extra_routes_.size() - 1);
    v.route_pos = 0;
    v.spawn_time = state_.clock;
    state_.vehicles.push_back(v);
    return id;
}

std::int64_t Simulator::inject_queued(const std::string& lane,
                                      const std::vector<std::string>& remaining_route) {
    int flat = lane_index(lane);
    std::int64_t id = register_vehicle(remaining_route);
    if (route_of(flow_routes_, extra_routes_, state_.vehicles[id])[0] != link_of_lane(flat))
        throw ContractError("injected route must start with the queue's link");
    state_.vehicles[id].loc = VehicleLoc::queued;
    state_.lane_queues[flat].push_back(id);
    return id;
}

std::int64_t Simulator::inject_transit(const std::vector<std::string>& remaining_route,
                                       double arrival, int lane_in_link) {
    std::int64_t id = register_vehicle(remaining_route);
    state_.vehicles[id].loc = VehicleLoc::transit;
    int link = route_of(flow_routes_, extra_routes_, state_.vehicles[id])[0];
    push_transit(state_.link_transit[link], TransitVehicle{id, arrival, lane_in_link});
    return id;
}

} // namespace siglab
