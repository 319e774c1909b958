#include "siglab/roadnet.hpp"

#include "siglab/errors.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace siglab {

namespace {

struct Builder {
    const SyntheticSpec& spec;
    RoadNetwork net;
    std::map<std::pair<std::string, std::string>, std::string> roads; // (from,to) -> road id

    explicit Builder(const SyntheticSpec& s) : spec(s) {}

    void add_intersection(const std::string& id, double x, double y, bool signalized) {
        Intersection inter;
        inter.id = id;
        inter.x = x;
        inter.y = y;
        inter.signalized = signalized;
        net.intersections.push_back(std::move(inter));
    }

    void add_road(const std::string& from, const std::string& to, int lane_count) {
        Link link;
        link.id = "R_" + from + "_" + to;
        link.from = from;
        link.to = to;
        link.length = spec.link_length;
        link.free_flow_speed = spec.free_flow_speed;
        link.lane_count = lane_count;
        roads[{from, to}] = link.id;
        net.links.push_back(std::move(link));
    }

    void add_two_way(const std::string& a, const std::string& b, int lane_count) {
        add_road(a, b, lane_count);
        add_road(b, a, lane_count);
    }

    const std::string& road(const std::string& from, const std::string& to) const {
        auto it = roads.find({from, to});
        if (it == roads.end())
            throw ContractError("generator: no road " + from + " -> " + to);
        return it->second;
    }

    Intersection& inter(const std::string& id) {
        for (auto& i : net.intersections)
            if (i.id == id) return i;
        throw ContractError("generator: no intersection " + id);
    }

    std::vector<Movement> block(const std::string& in_road, const std::string& out_road,
                                int blk) const {
        std::vector<Movement> out;
        for (int i = 0; i < spec.lanes; ++i) {
            int lane = blk * spec.lanes + i;
            out.push_back(Movement{lane_id(in_road, lane), lane_id(out_road, lane)});
        }
        return out;
    }

    // Four-approach two-way junction: 3 lane blocks per road (0 left, 1 through,
    // 2 right); phases EW-through, NS-through, EW-left, NS-left; rights unsignalized.
    void signalize_two_way(const std::string& id,
                           const std::array<std::string, 4>& neighbor_by_side) {
        Intersection& me = inter(id);
        std::array<std::string, 4> in_road, out_road;
        for (int s = 0; s < 4; ++s) {
            in_road[s] = road(neighbor_by_side[s], id);
            out_road[s] = road(id, neighbor_by_side[s]);
        }
        auto movements = [&](std::initializer_list<int> sides, int blk,
                             auto exit_side) {
            std::vector<Movement> out;
            for (int s : sides) {
                auto part = block(in_road[s], out_road[exit_side(s)], blk);
                out.insert(out.end(), part.begin(), part.end());
            }
            return out;
        };
        auto opposite = [](int s) { return (s + 2) % 4; };
        auto left_exit = [](int s) { return (s + 3) % 4; };
        auto right_exit = [](int s) { return (s + 1) % 4; };

        me.phases.resize(4);
        me.phases[0] = Phase{0, movements({0, 2}, 1, opposite), 30.0};
        me.phases[1] = Phase{1, movements({1, 3}, 1, opposite), 30.0};
        me.phases[2] = Phase{2, movements({0, 2}, 0, left_exit), 30.0};
        me.phases[3] = Phase{3, movements({1, 3}, 0, left_exit), 30.0};
        me.unsignalized_movements = movements({0, 1, 2, 3}, 2, right_exit);
    }

    // One-way junction with west and south approaches, 2 lane blocks per road
    // (0 turn, 1 through); phase 0 west approach, phase 1 south approach.
    void signalize_one_way(const std::string& id, const std::string& west,
                           const std::string& east, const std::string& south,
                           const std::string& north) {
        Intersection& me = inter(id);
        const std::string& in_w = road(west, id);
        const std::string& in_s = road(south, id);
        const std::string& out_e = road(id, east);
        const std::string& out_n = road(id, north);

        std::vector<Movement> p0 = block(in_w, out_e, 1); // through
        auto left = block(in_w, out_n, 0);
        p0.insert(p0.end(), left.begin(), left.end());
        std::vector<Movement> p1 = block(in_s, out_n, 1);

        me.phases.resize(2);
        me.phases[0] = Phase{0, std::move(p0), 30.0};
        me.phases[1] = Phase{1, std::move(p1), 30.0};
        me.unsignalized_movements = block(in_s, out_e, 0); // right turn
    }

    FlowSpec route_flow(const std::vector<std::string>& nodes, double interval) const {
        FlowSpec flow;
        for (std::size_t i = 1; i < nodes.size(); ++i)
            flow.route.push_back(road(nodes[i - 1], nodes[i]));
        flow.interval = interval;
        flow.vehicle_max_speed = spec.free_flow_speed;
        return flow;
    }
};

SyntheticScenario generate_grid(const SyntheticSpec& spec) {
    if (spec.rows < 2 || spec.cols < 2)
        throw ValidationError("grid dimensions must be at least 2x2");
    Builder b(spec);
    const double L = spec.link_length;
    auto iid = [](int r, int c) {
        return "I_" + std::to_string(r) + "_" + std::to_string(c);
    };
    for (int r = 1; r <= spec.rows; ++r)
        for (int c = 1; c <= spec.cols; ++c)
            b.add_intersection(iid(r, c), c * L, r * L, true);
    auto bw = [](int r) { return "B_W_" + std::to_string(r); };
    auto be = [](int r) { return "B_E_" + std::to_string(r); };
    auto bs = [](int c) { return "B_S_" + std::to_string(c); };
    auto bn = [](int c) { return "B_N_" + std::to_string(c); };
    for (int r = 1; r <= spec.rows; ++r) {
        b.add_intersection(bw(r), 0.0, r * L, false);
        b.add_intersection(be(r), (spec.cols + 1) * L, r * L, false);
    }
    for (int c = 1; c <= spec.cols; ++c) {
        b.add_intersection(bs(c), c * L, 0.0, false);
        b.add_intersection(bn(c), c * L, (spec.rows + 1) * L, false);
    }

    int lane_count = (spec.one_way ? 2 : 3) * spec.lanes;
    for (int r = 1; r <= spec.rows; ++r) {
        std::vector<std::string> chain{bw(r)};
        for (int c = 1; c <= spec.cols; ++c) chain.push_back(iid(r, c));
        chain.push_back(be(r));
        for (std::size_t i = 1; i < chain.size(); ++i) {
            if (spec.one_way)
                b.add_road(chain[i - 1], chain[i], lane_count);
            else
                b.add_two_way(chain[i - 1], chain[i], lane_count);
        }
    }
    for (int c = 1; c <= spec.cols; ++c) {
        std::vector<std::string> chain{bs(c)};
        for (int r = 1; r <= spec.rows; ++r) chain.push_back(iid(r, c));
        chain.push_back(bn(c));
        for (std::size_t i = 1; i < chain.size(); ++i) {
            if (spec.one_way)
                b.add_road(chain[i - 1], chain[i], lane_count);
            else
                b.add_two_way(chain[i - 1], chain[i], lane_count);
        }
    }

    for (int r = 1; r <= spec.rows; ++r) {
        for (int c = 1; c <= spec.cols; ++c) {
            std::string west = c == 1 ? bw(r) : iid(r, c - 1);
            std::string east = c == spec.cols ? be(r) : iid(r, c + 1);
            std::string south = r == 1 ? bs(c) : iid(r - 1, c);
            std::string north = r == spec.rows ? bn(c) : iid(r + 1, c);
            if (spec.one_way)
                b.signalize_one_way(iid(r, c), west, east, south, north);
            else
                b.signalize_two_way(iid(r, c), {east, north, west, south});
        }
    }

    std::vector<std::vector<std::string>> routes;
    for (int r = 1; r <= spec.rows; ++r) {
        std::vector<std::string> west_east{bw(r)};
        for (int c = 1; c <= spec.cols; ++c) west_east.push_back(iid(r, c));
        west_east.push_back(be(r));
        routes.push_back(west_east);
        if (!spec.one_way)
            routes.emplace_back(west_east.rbegin(), west_east.rend());
    }
    for (int c = 1; c <= spec.cols; ++c) {
        std::vector<std::string> south_north{bs(c)};
        for (int r = 1; r <= spec.rows; ++r) south_north.push_back(iid(r, c));
        south_north.push_back(bn(c));
        routes.push_back(south_north);
        if (!spec.one_way)
            routes.emplace_back(south_north.rbegin(), south_north.rend());
    }

    if (spec.flow_rate <= 0.0) throw ValidationError("flow rate must be positive");
    double interval = 300.0 * static_cast<double>(routes.size()) / spec.flow_rate;
    SyntheticScenario out;
    for (const auto& nodes : routes) out.flows.push_back(b.route_flow(nodes, interval));
    validate_and_index(b.net);
    out.net = std::move(b.net);
    return out;
}

SyntheticScenario generate_arterial(const SyntheticSpec& spec) {
    if (spec.k < 2) throw ValidationError("arterial length must be at least 2");
    Builder b(spec);
    const double L = spec.link_length;
    auto iid = [](int i) { return "I_" + std::to_string(i); };
    auto bn = [](int i) { return "B_N_" + std::to_string(i); };
    auto bs = [](int i) { return "B_S_" + std::to_string(i); };
    for (int i = 1; i <= spec.k; ++i) b.add_intersection(iid(i), i * L, L, true);
    b.add_intersection("B_W", 0.0, L, false);
    b.add_intersection("B_E", (spec.k + 1) * L, L, false);
    for (int i = 1; i <= spec.k; ++i) {
        b.add_intersection(bn(i), i * L, 2 * L, false);
        b.add_intersection(bs(i), i * L, 0.0, false);
    }

    int lane_count = 3 * spec.lanes;
    std::vector<std::string> chain{"B_W"};
    for (int i = 1; i <= spec.k; ++i) chain.push_back(iid(i));
    chain.push_back("B_E");
    for (std::size_t i = 1; i < chain.size(); ++i)
        b.add_two_way(chain[i - 1], chain[i], lane_count);
    for (int i = 1; i <= spec.k; ++i) {
        b.add_two_way(bn(i), iid(i), lane_count);
        b.add_two_way(bs(i), iid(i), lane_count);
    }

    for (int i = 1; i <= spec.k; ++i) {
        std::string west = i == 1 ? "B_W" : iid(i - 1);
        std::string east = i == spec.k ? "B_E" : iid(i + 1);
        b.signalize_two_way(iid(i), {east, bn(i), west, bs(i)});
    }

    std::vector<std::vector<std::string>> routes;
    routes.push_back(chain);
    routes.emplace_back(chain.rbegin(), chain.rend());
    for (int i = 1; i <= spec.k; ++i) {
        routes.push_back({bn(i), iid(i), bs(i)});
        routes.push_back({bs(i), iid(i), bn(i)});
    }

    if (spec.flow_rate <= 0.0) throw ValidationError("flow rate must be positive");
    double interval = 300.0 * static_cast<double>(routes.size()) / spec.flow_rate;
    SyntheticScenario out;
    for (const auto& nodes : routes) out.flows.push_back(b.route_flow(nodes, interval));
    validate_and_index(b.net);
    out.net = std::move(b.net);
    return out;
}

} // namespace

SyntheticScenario generate_synthetic(const SyntheticSpec& spec) {
    if (spec.lanes < 1) throw ValidationError("lanes per movement must be at least 1");
    if (spec.link_length <= 0.0) throw ValidationError("link length must be positive");
    if (spec.free_flow_speed <= 0.0) throw ValidationError("free flow speed must be positive");
    switch (spec.kind) {
        case SyntheticSpec::Kind::arterial: return generate_arterial(spec);
        case SyntheticSpec::Kind::grid: return generate_grid(spec);
    }
    throw ContractError("unknown synthetic kind");
}

} // namespace siglab
