#include "siglab/roadnet.hpp"

#include "siglab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace siglab {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Entry/exit points sit slightly clockwise of the approach axis so that
// right-hand-traffic chords (e.g. opposing throughs) do not overlap.
constexpr double kChordOffset = 10.0 * std::numbers::pi / 180.0;

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a;
}

bool angles_coincide(double a, double b) {
    double d = std::fabs(wrap_angle(a) - wrap_angle(b));
    if (d > std::numbers::pi) d = kTwoPi - d;
    return d < 1e-9;
}

// x strictly inside the counterclockwise arc lo -> hi
bool ccw_inside(double lo, double x, double hi) {
    double dx = wrap_angle(x - lo);
    double dh = wrap_angle(hi - lo);
    return dx > 1e-9 && dx < dh - 1e-9;
}

const json& require_field(const json& j, const char* field, const std::string& where) {
    auto it = j.find(field);
    if (it == j.end()) throw ParseError(where + ": missing field '" + field + "'");
    return *it;
}

double number_field(const json& j, const char* field, const std::string& where) {
    const json& v = require_field(j, field, where);
    if (!v.is_number()) throw ParseError(where + ": field '" + field + "' is not a number");
    return v.get<double>();
}

std::string string_field(const json& j, const char* field, const std::string& where) {
    const json& v = require_field(j, field, where);
    if (!v.is_string()) throw ParseError(where + ": field '" + field + "' is not a string");
    return v.get<std::string>();
}

const json& array_field(const json& j, const char* field, const std::string& where) {
    const json& v = require_field(j, field, where);
    if (!v.is_array()) throw ParseError(where + ": field '" + field + "' is not an array");
    return v;
}

std::pair<std::string, int> split_lane(const std::string& lane) {
    auto pos = lane.rfind('_');
    if (pos == std::string::npos || pos + 1 >= lane.size())
        throw ValidationError("malformed lane id '" + lane + "'");
    int idx = 0;
    for (std::size_t i = pos + 1; i < lane.size(); ++i) {
        char ch = lane[i];
        if (ch < '0' || ch > '9') throw ValidationError("malformed lane id '" + lane + "'");
        idx = idx * 10 + (ch - '0');
    }
    return {lane.substr(0, pos), idx};
}

struct NetIndex {
    std::unordered_map<std::string, const Intersection*> inters;
    std::unordered_map<std::string, const Link*> links;

    explicit NetIndex(const RoadNetwork& net) {
        for (const auto& i : net.intersections) inters.emplace(i.id, &i);
        for (const auto& l : net.links) links.emplace(l.id, &l);
    }
};

// Angle of the point where traffic of `road` crosses the boundary circle of
// `inter`. Entry points (traffic arriving) skew +offset, exit points -offset.
double boundary_angle(const NetIndex& idx, const Intersection& inter,
                      const std::string& road, bool entering) {
    auto it = idx.links.find(road);
    if (it == idx.links.end())
        throw ValidationError("movement references unknown road '" + road + "'");
    const Link& link = *it->second;
    const std::string& far_id = entering ? link.from : link.to;
    auto fit = idx.inters.find(far_id);
    if (fit == idx.inters.end())
        throw ValidationError("road '" + road + "' references unknown intersection '" + far_id + "'");
    const Intersection& far = *fit->second;
    double base = std::atan2(far.y - inter.y, far.x - inter.x);
    return wrap_angle(entering ? base + kChordOffset : base - kChordOffset);
}

bool chords_conflict(double a_in, double a_out, double b_in, double b_out) {
    const double pts_a[2] = {a_in, a_out};
    const double pts_b[2] = {b_in, b_out};
    for (double pa : pts_a)
        for (double pb : pts_b)
            if (angles_coincide(pa, pb)) return false; // merge/diverge, not a crossing
    bool in_inside = ccw_inside(a_in, b_in, a_out);
    bool out_inside = ccw_inside(a_in, b_out, a_out);
    return in_inside != out_inside;
}

bool movements_conflict_indexed(const NetIndex& idx, const Intersection& inter,
                                const Movement& a, const Movement& b) {
    auto [road_a_in, la] = split_lane(a.in_lane);
    auto [road_b_in, lb] = split_lane(b.in_lane);
    if (road_a_in == road_b_in) return false; // same approach never self-crosses
    auto [road_a_out, lc] = split_lane(a.out_lane);
    auto [road_b_out, ld] = split_lane(b.out_lane);
    double a_in = boundary_angle(idx, inter, road_a_in, true);
    double a_out = boundary_angle(idx, inter, road_a_out, false);
    double b_in = boundary_angle(idx, inter, road_b_in, true);
    double b_out = boundary_angle(idx, inter, road_b_out, false);
    return chords_conflict(a_in, a_out, b_in, b_out);
}

void validate_phase_conflicts(const NetIndex& idx, const Intersection& inter) {
    for (const Phase& phase : inter.phases) {
        for (std::size_t a = 0; a < phase.movements.size(); ++a) {
            for (std::size_t b = a + 1; b < phase.movements.size(); ++b) {
                const Movement& ma = phase.movements[a];
                const Movement& mb = phase.movements[b];
                if (movements_conflict_indexed(idx, inter, ma, mb))
                    throw ValidationError(
                        "conflicting movements in phase " + std::to_string(phase.index) +
                        " of intersection '" + inter.id + "': " + ma.in_lane + "->" +
                        ma.out_lane + " crosses " + mb.in_lane + "->" + mb.out_lane);
            }
        }
    }
}

void validate_network(RoadNetwork& net) {
    std::unordered_map<std::string, const Intersection*> inters;
    for (const auto& i : net.intersections) {
        if (!inters.emplace(i.id, &i).second)
            throw ValidationError("duplicate intersection id '" + i.id + "'");
    }
    std::unordered_map<std::string, const Link*> links;
    for (const auto& l : net.links) {
        if (!links.emplace(l.id, &l).second)
            throw ValidationError("duplicate road id '" + l.id + "'");
        if (l.length <= 0.0)
            throw ValidationError("road '" + l.id + "' has nonpositive length");
        if (l.free_flow_speed <= 0.0)
            throw ValidationError("road '" + l.id + "' has nonpositive speed");
        if (l.lane_count < 1)
            throw ValidationError("road '" + l.id + "' has no lanes");
        if (l.from == l.to)
            throw ValidationError("road '" + l.id + "' is a self-loop");
        if (!inters.count(l.from))
            throw ValidationError("road '" + l.id + "' references unknown intersection '" + l.from + "'");
        if (!inters.count(l.to))
            throw ValidationError("road '" + l.id + "' references unknown intersection '" + l.to + "'");
    }

    // entering/exiting lane lists, in link file order
    std::unordered_map<std::string, std::vector<std::string>> entering, exiting;
    for (const auto& l : net.links) {
        for (int i = 0; i < l.lane_count; ++i) {
            exiting[l.from].push_back(lane_id(l.id, i));
            entering[l.to].push_back(lane_id(l.id, i));
        }
    }
    bool any_signalized = false;
    for (auto& inter : net.intersections) {
        inter.entering_lanes = entering[inter.id];
        inter.exiting_lanes = exiting[inter.id];
        any_signalized = any_signalized || inter.signalized;
    }
    if (!any_signalized) throw ValidationError("no signalized intersections");

    NetIndex idx(net);
    auto check_movement = [&](const Intersection& inter, const Movement& m) {
        for (const std::string* lane : {&m.in_lane, &m.out_lane}) {
            auto [road, lane_idx] = split_lane(*lane);
            auto it = links.find(road);
            if (it == links.end())
                throw ValidationError("movement in intersection '" + inter.id +
                                      "' references nonexistent lane '" + *lane + "'");
            const Link& l = *it->second;
            if (lane_idx >= l.lane_count)
                throw ValidationError("movement in intersection '" + inter.id +
                                      "' references nonexistent lane '" + *lane + "'");
            bool is_in = lane == &m.in_lane;
            const std::string& expect = is_in ? l.to : l.from;
            if (expect != inter.id)
                throw ValidationError("road '" + road + "' does not " +
                                      (is_in ? "enter" : "leave") + " intersection '" +
                                      inter.id + "'");
        }
    };
    for (const auto& inter : net.intersections) {
        if (inter.signalized && inter.phases.empty())
            throw ValidationError("signalized intersection '" + inter.id + "' has no phases");
        for (const Phase& p : inter.phases)
            for (const Movement& m : p.movements) check_movement(inter, m);
        for (const Movement& m : inter.unsignalized_movements) check_movement(inter, m);
        if (inter.signalized) validate_phase_conflicts(idx, inter);
    }

    // neighbor map over signalized intersections only
    net.neighbor_map.clear();
    for (const auto& inter : net.intersections)
        if (inter.signalized) net.neighbor_map[inter.id];
    for (const auto& l : net.links) {
        auto a = net.neighbor_map.find(l.from);
        auto b = net.neighbor_map.find(l.to);
        if (a == net.neighbor_map.end() || b == net.neighbor_map.end()) continue;
        a->second.push_back(l.to);
        b->second.push_back(l.from);
    }
    for (auto& [id, nbrs] : net.neighbor_map) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }

    // signalized subgraph connectivity
    std::unordered_set<std::string> seen;
    std::deque<std::string> frontier{net.neighbor_map.begin()->first};
    seen.insert(frontier.front());
    while (!frontier.empty()) {
        std::string cur = std::move(frontier.front());
        frontier.pop_front();
        for (const auto& nb : net.neighbor_map.at(cur))
            if (seen.insert(nb).second) frontier.push_back(nb);
    }
    if (seen.size() != net.neighbor_map.size())
        throw ValidationError("signalized intersections do not form a connected graph");
}

} // namespace

void validate_and_index(RoadNetwork& net) { validate_network(net); }

const Intersection* RoadNetwork::find_intersection(const std::string& id) const {
    for (const auto& i : intersections)
        if (i.id == id) return &i;
    return nullptr;
}

const Link* RoadNetwork::find_link(const std::string& id) const {
    for (const auto& l : links)
        if (l.id == id) return &l;
    return nullptr;
}

std::vector<std::string> RoadNetwork::signalized_ids() const {
    std::vector<std::string> out;
    for (const auto& i : intersections)
        if (i.signalized) out.push_back(i.id);
    return out;
}

bool movements_conflict(const RoadNetwork& net, const Intersection& inter,
                        const Movement& a, const Movement& b) {
    NetIndex idx(net);
    return movements_conflict_indexed(idx, inter, a, b);
}

RoadNetwork parse_roadnet(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("roadnet: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("roadnet: top level is not an object");

    RoadNetwork net;
    const json& roads = array_field(doc, "roads", "roadnet");
    for (const json& r : roads) {
        std::string where = "road";
        Link link;
        link.id = string_field(r, "id", where);
        where = "road '" + link.id + "'";
        link.from = string_field(r, "startIntersection", where);
        link.to = string_field(r, "endIntersection", where);
        const json& lanes = array_field(r, "lanes", where);
        if (lanes.empty()) throw ParseError(where + ": empty lanes array");
        link.lane_count = static_cast<int>(lanes.size());
        link.free_flow_speed = number_field(lanes[0], "maxSpeed", where + " lane 0");
        auto pts = r.find("points");
        if (pts != r.end() && pts->is_array() && pts->size() >= 2) {
            double total = 0.0;
            for (std::size_t i = 1; i < pts->size(); ++i) {
                double x0 = number_field((*pts)[i - 1], "x", where + " point");
                double y0 = number_field((*pts)[i - 1], "y", where + " point");
                double x1 = number_field((*pts)[i], "x", where + " point");
                double y1 = number_field((*pts)[i], "y", where + " point");
                total += std::hypot(x1 - x0, y1 - y0);
            }
            link.length = total;
        } else if (r.contains("length")) {
            link.length = number_field(r, "length", where);
        } else {
            throw ParseError(where + ": neither points polyline nor length given");
        }
        net.links.push_back(std::move(link));
    }

    const json& inters = array_field(doc, "intersections", "roadnet");
    for (const json& ij : inters) {
        Intersection inter;
        inter.id = string_field(ij, "id", "intersection");
        std::string where = "intersection '" + inter.id + "'";
        const json& pt = require_field(ij, "point", where);
        inter.x = number_field(pt, "x", where + " point");
        inter.y = number_field(pt, "y", where + " point");
        inter.signalized = !ij.value("virtual", false);

        struct RoadLink {
            std::string start, end, type;
            std::vector<std::pair<int, int>> lanes;
        };
        std::vector<RoadLink> road_links;
        if (auto rls = ij.find("roadLinks"); rls != ij.end()) {
            if (!rls->is_array()) throw ParseError(where + ": roadLinks is not an array");
            for (const json& rl : *rls) {
                RoadLink parsed;
                parsed.type = string_field(rl, "type", where + " roadLink");
                parsed.start = string_field(rl, "startRoad", where + " roadLink");
                parsed.end = string_field(rl, "endRoad", where + " roadLink");
                const json& lls = array_field(rl, "laneLinks", where + " roadLink");
                for (const json& ll : lls) {
                    int s = static_cast<int>(number_field(ll, "startLaneIndex", where + " laneLink"));
                    int e = static_cast<int>(number_field(ll, "endLaneIndex", where + " laneLink"));
                    parsed.lanes.emplace_back(s, e);
                }
                road_links.push_back(std::move(parsed));
            }
        }
        std::set<Movement> seen_unsignalized;
        for (const RoadLink& rl : road_links) {
            if (rl.type != "turn_right") continue;
            for (auto [s, e] : rl.lanes) {
                Movement m{lane_id(rl.start, s), lane_id(rl.end, e)};
                if (seen_unsignalized.insert(m).second)
                    inter.unsignalized_movements.push_back(std::move(m));
            }
        }
        if (inter.signalized) {
            auto tl = ij.find("trafficLight");
            if (tl != ij.end()) {
                const json& phases = array_field(*tl, "lightphases", where + " trafficLight");
                int index = 0;
                for (const json& pj : phases) {
                    Phase phase;
                    phase.index = index++;
                    phase.default_duration = pj.value("time", 30.0);
                    const json& avail = array_field(pj, "availableRoadLinks", where + " lightphase");
                    for (const json& ai : avail) {
                        if (!ai.is_number_integer())
                            throw ParseError(where + ": availableRoadLinks entry is not an integer");
                        auto rli = ai.get<std::size_t>();
                        if (rli >= road_links.size())
                            throw ValidationError(where + ": lightphase references roadLink " +
                                                  std::to_string(rli) + " of " +
                                                  std::to_string(road_links.size()));
                        const RoadLink& rl = road_links[rli];
                        if (rl.type == "turn_right") continue; // always green, not phase-bound
                        for (auto [s, e] : rl.lanes)
                            phase.movements.push_back(
                                Movement{lane_id(rl.start, s), lane_id(rl.end, e)});
                    }
                    inter.phases.push_back(std::move(phase));
                }
            }
        }
        net.intersections.push_back(std::move(inter));
    }

    validate_network(net);
    return net;
}

std::vector<FlowSpec> parse_flow(const std::string& bytes, const RoadNetwork& net) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("flow: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("flow: top level is not an array");

    NetIndex idx(net);
    std::vector<FlowSpec> flows;
    int pos = 0;
    for (const json& fj : doc) {
        std::string where = "flow entry " + std::to_string(pos++);
        FlowSpec flow;
        const json& route = array_field(fj, "route", where);
        if (route.empty()) throw ValidationError(where + ": empty route");
        for (const json& rid : route) {
            if (!rid.is_string()) throw ParseError(where + ": route entry is not a string");
            flow.route.push_back(rid.get<std::string>());
        }
        for (std::size_t i = 0; i < flow.route.size(); ++i) {
            auto it = idx.links.find(flow.route[i]);
            if (it == idx.links.end())
                throw ValidationError(where + ": route references unknown road '" +
                                      flow.route[i] + "'");
            if (i > 0) {
                const Link& prev = *idx.links.at(flow.route[i - 1]);
                if (prev.to != it->second->from)
                    throw ValidationError(where + ": route links '" + prev.id + "' and '" +
                                          it->second->id + "' are not adjacent");
            }
        }
        flow.interval = number_field(fj, "interval", where);
        if (flow.interval <= 0.0)
            throw ValidationError(where + ": nonpositive interval");
        flow.start_time = number_field(fj, "startTime", where);
        double end = number_field(fj, "endTime", where);
        flow.end_time = end < 0.0 ? std::numeric_limits<double>::infinity() : end;
        if (flow.start_time > flow.end_time)
            throw ValidationError(where + ": start_time exceeds end_time");
        if (auto v = fj.find("vehicle"); v != fj.end()) {
            flow.vehicle_length = v->value("length", 5.0);
            flow.vehicle_max_speed = v->value("maxSpeed", 11.11);
        }
        flows.push_back(std::move(flow));
    }
    return flows;
}

namespace {

std::string classify_signalized(const NetIndex& idx, const Intersection& inter,
                                const std::string& start_road, const std::string& end_road) {
    const Link& in = *idx.links.at(start_road);
    const Link& out = *idx.links.at(end_road);
    const Intersection& a = *idx.inters.at(in.from);
    const Intersection& b = *idx.inters.at(out.to);
    double hin = std::atan2(inter.y - a.y, inter.x - a.x);
    double hout = std::atan2(b.y - inter.y, b.x - inter.x);
    double turn = std::remainder(hout - hin, kTwoPi);
    // geometric right turns that a document nevertheless signalizes stay
    // "go_straight" so re-parsing keeps them phase-bound
    if (turn > 15.0 * std::numbers::pi / 180.0) return "turn_left";
    return "go_straight";
}

} // namespace

std::string serialize_roadnet(const RoadNetwork& net) {
    NetIndex idx(net);
    json doc;
    doc["intersections"] = json::array();
    doc["roads"] = json::array();

    for (const auto& inter : net.intersections) {
        json ij;
        ij["id"] = inter.id;
        ij["point"] = {{"x", inter.x}, {"y", inter.y}};
        ij["virtual"] = !inter.signalized;
        json roads = json::array();
        for (const auto& l : net.links)
            if (l.from == inter.id || l.to == inter.id) roads.push_back(l.id);
        ij["roads"] = std::move(roads);

        // one roadLink per (start road, end road, phase membership) group
        struct Group {
            std::string start, end;
            std::vector<int> mask; // phase indices; empty = unsignalized right turn
            std::vector<std::pair<int, int>> lanes;
        };
        std::vector<Group> groups;
        std::map<Movement, std::vector<int>> membership;
        for (const Phase& p : inter.phases)
            for (const Movement& m : p.movements) membership[m].push_back(p.index);
        std::map<std::tuple<std::string, std::string, std::vector<int>>, std::size_t> group_of;
        std::set<Movement> placed;
        auto place = [&](const Movement& m, const std::vector<int>& mask) {
            if (!placed.insert(m).second) return;
            auto [sroad, sidx] = split_lane(m.in_lane);
            auto [eroad, eidx] = split_lane(m.out_lane);
            auto key = std::make_tuple(sroad, eroad, mask);
            auto it = group_of.find(key);
            if (it == group_of.end()) {
                it = group_of.emplace(key, groups.size()).first;
                groups.push_back(Group{sroad, eroad, mask, {}});
            }
            groups[it->second].lanes.emplace_back(sidx, eidx);
        };
        for (const Phase& p : inter.phases)
            for (const Movement& m : p.movements) place(m, membership.at(m));
        for (const Movement& m : inter.unsignalized_movements) place(m, {});

        json road_links = json::array();
        for (const Group& g : groups) {
            json rl;
            rl["type"] = g.mask.empty() ? "turn_right"
                                        : classify_signalized(idx, inter, g.start, g.end);
            rl["startRoad"] = g.start;
            rl["endRoad"] = g.end;
            json lls = json::array();
            for (auto [s, e] : g.lanes)
                lls.push_back({{"startLaneIndex", s}, {"endLaneIndex", e}});
            rl["laneLinks"] = std::move(lls);
            road_links.push_back(std::move(rl));
        }
        ij["roadLinks"] = std::move(road_links);

        if (inter.signalized) {
            json phases = json::array();
            for (const Phase& p : inter.phases) {
                json pj;
                pj["time"] = p.default_duration;
                json avail = json::array();
                for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                    const auto& mask = groups[gi].mask;
                    if (std::find(mask.begin(), mask.end(), p.index) != mask.end())
                        avail.push_back(gi);
                }
                pj["availableRoadLinks"] = std::move(avail);
                phases.push_back(std::move(pj));
            }
            ij["trafficLight"] = {{"lightphases", std::move(phases)}};
        }
        doc["intersections"].push_back(std::move(ij));
    }

    for (const auto& l : net.links) {
        json rj;
        rj["id"] = l.id;
        rj["startIntersection"] = l.from;
        rj["endIntersection"] = l.to;
        rj["length"] = l.length;
        json lanes = json::array();
        for (int i = 0; i < l.lane_count; ++i) lanes.push_back({{"maxSpeed", l.free_flow_speed}});
        rj["lanes"] = std::move(lanes);
        doc["roads"].push_back(std::move(rj));
    }
    return doc.dump(2);
}

std::string serialize_flow(const std::vector<FlowSpec>& flows) {
    json doc = json::array();
    for (const FlowSpec& f : flows) {
        json fj;
        fj["vehicle"] = {{"length", f.vehicle_length}, {"maxSpeed", f.vehicle_max_speed}};
        fj["route"] = f.route;
        fj["interval"] = f.interval;
        fj["startTime"] = f.start_time;
        fj["endTime"] = std::isinf(f.end_time) ? -1.0 : f.end_time;
        doc.push_back(std::move(fj));
    }
    return doc.dump(2);
}

} // namespace siglab
