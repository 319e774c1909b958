#include "siglab/errors.hpp"
#include "siglab/simulator.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <map>
#include <string>
#include <vector>

using namespace siglab;
using namespace siglab::testutil;

namespace {

Simulator make_empty_cross() {
    return Simulator(make_cross(), {}, 1);
}

std::map<std::string, int> act(int phase) {
    return {{"C", phase}};
}

} // namespace

TEST_CASE("saturation flow discharges one vehicle every two green seconds") {
    Simulator sim = make_empty_cross();
    for (int i = 0; i < 10; ++i) sim.inject_queued("R_W_C_0", {"R_W_C", "R_C_E"});
    CHECK(sim.queued_on_lane("R_W_C_0") == 10);
    sim.step(act(0), 10.0); // phase 0 already active, no switch
    // 0.5 veh/s credit, whole vehicles only: 5 leave in 10 s
    CHECK(sim.queued_on_lane("R_W_C_0") == 5);
    sim.step(act(0), 10.0);
    CHECK(sim.queued_on_lane("R_W_C_0") == 0);
}

TEST_CASE("fractional credit does not bank across empty green time") {
    Simulator sim = make_empty_cross();
    sim.step(act(0), 20.0); // 20 s of green over an empty queue
    for (int i = 0; i < 10; ++i) sim.inject_queued("R_W_C_0", {"R_W_C", "R_C_E"});
    sim.step(act(0), 10.0); // no burst: still at most 5
    CHECK(sim.queued_on_lane("R_W_C_0") == 5);
}

TEST_CASE("phase switch inserts an all red interval") {
    Simulator sim = make_empty_cross();
    for (int i = 0; i < 4; ++i) sim.inject_queued("R_N_C_0", {"R_N_C", "R_C_S"});
    // switch to phase 1; init leaves min green already satisfied
    sim.step(act(1), 1.0); // tick 1: switch, all-red begins
    CHECK(sim.queued_on_lane("R_N_C_0") == 4);
    sim.step(act(1), 1.0); // tick 2: still all-red
    CHECK(sim.queued_on_lane("R_N_C_0") == 4);
    sim.step(act(1), 1.0); // tick 3: first green second, credit 0.5
    CHECK(sim.queued_on_lane("R_N_C_0") == 4);
    sim.step(act(1), 1.0); // tick 4: credit reaches 1.0
    CHECK(sim.queued_on_lane("R_N_C_0") == 3);
    sim.step(act(1), 6.0); // ticks 5..10: three more whole vehicles
    CHECK(sim.queued_on_lane("R_N_C_0") == 0);
}

TEST_CASE("switch requests before min green are ignored") {
    Simulator sim = make_empty_cross();
    sim.step(act(1), 1.0); // allowed switch, resets phase clock
    Observation o = sim.observe("C");
    CHECK(o.current_phase == std::vector<double>{0.0, 1.0});
    sim.step(act(0), 1.0); // phase_elapsed 1 < 10: ignored
    o = sim.observe("C");
    CHECK(o.current_phase == std::vector<double>{0.0, 1.0});
    sim.step(act(0), 8.0); // elapsed reaches 10 after these ticks
    sim.step(act(0), 1.0); // now honored
    o = sim.observe("C");
    CHECK(o.current_phase == std::vector<double>{1.0, 0.0});
}

TEST_CASE("full downstream link blocks discharge") {
    Simulator sim = make_empty_cross();
    // R_C_E has 1 lane: capacity 40 vehicles. Park 40 in transit forever.
    for (int i = 0; i < 40; ++i) sim.inject_transit({"R_C_E"}, 1e9);
    for (int i = 0; i < 4; ++i) sim.inject_queued("R_W_C_0", {"R_W_C", "R_C_E"});
    sim.step(act(0), 10.0);
    CHECK(sim.queued_on_lane("R_W_C_0") == 4); // nothing moved
    CHECK(sim.vehicles_accounted());
}

TEST_CASE("observation and reward count waiting vehicles") {
    Simulator sim = make_empty_cross();
    for (int i = 0; i < 3; ++i) sim.inject_queued("R_N_C_0", {"R_N_C", "R_C_S"});
    CHECK(sim.raw_reward("C") == doctest::Approx(-3.0));
    Observation o = sim.observe("C");
    int waiting = 0;
    for (int w : o.waiting_per_entering_lane) waiting += w;
    CHECK(waiting == 3);
    CHECK(o.current_phase == std::vector<double>{1.0, 0.0});
    // flattened vector: counts scaled by 40, one-hot appended untouched
    auto v = observation_vector(o, 40.0);
    CHECK(v.size() == o.waiting_per_entering_lane.size() +
                          o.count_per_exiting_lane.size() + o.current_phase.size());
    CHECK(v.front() == doctest::Approx(o.waiting_per_entering_lane.front() / 40.0));
    CHECK(v.back() == doctest::Approx(0.0));
}

TEST_CASE("trips complete on arrival at the final stop line") {
    Simulator sim = make_empty_cross();
    // 300 m at 15 m/s: stop line in 20 s; final link needs another 20 s
    std::int64_t id = sim.inject_transit({"R_W_C", "R_C_E"}, 20.0);
    sim.step(act(0), 19.0);
    CHECK(sim.metrics().throughput == 0);
    sim.step(act(0), 1.0); // arrives, phase 0 green: discharged next whole credit
    sim.step(act(0), 2.0);
    CHECK(sim.queued_on_lane("R_W_C_0") == 0);
    sim.step(act(0), 20.0);
    MetricsReport m = sim.metrics();
    CHECK(m.throughput == 1);
    CHECK(m.active == 0);
    CHECK(sim.vehicle_record(id).route.empty());
}

TEST_CASE("travel time counts active vehicles up to the clock") {
    Simulator sim = make_empty_cross();
    sim.inject_transit({"R_C_E"}, 1e9); // never arrives
    sim.step(act(0), 10.0);
    MetricsReport m = sim.metrics();
    CHECK(m.spawned == 1);
    CHECK(m.throughput == 0);
    CHECK(m.avg_travel_time == doctest::Approx(10.0)); // censored at clock
}

TEST_CASE("flows spawn on schedule and conserve vehicles") {
    RoadNetwork net = make_cross();
    FlowSpec f;
    f.route = {"R_W_C", "R_C_E"};
    f.interval = 5.0;
    f.start_time = 0.0;
    Simulator sim(net, {f}, 7);
    sim.step(act(0), 10.0);
    CHECK(sim.spawned_count() == 2); // spawns at t=0 and t=5; t=10 not yet
    sim.step(act(0), 5.0);
    CHECK(sim.spawned_count() == 3);
    CHECK(sim.vehicles_accounted());
}

TEST_CASE("two runs with the same seed agree tick for tick") {
    RoadNetwork net = make_cross();
    FlowSpec f;
    f.route = {"R_W_C", "R_C_E"};
    f.interval = 3.0;
    FlowSpec g;
    g.route = {"R_N_C", "R_C_S"};
    g.interval = 4.0;
    Simulator a(net, {f, g}, 11);
    Simulator b(net, {f, g}, 11);
    for (int k = 0; k < 30; ++k) {
        int phase = (k / 3) % 2;
        a.step(act(phase), 5.0);
        b.step(act(phase), 5.0);
        CHECK(a.raw_reward("C") == b.raw_reward("C"));
        CHECK(a.observe("C") == b.observe("C"));
    }
    CHECK(a.metrics().avg_travel_time == b.metrics().avg_travel_time);
    CHECK(a.vehicles_accounted());
}

TEST_CASE("reset restores the spawn ready initial state") {
    RoadNetwork net = make_cross();
    FlowSpec f;
    f.route = {"R_W_C", "R_C_E"};
    f.interval = 5.0;
    Simulator sim(net, {f}, 3);
    sim.step(act(1), 20.0);
    MetricsReport first = sim.metrics();
    sim.reset();
    CHECK(sim.state().clock == 0.0);
    CHECK(sim.spawned_count() == 0);
    sim.step(act(1), 20.0);
    MetricsReport second = sim.metrics();
    CHECK(first.avg_travel_time == second.avg_travel_time);
    CHECK(first.throughput == second.throughput);
    CHECK(first.mean_queue == second.mean_queue);
}

TEST_CASE("step rejects malformed requests") {
    Simulator sim = make_empty_cross();
    CHECK_THROWS_AS(sim.step({}, 1.0), ContractError);             // missing agent
    CHECK_THROWS_AS(sim.step(act(5), 1.0), ContractError);         // phase out of range
    CHECK_THROWS_AS(sim.step(act(0), 0.5), ContractError);         // fractional dt
    CHECK_THROWS_AS(sim.step(act(0), 0.0), ContractError);         // nonpositive dt
    std::map<std::string, int> extra{{"C", 0}, {"Z", 0}};
    CHECK_THROWS_AS(sim.step(extra, 1.0), ContractError);          // unknown agent
    CHECK_THROWS_AS(sim.inject_queued("R_W_C_9", {"R_W_C"}), ContractError);
    CHECK_THROWS_AS(sim.inject_transit({"R_missing"}, 5.0), ContractError);
}

TEST_CASE("pass through nodes forward vehicles after link travel time") {
    // W -> C -> E with final approach at E: trip is 300 m transit, queue at C,
    // then 300 m to E's stop line. Minimum end to end is 40 s plus service.
    Simulator sim = make_empty_cross();
    sim.inject_transit({"R_W_C", "R_C_E"}, 20.0);
    double done_at = -1.0;
    for (int t = 0; t < 60 && done_at < 0.0; ++t) {
        sim.step(act(0), 1.0);
        if (sim.metrics().throughput == 1) done_at = sim.state().clock;
    }
    REQUIRE(done_at > 0.0);
    CHECK(done_at >= 40.0);
    CHECK(done_at <= 45.0);
}
