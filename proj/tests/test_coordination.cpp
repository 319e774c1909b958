#include "siglab/coordination.hpp"
#include "siglab/errors.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace siglab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

RawEntry entry(long t, double raw) {
    RawEntry e;
    e.t = t;
    e.obs = MatrixXd::Constant(2, 1, static_cast<double>(t));
    e.action = 0;
    e.raw_reward = raw;
    e.next_obs = MatrixXd::Constant(2, 1, static_cast<double>(t) + 0.5);
    return e;
}

double straight_line(double r, double gamma, double c,
                     const std::vector<std::pair<double, double>>& future_raw_pairs) {
    double acc = 0.0;
    for (auto [future, raw] : future_raw_pairs)
        acc += (std::abs(raw) < 1e-9 ? c : future / raw) - c;
    return r * (1.0 + gamma * std::tanh(acc));
}

} // namespace

TEST_CASE("spatial differentiation matches the frozen oracle") {
    CoordinationConfig cfg;
    cfg.gamma = 0.5;
    cfg.c = 0.8;
    std::vector<NeighborTerm> terms{{-9.0, -5.0, 1.0}}; // ratio 1.8, offset 1.0
    double got = spatial_differentiation(-10.0, terms, cfg);
    CHECK(got == doctest::Approx(-10.0 * (1.0 + 0.5 * std::tanh(1.0))).epsilon(1e-12));
    CHECK(got == doctest::Approx(-13.8079707797788).epsilon(1e-9));
}

TEST_CASE("zero raw neighbor reward contributes a neutral term") {
    CoordinationConfig cfg;
    std::vector<NeighborTerm> terms{{3.0, 0.0, 1.0}};
    CHECK(spatial_differentiation(-4.0, terms, cfg) == doctest::Approx(-4.0));
    terms.push_back({-9.0, -5.0, 1.0});
    // the zero-raw neighbor drops out, the live one still counts
    CHECK(spatial_differentiation(-10.0, terms, cfg) ==
          doctest::Approx(-10.0 * (1.0 + 0.5 * std::tanh(1.0))));
}

TEST_CASE("gamma zero reduces to the raw reward") {
    CoordinationConfig cfg;
    cfg.gamma = 0.0;
    std::vector<NeighborTerm> terms{{-9.0, -5.0, 1.0}, {4.0, 2.0, 0.7}};
    CHECK(spatial_differentiation(-6.0, terms, cfg) == doctest::Approx(-6.0));
}

TEST_CASE("ratio exactly c is a fixed point") {
    CoordinationConfig cfg;
    std::vector<NeighborTerm> terms{{-0.8, -1.0, 1.0}}; // ratio c
    CHECK(spatial_differentiation(-2.0, terms, cfg) == doctest::Approx(-2.0));
}

TEST_CASE("amended reward magnitude is bounded by the tanh envelope") {
    CoordinationConfig cfg;
    cfg.gamma = 0.5;
    std::vector<NeighborTerm> terms{{-100.0, -1.0, 1.0}};
    double got = spatial_differentiation(-3.0, terms, cfg);
    CHECK(std::abs(got) <= 3.0 * 1.5 + 1e-12);
    CHECK(got < 0.0); // sign preserved
    terms[0] = {100.0, 1.0, 1.0};
    got = spatial_differentiation(5.0, terms, cfg);
    CHECK(std::abs(got) <= 5.0 * 1.5 + 1e-12);
    CHECK(got > 0.0);
}

TEST_CASE("amendment pass reproduces the recursion on a two agent chain") {
    // agents 0 and 1 are mutual neighbors; three steps, n=1
    CoordinationConfig cfg;
    cfg.gamma = 0.5;
    cfg.n = 1;
    cfg.c = 0.8;
    Coordinator coord({{1}, {0}}, cfg);
    double r0[3] = {-4.0, -6.0, -2.0};
    double r1[3] = {-3.0, -5.0, -7.0};
    for (long t = 0; t < 3; ++t) {
        coord.record(0, entry(t, r0[t]));
        coord.record(1, entry(t, r1[t]));
    }
    AmendStats stats = coord.amend();
    CHECK(stats.amended == 4); // steps 0 and 1 for both agents
    CHECK(stats.skipped == 0);
    CHECK(coord.watermark() == 1);

    // newest first: step 1 amends against raw step 2, then step 0 sees the
    // amended step 1 values
    double R0_1 = straight_line(r0[1], cfg.gamma, cfg.c, {{r1[2], r1[1]}});
    double R1_1 = straight_line(r1[1], cfg.gamma, cfg.c, {{r0[2], r0[1]}});
    double R0_0 = straight_line(r0[0], cfg.gamma, cfg.c, {{R1_1, r1[0]}});
    double R1_0 = straight_line(r1[0], cfg.gamma, cfg.c, {{R0_1, r0[0]}});

    CHECK(coord.raw(0).find(1)->stored_reward == doctest::Approx(R0_1).epsilon(1e-12));
    CHECK(coord.raw(1).find(1)->stored_reward == doctest::Approx(R1_1).epsilon(1e-12));
    CHECK(coord.raw(0).find(0)->stored_reward == doctest::Approx(R0_0).epsilon(1e-12));
    CHECK(coord.raw(1).find(0)->stored_reward == doctest::Approx(R1_0).epsilon(1e-12));

    // amended buffer receives entries oldest first
    REQUIRE(coord.amended(0).size() == 2);
    CHECK(coord.amended(0).at(0).reward == doctest::Approx(R0_0));
    CHECK(coord.amended(0).at(1).reward == doctest::Approx(R0_1));

    // a second pass with no new data amends nothing
    AmendStats again = coord.amend();
    CHECK(again.amended == 0);
    CHECK(again.skipped == 0);
}

TEST_CASE("amendment weights come from the provider") {
    CoordinationConfig cfg;
    cfg.n = 1;
    Coordinator coord({{1}, {0}}, cfg);
    for (long t = 0; t < 2; ++t) {
        // attention-style bundles: one column for self, one per neighbor
        RawEntry e0 = entry(t, -2.0);
        e0.obs = MatrixXd::Constant(2, 2, static_cast<double>(t));
        RawEntry e1 = entry(t, -8.0);
        e1.obs = MatrixXd::Constant(2, 2, static_cast<double>(t));
        coord.record(0, std::move(e0));
        coord.record(1, std::move(e1));
    }
    // provider scales the neighbor term by 0.25 regardless of bundle
    auto provider = [](int, const MatrixXd& bundle) {
        return VectorXd::Constant(bundle.cols(), 0.25).eval();
    };
    coord.amend(provider);
    // weight 0.25 on the single neighbor of agent 0: ratio uses neighbor 1's
    // future stored over neighbor 1's raw at t
    double off = 0.25 * ((-8.0 / -8.0) - cfg.c);
    double want = -2.0 * (1.0 + cfg.gamma * std::tanh(off));
    CHECK(coord.raw(0).find(0)->stored_reward == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("amendment is local to the neighbor set") {
    CoordinationConfig cfg;
    cfg.n = 1;
    // line graph 0-1-2: agent 0 never reads agent 2
    Coordinator a({{1}, {0, 2}, {1}}, cfg);
    Coordinator b({{1}, {0, 2}, {1}}, cfg);
    for (long t = 0; t < 3; ++t) {
        double r2_a = -5.0, r2_b = -50.0; // tamper only with agent 2
        a.record(0, entry(t, -4.0));
        b.record(0, entry(t, -4.0));
        a.record(1, entry(t, -6.0));
        b.record(1, entry(t, -6.0));
        a.record(2, entry(t, r2_a));
        b.record(2, entry(t, r2_b));
    }
    a.amend();
    b.amend();
    // agent 1 is affected by agent 2, agent 0 only through agent 1's stored
    // value at t+n, which for t=1 is still raw at amendment time... but for
    // t=0 it differs. The invariant that must hold exactly: step 1 of agent 0
    // depends only on agent 1 data, identical in both runs.
    CHECK(a.raw(0).find(1)->stored_reward ==
          doctest::Approx(b.raw(0).find(1)->stored_reward).epsilon(1e-12));
}

TEST_CASE("an agent without neighbors keeps its raw reward when amended") {
    CoordinationConfig cfg;
    cfg.n = 1;
    Coordinator coord({{}}, cfg);
    for (long t = 0; t < 4; ++t) coord.record(0, entry(t, -1.0));
    coord.amend();
    RawEntry* e = coord.raw(0).find(0);
    REQUIRE(e != nullptr);
    CHECK(e->amended);
    // stored reward of a no-neighbor agent is its raw reward
    CHECK(e->stored_reward == doctest::Approx(-1.0));
}

TEST_CASE("contiguity of recorded steps is enforced") {
    CoordinationConfig cfg;
    Coordinator coord({{}}, cfg);
    coord.record(0, entry(0, -1.0));
    CHECK_THROWS_AS(coord.record(0, entry(2, -1.0)), ContractError);
}

TEST_CASE("eviction drops old steps without ever amending twice") {
    CoordinationConfig cfg;
    cfg.n = 1;
    cfg.capacity = 4; // raw ring keeps capacity + n = 5 steps
    Coordinator coord({{1}, {0}}, cfg);
    for (long t = 0; t < 8; ++t) {
        coord.record(0, entry(t, -3.0));
        coord.record(1, entry(t, -2.0));
    }
    // steps 0..2 were evicted before the first pass; only [3, 6] is amendable
    AmendStats stats = coord.amend();
    CHECK(stats.amended == 8);
    CHECK(stats.skipped == 0);
    CHECK(coord.watermark() == 6);
    CHECK(coord.raw(0).earliest() == 3);
    CHECK(coord.amended(0).size() == 4);

    // run far past the watermark: the gap [7, 15] is evicted unamended and
    // the second pass starts fresh at the surviving earliest step
    for (long t = 8; t <= 20; ++t) {
        coord.record(0, entry(t, -3.0));
        coord.record(1, entry(t, -2.0));
    }
    AmendStats second = coord.amend();
    CHECK(second.amended == 8); // t in [16, 19] for both agents
    CHECK(coord.watermark() == 19);
    CHECK(coord.raw(0).earliest() == 16);
}

TEST_CASE("messages carry two reals per step") {
    CoordinationConfig cfg;
    cfg.n = 1;
    std::vector<RawBuffer> raw;
    raw.emplace_back(16);
    raw.emplace_back(16);
    for (long t = 0; t < 3; ++t) {
        RawEntry e0 = entry(t, -1.0 - t);
        RawEntry e1 = entry(t, -2.0 - t);
        e0.stored_reward = e0.raw_reward;
        e1.stored_reward = e1.raw_reward;
        raw[0].record(e0);
        raw[1].record(e1);
    }
    auto inboxes = exchange_neighbor_rewards(raw, {{1}, {0}}, 1, 1);
    REQUIRE(inboxes.size() == 2);
    // agent 0 hears about t=1 and t=2 from agent 1
    REQUIRE(inboxes[0].size() == 2);
    for (const InboxEntry& m : inboxes[0]) {
        CHECK(m.source == 1);
        CHECK((m.t == 1 || m.t == 2));
        CHECK(m.raw == doctest::Approx(-2.0 - m.t));
    }
    CHECK(sizeof(InboxEntry::raw) + sizeof(InboxEntry::stored) == 2 * sizeof(double));
}

TEST_CASE("sampling draws uniformly with replacement") {
    CoordinationConfig cfg;
    AmendedBuffer buf(100);
    for (int i = 0; i < 10; ++i) {
        Experience e;
        e.obs = MatrixXd::Constant(1, 1, i);
        e.reward = i;
        buf.push(e);
    }
    Rng rng = Rng::stream(21, "sample");
    auto batch = buf.sample(64, rng);
    REQUIRE(batch.size() == 64);
    double lo = 1e9, hi = -1e9;
    for (const Experience* e : batch) {
        lo = std::min(lo, e->reward);
        hi = std::max(hi, e->reward);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 9.0);
    CHECK(hi > lo); // 64 draws over 10 items collide with overwhelming odds
}

TEST_CASE("amended buffer evicts oldest beyond capacity") {
    AmendedBuffer buf(3);
    for (int i = 0; i < 5; ++i) {
        Experience e;
        e.reward = i;
        buf.push(e);
    }
    REQUIRE(buf.size() == 3);
    CHECK(buf.at(0).reward == doctest::Approx(2.0));
    CHECK(buf.at(2).reward == doctest::Approx(4.0));
}

TEST_CASE("configuration is validated") {
    CoordinationConfig bad;
    bad.n = 0;
    CHECK_THROWS_AS(Coordinator({{}}, bad), ContractError);
    CoordinationConfig asym;
    CHECK_THROWS_AS(Coordinator({{1}, {}}, asym), ContractError);
}

TEST_CASE("undersized weight rows are a contract violation") {
    CoordinationConfig cfg;
    cfg.n = 1;
    Coordinator coord({{1}, {0}}, cfg);
    for (long t = 0; t < 2; ++t) {
        coord.record(0, entry(t, -2.0));
        coord.record(1, entry(t, -8.0));
    }
    auto provider = [](int, const MatrixXd&) { return VectorXd::Ones(1).eval(); };
    CHECK_THROWS_AS(coord.amend(provider), ContractError);
}
