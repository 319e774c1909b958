#include "siglab/coordination.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <vector>

using namespace siglab;
using Eigen::MatrixXd;

namespace {

// 3x3 grid adjacency by index, row-major
std::vector<std::vector<int>> grid_neighbors() {
    std::vector<std::vector<int>> nb(9);
    auto at = [](int r, int c) { return r * 3 + c; };
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            if (r > 0) nb[at(r, c)].push_back(at(r - 1, c));
            if (c > 0) nb[at(r, c)].push_back(at(r, c - 1));
            if (c < 2) nb[at(r, c)].push_back(at(r, c + 1));
            if (r < 2) nb[at(r, c)].push_back(at(r + 1, c));
        }
    return nb;
}

RawEntry entry(long t, double r) {
    RawEntry e;
    e.t = t;
    e.obs = MatrixXd::Constant(28, 1, 0.1);
    e.raw_reward = r;
    e.next_obs = e.obs;
    return e;
}

} // namespace

static void BM_SpatialDifferentiation(benchmark::State& state) {
    CoordinationConfig cfg;
    std::vector<NeighborTerm> terms{{-9.0, -5.0, 1.0}, {-4.0, -4.0, 0.5},
                                    {0.0, 0.0, 1.0}, {-12.0, -10.0, 0.25}};
    double r = -10.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(spatial_differentiation(r, terms, cfg));
        r = r < -1e6 ? -10.0 : r * 1.000001;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SpatialDifferentiation);

static void BM_AmendmentRound(benchmark::State& state) {
    CoordinationConfig cfg;
    const long chunk = 100;
    long t = 0;
    Coordinator coord(grid_neighbors(), cfg);
    for (auto _ : state) {
        state.PauseTiming();
        for (long k = 0; k < chunk; ++k, ++t)
            for (int i = 0; i < 9; ++i)
                coord.record(i, entry(t, -1.0 - (t + i) % 7));
        state.ResumeTiming();
        benchmark::DoNotOptimize(coord.amend());
    }
    state.SetItemsProcessed(state.iterations() * chunk * 9);
}
BENCHMARK(BM_AmendmentRound);
