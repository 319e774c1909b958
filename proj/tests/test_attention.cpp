#include "siglab/attention.hpp"
#include "siglab/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace siglab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_members(Rng& rng, int obs_dim, int m) {
    MatrixXd out(obs_dim, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < obs_dim; ++i) out(i, j) = rng.normal() * 0.7;
    return out;
}

} // namespace

TEST_CASE("scores are a probability row") {
    AttentionLayer att(6, 4);
    Rng rng = Rng::stream(3, "att/init");
    att.init(rng);
    for (int m = 1; m <= 5; ++m) {
        MatrixXd members = random_members(rng, 6, m);
        VectorXd alpha = att.scores(members);
        REQUIRE(alpha.size() == m);
        CHECK(alpha.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(alpha.minCoeff() >= 0.0);
    }
}

TEST_CASE("softmax survives large score magnitudes") {
    AttentionLayer att(4, 4);
    Rng rng = Rng::stream(9, "att/init");
    att.init(rng);
    att.params.Wq *= 200.0; // blow up the bilinear scores
    MatrixXd members = random_members(rng, 4, 3);
    VectorXd alpha = att.scores(members);
    CHECK(std::isfinite(alpha.sum()));
    CHECK(alpha.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("forward output stacks the self embedding over the aggregate") {
    AttentionLayer att(5, 3);
    Rng rng = Rng::stream(4, "att/init");
    att.init(rng);
    MatrixXd members = random_members(rng, 5, 4);
    AttentionLayer::Cache cache;
    VectorXd x = att.forward(members, &cache);
    REQUIRE(x.size() == att.output_dim());
    VectorXd z_self = att.embed(members.col(0));
    CHECK(x.head(3).isApprox(z_self));
    VectorXd h = cache.s.cwiseMax(0.0);
    CHECK(x.tail(3).isApprox(h));
    // the aggregate is the score-weighted embedding sum, rectified
    MatrixXd Z = att.embed_all(members);
    VectorXd alpha = att.score_row(Z);
    CHECK(cache.s.isApprox(Z * alpha));
}

TEST_CASE("a lone member attends only to itself") {
    AttentionLayer att(4, 3);
    Rng rng = Rng::stream(5, "att/init");
    att.init(rng);
    MatrixXd members = random_members(rng, 4, 1);
    VectorXd alpha = att.scores(members);
    CHECK(alpha(0) == doctest::Approx(1.0));
}

TEST_CASE("raising a member's key raises its weight") {
    AttentionLayer att(4, 4);
    Rng rng = Rng::stream(6, "att/init");
    att.init(rng);
    MatrixXd members = random_members(rng, 4, 3);
    MatrixXd Z = att.embed_all(members);
    VectorXd uq = att.params.Wq * Z.col(0);
    VectorXd base = att.score_row(Z);
    // move member 2's embedding along the query direction: score must grow
    MatrixXd Z2 = Z;
    VectorXd dir = att.params.Wk.transpose() * uq;
    Z2.col(2) += 0.5 * dir / std::max(1e-12, dir.norm());
    VectorXd bumped = att.score_row(Z2);
    CHECK(bumped(2) > base(2));
}

TEST_CASE("attention gradients match central finite differences") {
    const int obs = 5, d = 3, m = 4;
    AttentionLayer att(obs, d);
    Rng rng = Rng::stream(12, "att/init");
    att.init(rng);
    MatrixXd members = random_members(rng, obs, m);
    VectorXd w(2 * d);
    for (int i = 0; i < w.size(); ++i) w(i) = rng.normal();
    auto loss = [&]() {
        return att.forward(members, nullptr).dot(w);
    };

    AttentionLayer::Cache cache;
    att.forward(members, &cache);
    AttentionParams grads = AttentionParams::shaped(obs, d);
    grads.set_zero();
    att.backward(cache, w, grads);

    const double h = 1e-6;
    double worst = 0.0;
    for (auto& [name, mat] : grads.named()) {
        MatrixXd* param = nullptr;
        for (auto& [pname, pmat] : att.params.named())
            if (pname == name) param = pmat;
        REQUIRE(param != nullptr);
        for (int idx = 0; idx < param->size(); ++idx) {
            double keep = (*param)(idx);
            (*param)(idx) = keep + h;
            double up = loss();
            (*param)(idx) = keep - h;
            double down = loss();
            (*param)(idx) = keep;
            double fd = (up - down) / (2.0 * h);
            double got = (*mat)(idx);
            double rel = std::abs(fd - got) / std::max({1.0, std::abs(fd), std::abs(got)});
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("relu dead zone blocks the aggregate gradient") {
    AttentionLayer att(3, 2);
    Rng rng = Rng::stream(13, "att/init");
    att.init(rng);
    MatrixXd members = random_members(rng, 3, 2);
    AttentionLayer::Cache cache;
    att.forward(members, &cache);
    // craft an upstream gradient only on the h block
    VectorXd dx = VectorXd::Zero(4);
    dx.tail(2).setOnes();
    AttentionParams grads = AttentionParams::shaped(3, 2);
    grads.set_zero();
    att.backward(cache, dx, grads);
    for (int i = 0; i < cache.s.size(); ++i) {
        if (cache.s(i) <= 0.0) continue;
        // any positive pre-activation must leave some gradient behind
        double total = 0.0;
        for (auto& [name, mat] : grads.named()) total += mat->cwiseAbs().sum();
        CHECK(total > 0.0);
    }
}
