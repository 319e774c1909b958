#include "siglab/qnet.hpp"
#include "siglab/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace siglab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("dueling head subtracts the advantage mean") {
    DuelingQNet net(4, 3, 8);
    Rng rng = Rng::stream(42, "qnet/init");
    net.init(rng);
    VectorXd x = VectorXd::LinSpaced(4, -1.0, 1.0);
    DuelingQNet::Cache cache;
    MatrixXd q = net.forward(x, &cache);
    // Q - V must equal the centered advantage, so it sums to zero
    double v = cache.V(0);
    double centered_sum = (q.col(0).array() - v).sum();
    CHECK(centered_sum == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("constant shift of both heads leaves greedy choice fixed") {
    DuelingQNet net(4, 3, 8);
    Rng rng = Rng::stream(7, "qnet/init");
    net.init(rng);
    VectorXd x = VectorXd::Constant(4, 0.3);
    int before = argmax_action(net.q_values_single(x));
    net.params.ba.array() += 5.0; // uniform advantage shift cancels in the mean
    int after = argmax_action(net.q_values_single(x));
    CHECK(before == after);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    VectorXd q(4);
    q << 1.0, 3.0, 3.0, 2.0;
    CHECK(argmax_action(q) == 1);
    q.setConstant(0.5);
    CHECK(argmax_action(q) == 0);
}

TEST_CASE("gradients match central finite differences") {
    const int obs = 5, actions = 3, hidden = 6, batch = 4;
    DuelingQNet net(obs, actions, hidden);
    Rng rng = Rng::stream(11, "qnet/init");
    net.init(rng);
    MatrixXd X(obs, batch);
    for (int j = 0; j < batch; ++j)
        for (int i = 0; i < obs; ++i) X(i, j) = rng.normal() * 0.5;

    // scalar loss: weighted sum of all Q entries
    MatrixXd W(actions, batch);
    for (int j = 0; j < batch; ++j)
        for (int i = 0; i < actions; ++i) W(i, j) = rng.normal();
    auto loss = [&]() { return (net.q_values(X).array() * W.array()).sum(); };

    DuelingQNet::Cache cache;
    net.forward(X, &cache);
    QParams grads = QParams::shaped(obs, actions, hidden);
    grads.set_zero();
    MatrixXd dX = net.backward(cache, W, grads);

    const double h = 1e-6;
    double worst = 0.0;
    for (auto& [name, mat] : grads.named()) {
        MatrixXd* param = nullptr;
        for (auto& [pname, pmat] : net.params.named())
            if (pname == name) param = pmat;
        REQUIRE(param != nullptr);
        for (int idx = 0; idx < param->size(); idx += 7) { // sample entries
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

    // input gradient too
    double worst_x = 0.0;
    for (int idx = 0; idx < X.size(); idx += 3) {
        double keep = X(idx);
        X(idx) = keep + h;
        double up = loss();
        X(idx) = keep - h;
        double down = loss();
        X(idx) = keep;
        double fd = (up - down) / (2.0 * h);
        double rel = std::abs(fd - dX(idx)) / std::max({1.0, std::abs(fd), std::abs(dX(idx))});
        worst_x = std::max(worst_x, rel);
    }
    CHECK(worst_x < 1e-5);
}

TEST_CASE("adam drives a quadratic toward its minimum") {
    MatrixXd w = MatrixXd::Constant(3, 1, 4.0);
    MatrixXd target = MatrixXd::Zero(3, 1);
    target << 1.0, -2.0, 0.5;
    Adam opt(AdamConfig{0.05, 0.9, 0.999, 1e-8});
    for (int i = 0; i < 500; ++i) {
        MatrixXd grad = 2.0 * (w - target);
        opt.step({&w}, {&grad});
    }
    CHECK((w - target).norm() < 1e-3);
    CHECK(opt.step_count() == 500);
}

TEST_CASE("adam first step moves by roughly the learning rate") {
    MatrixXd w = MatrixXd::Zero(2, 2);
    MatrixXd grad = MatrixXd::Constant(2, 2, 3.0);
    Adam opt(AdamConfig{0.01, 0.9, 0.999, 1e-8});
    opt.step({&w}, {&grad});
    // bias-corrected first step is -lr * g/|g| elementwise
    CHECK(w(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("init is deterministic per stream") {
    DuelingQNet a(4, 2, 8), b(4, 2, 8);
    Rng ra = Rng::stream(5, "same");
    Rng rb = Rng::stream(5, "same");
    a.init(ra);
    b.init(rb);
    for (auto& [name, mat] : a.params.named()) {
        for (auto& [bname, bmat] : b.params.named())
            if (name == bname) CHECK(mat->isApprox(*bmat));
    }
}
