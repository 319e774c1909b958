#pragma once

#include "siglab/rng.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace siglab {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam over an ordered parameter list. Moment shapes mirror the parameters;
/// the list must be identical (same order, same shapes) on every call.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<Eigen::MatrixXd*>& params,
              const std::vector<const Eigen::MatrixXd*>& grads);

    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<Eigen::MatrixXd> m_, v_;
    long t_ = 0;
};

/// Dueling network parameters: shared relu trunk, linear value and advantage
/// heads. Biases are column vectors.
struct QParams {
    Eigen::MatrixXd W1, b1, W2, b2, Wv, bv, Wa, ba;

    static QParams shaped(int input_dim, int actions, int hidden);
    void set_zero();
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> named();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named() const;
};

class DuelingQNet {
public:
    DuelingQNet(int input_dim, int actions, int hidden = 64);

    void init(Rng& rng); // He init for the trunk, Xavier for the linear heads

    int input_dim() const { return input_dim_; }
    int actions() const { return actions_; }
    int hidden() const { return hidden_; }

    struct Cache {
        Eigen::MatrixXd X, P1, H1, P2, H2, A; // P* are pre-activations
        Eigen::RowVectorXd V;
    };

    /// Q(o, ·) via V + A - mean(A); columns are batch elements.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, Cache* cache) const;
    Eigen::MatrixXd q_values(const Eigen::MatrixXd& X) const { return forward(X, nullptr); }
    Eigen::VectorXd q_values_single(const Eigen::VectorXd& x) const;

    /// Backpropagates dL/dQ, accumulating into `grads` (caller zeroes);
    /// returns dL/dX for upstream layers.
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& dQ,
                             QParams& grads) const;

    QParams params;

private:
    int input_dim_;
    int actions_;
    int hidden_;
};

/// Greedy action with ties resolved to the lowest index.
int argmax_action(const Eigen::VectorXd& q);

} // namespace siglab
