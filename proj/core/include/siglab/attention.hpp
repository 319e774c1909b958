#pragma once

#include "siglab/rng.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace siglab {

/// Single-head neighborhood attention: affine embedding z = Wl o + b (no
/// activation) followed by bilinear scores e_ij = z_j' Wk' Wq z_i, softmax
/// over self + neighbors, and a rectified weighted sum h = relu(Z alpha).
struct AttentionParams {
    Eigen::MatrixXd Wl, b, Wk, Wq;

    static AttentionParams shaped(int obs_dim, int d);
    void set_zero();
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> named();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named() const;
};

class AttentionLayer {
public:
    AttentionLayer(int obs_dim, int d = 32);

    void init(Rng& rng);

    int obs_dim() const { return obs_dim_; }
    int d() const { return d_; }
    /// Width of the vector feeding the Q network: [z_i ; h_i].
    int output_dim() const { return 2 * d_; }

    Eigen::VectorXd embed(const Eigen::VectorXd& o) const;
    /// Embeddings of a member matrix (column 0 = self, then neighbors).
    Eigen::MatrixXd embed_all(const Eigen::MatrixXd& members) const;
    /// Softmax scores over the member embeddings (column 0 = self).
    Eigen::VectorXd score_row(const Eigen::MatrixXd& Z) const;
    static Eigen::VectorXd aggregate(const Eigen::MatrixXd& Z, const Eigen::VectorXd& alpha);

    struct Cache {
        Eigen::MatrixXd O, Z, K;
        Eigen::VectorXd uq, alpha, s; // s is the pre-relu weighted sum
    };

    /// Full pass over a member matrix; returns [z_self ; relu(Z alpha)].
    Eigen::VectorXd forward(const Eigen::MatrixXd& members, Cache* cache) const;
    /// Scores only (for dumps and amendment weights).
    Eigen::VectorXd scores(const Eigen::MatrixXd& members) const;

    /// Backpropagates dL/d[z_i;h_i], accumulating into `grads`.
    void backward(const Cache& cache, const Eigen::VectorXd& dx, AttentionParams& grads) const;

    AttentionParams params;

private:
    int obs_dim_;
    int d_;
};

} // namespace siglab
