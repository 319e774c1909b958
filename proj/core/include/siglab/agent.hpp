#pragma once

#include "siglab/attention.hpp"
#include "siglab/qnet.hpp"
#include "siglab/rng.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace siglab {

/// One replay transition. Observation bundles are obs_dim x members matrices
/// with column 0 the agent's own observation and the remaining columns its
/// neighbors in sorted-id order; plain (no attention) agents store one column.
struct Experience {
    Eigen::MatrixXd obs;
    int action = 0;
    double reward = 0.0;
    Eigen::MatrixXd next_obs;
    bool terminal = false;
};

struct AgentConfig {
    int obs_dim = 0;
    int actions = 0;
    int hidden = 64;
    int attention_dim = 32;
    bool attention = false;
    AdamConfig adam;
    double gamma_prime = 0.8;   // TD discount
    int target_sync_period = 5; // training rounds between hard target syncs
};

/// Per-intersection dueling double Q-learner, optionally fronted by a
/// neighborhood attention encoder whose output [z_i ; h_i] feeds the Q net.
/// Eval and target copies of both the Q net and the encoder are hard-synced
/// together every `target_sync_period` training rounds.
class Agent {
public:
    Agent(std::string id, const AgentConfig& cfg);

    void init(Rng& rng);

    const std::string& id() const { return id_; }
    const AgentConfig& config() const { return cfg_; }
    long train_rounds() const { return train_rounds_; }

    /// Epsilon-greedy over eval Q values. Draws exactly one uniform variate,
    /// plus one more when exploring, so call order is reproducible.
    int act(const Eigen::MatrixXd& bundle, double epsilon, Rng& rng) const;
    int greedy_action(const Eigen::MatrixXd& bundle) const;
    Eigen::VectorXd q_of(const Eigen::MatrixXd& bundle) const;

    /// Eval-encoder attention scores over [self, neighbors...]. Attention
    /// agents only.
    Eigen::VectorXd attention_scores(const Eigen::MatrixXd& bundle) const;
    /// Target-encoder scores; these feed the reward amendment weights.
    Eigen::VectorXd target_attention_scores(const Eigen::MatrixXd& bundle) const;

    /// One optimizer round on a sampled batch. Returns the pre-update loss.
    /// Throws TrainingError if the loss or any gradient goes non-finite.
    double train_step(const std::vector<const Experience*>& batch);

    void sync_targets();

    /// All tensors, names prefixed eval/, target/, att/, att_target/.
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> named_params();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named_params() const;

private:
    Eigen::VectorXd encode(const Eigen::MatrixXd& bundle, bool use_target,
                           AttentionLayer::Cache* cache) const;

    std::string id_;
    AgentConfig cfg_;
    DuelingQNet eval_, target_;
    std::optional<AttentionLayer> att_eval_, att_target_;
    Adam opt_;
    long train_rounds_ = 0;
};

} // namespace siglab
