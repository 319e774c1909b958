#include "siglab/agent.hpp"

#include "siglab/errors.hpp"

#include <cmath>
#include <utility>

namespace siglab {

namespace {

int q_input_dim(const AgentConfig& cfg) {
    return cfg.attention ? 2 * cfg.attention_dim : cfg.obs_dim;
}

} // namespace

Agent::Agent(std::string id, const AgentConfig& cfg)
    : id_(std::move(id)),
      cfg_(cfg),
      eval_(q_input_dim(cfg), cfg.actions, cfg.hidden),
      target_(q_input_dim(cfg), cfg.actions, cfg.hidden),
      opt_(cfg.adam) {
    if (cfg.obs_dim <= 0 || cfg.actions <= 0)
        throw ContractError("agent " + id_ + ": obs_dim and actions must be positive");
    if (cfg.target_sync_period <= 0)
        throw ContractError("agent " + id_ + ": target_sync_period must be positive");
    if (cfg.attention) {
        att_eval_.emplace(cfg.obs_dim, cfg.attention_dim);
        att_target_.emplace(cfg.obs_dim, cfg.attention_dim);
    }
}

void Agent::init(Rng& rng) {
    eval_.init(rng);
    if (att_eval_) att_eval_->init(rng);
    sync_targets();
}

Eigen::VectorXd Agent::encode(const Eigen::MatrixXd& bundle, bool use_target,
                              AttentionLayer::Cache* cache) const {
    if (bundle.rows() != cfg_.obs_dim)
        throw ContractError("agent " + id_ + ": observation bundle row mismatch");
    if (!att_eval_) {
        if (bundle.cols() != 1)
            throw ContractError("agent " + id_ + ": plain agents take single-column bundles");
        return bundle.col(0);
    }
    const AttentionLayer& att = use_target ? *att_target_ : *att_eval_;
    return att.forward(bundle, cache);
}

int Agent::act(const Eigen::MatrixXd& bundle, double epsilon, Rng& rng) const {
    if (rng.uniform01() < epsilon)
        return static_cast<int>(rng.below(cfg_.actions));
    return greedy_action(bundle);
}

int Agent::greedy_action(const Eigen::MatrixXd& bundle) const {
    return argmax_action(q_of(bundle));
}

Eigen::VectorXd Agent::q_of(const Eigen::MatrixXd& bundle) const {
    return eval_.q_values_single(encode(bundle, false, nullptr));
}

Eigen::VectorXd Agent::attention_scores(const Eigen::MatrixXd& bundle) const {
    if (!att_eval_)
        throw ContractError("agent " + id_ + ": attention_scores on a plain agent");
    return att_eval_->scores(bundle);
}

Eigen::VectorXd Agent::target_attention_scores(const Eigen::MatrixXd& bundle) const {
    if (!att_target_)
        throw ContractError("agent " + id_ + ": target_attention_scores on a plain agent");
    return att_target_->scores(bundle);
}

double Agent::train_step(const std::vector<const Experience*>& batch) {
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw ContractError("agent " + id_ + ": empty training batch");
    const int in = eval_.input_dim();

    Eigen::MatrixXd X(in, B), Xn_eval(in, B), Xn_target(in, B);
    std::vector<AttentionLayer::Cache> caches(att_eval_ ? B : 0);
    for (int b = 0; b < B; ++b) {
        const Experience& e = *batch[b];
        if (e.action < 0 || e.action >= cfg_.actions)
            throw ContractError("agent " + id_ + ": action out of range in replay");
        X.col(b) = encode(e.obs, false, att_eval_ ? &caches[b] : nullptr);
        Xn_eval.col(b) = encode(e.next_obs, false, nullptr);
        Xn_target.col(b) = att_eval_ ? encode(e.next_obs, true, nullptr) : Xn_eval.col(b);
    }

    // Double estimator: eval net picks the next action, target net prices it.
    Eigen::MatrixXd q_next_eval = eval_.q_values(Xn_eval);
    Eigen::MatrixXd q_next_target = target_.q_values(Xn_target);

    DuelingQNet::Cache qcache;
    Eigen::MatrixXd Q = eval_.forward(X, &qcache);

    Eigen::MatrixXd dQ = Eigen::MatrixXd::Zero(cfg_.actions, B);
    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
        const Experience& e = *batch[b];
        double y = e.reward;
        if (!e.terminal) {
            int a_star = argmax_action(q_next_eval.col(b));
            y += cfg_.gamma_prime * q_next_target(a_star, b);
        }
        double delta = Q(e.action, b) - y;
        loss += delta * delta / B;
        dQ(e.action, b) = 2.0 * delta / B;
    }
    if (!std::isfinite(loss))
        throw TrainingError("agent " + id_ + ": non-finite loss");

    QParams qgrads = QParams::shaped(in, cfg_.actions, cfg_.hidden);
    Eigen::MatrixXd dX = eval_.backward(qcache, dQ, qgrads);

    AttentionParams agrads;
    if (att_eval_) {
        agrads = AttentionParams::shaped(cfg_.obs_dim, cfg_.attention_dim);
        for (int b = 0; b < B; ++b)
            att_eval_->backward(caches[b], dX.col(b), agrads);
    }

    std::vector<Eigen::MatrixXd*> params;
    std::vector<const Eigen::MatrixXd*> grads;
    for (auto& [name, p] : eval_.params.named()) params.push_back(p);
    for (auto& [name, g] : qgrads.named()) grads.push_back(g);
    if (att_eval_) {
        for (auto& [name, p] : att_eval_->params.named()) params.push_back(p);
        for (auto& [name, g] : agrads.named()) grads.push_back(g);
    }
    for (const Eigen::MatrixXd* g : grads)
        if (!g->allFinite())
            throw TrainingError("agent " + id_ + ": non-finite gradient");

    opt_.step(params, grads);

    ++train_rounds_;
    if (train_rounds_ % cfg_.target_sync_period == 0) sync_targets();
    return loss;
}

void Agent::sync_targets() {
    target_.params = eval_.params;
    if (att_eval_) att_target_->params = att_eval_->params;
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> Agent::named_params() {
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
    for (auto& [name, p] : eval_.params.named()) out.emplace_back("eval/" + name, p);
    for (auto& [name, p] : target_.params.named()) out.emplace_back("target/" + name, p);
    if (att_eval_) {
        for (auto& [name, p] : att_eval_->params.named()) out.emplace_back("att/" + name, p);
        for (auto& [name, p] : att_target_->params.named())
            out.emplace_back("att_target/" + name, p);
    }
    return out;
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> Agent::named_params() const {
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
    for (auto& [name, p] : eval_.params.named()) out.emplace_back("eval/" + name, p);
    for (auto& [name, p] : target_.params.named()) out.emplace_back("target/" + name, p);
    if (att_eval_) {
        for (auto& [name, p] : att_eval_->params.named()) out.emplace_back("att/" + name, p);
        for (auto& [name, p] : att_target_->params.named())
            out.emplace_back("att_target/" + name, p);
    }
    return out;
}

} // namespace siglab
