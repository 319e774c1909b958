#include "siglab/qnet.hpp"

#include "siglab/errors.hpp"

#include <cmath>

namespace siglab {

void Adam::step(const std::vector<Eigen::MatrixXd*>& params,
                const std::vector<const Eigen::MatrixXd*>& grads) {
    if (params.size() != grads.size())
        throw ContractError("adam: parameter/gradient list size mismatch");
    if (m_.empty()) {
        for (const auto* p : params) {
            m_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
            v_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        }
    }
    if (m_.size() != params.size())
        throw ContractError("adam: parameter list changed between steps");
    t_ += 1;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Eigen::MatrixXd& p = *params[i];
        const Eigen::MatrixXd& g = *grads[i];
        if (p.rows() != g.rows() || p.cols() != g.cols())
            throw ContractError("adam: gradient shape mismatch");
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        Eigen::MatrixXd mhat = m_[i] / bc1;
        Eigen::MatrixXd vhat = v_[i] / bc2;
        p.array() -= cfg_.lr * mhat.array() / (vhat.array().sqrt() + cfg_.eps);
    }
}

QParams QParams::shaped(int input_dim, int actions, int hidden) {
    QParams p;
    p.W1 = Eigen::MatrixXd::Zero(hidden, input_dim);
    p.b1 = Eigen::MatrixXd::Zero(hidden, 1);
    p.W2 = Eigen::MatrixXd::Zero(hidden, hidden);
    p.b2 = Eigen::MatrixXd::Zero(hidden, 1);
    p.Wv = Eigen::MatrixXd::Zero(1, hidden);
    p.bv = Eigen::MatrixXd::Zero(1, 1);
    p.Wa = Eigen::MatrixXd::Zero(actions, hidden);
    p.ba = Eigen::MatrixXd::Zero(actions, 1);
    return p;
}

void QParams::set_zero() {
    for (auto& [name, m] : named()) m->setZero();
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> QParams::named() {
    return {{"W1", &W1}, {"b1", &b1}, {"W2", &W2}, {"b2", &b2},
            {"Wv", &Wv}, {"bv", &bv}, {"Wa", &Wa}, {"ba", &ba}};
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> QParams::named() const {
    return {{"W1", &W1}, {"b1", &b1}, {"W2", &W2}, {"b2", &b2},
            {"Wv", &Wv}, {"bv", &bv}, {"Wa", &Wa}, {"ba", &ba}};
}

DuelingQNet::DuelingQNet(int input_dim, int actions, int hidden)
    : params(QParams::shaped(input_dim, actions, hidden)),
      input_dim_(input_dim),
      actions_(actions),
      hidden_(hidden) {
    if (input_dim < 1 || actions < 1 || hidden < 1)
        throw ContractError("qnet: dimensions must be positive");
}

namespace {

void fill_normal(Eigen::MatrixXd& m, Rng& rng, double stddev) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = stddev * rng.normal();
}

} // namespace

void DuelingQNet::init(Rng& rng) {
    fill_normal(params.W1, rng, std::sqrt(2.0 / input_dim_));
    fill_normal(params.W2, rng, std::sqrt(2.0 / hidden_));
    fill_normal(params.Wv, rng, std::sqrt(1.0 / hidden_));
    fill_normal(params.Wa, rng, std::sqrt(1.0 / hidden_));
    params.b1.setZero();
    params.b2.setZero();
    params.bv.setZero();
    params.ba.setZero();
}

Eigen::MatrixXd DuelingQNet::forward(const Eigen::MatrixXd& X, Cache* cache) const {
    if (X.rows() != input_dim_)
        throw ContractError("qnet forward: input dimension mismatch");
    Eigen::Index batch = X.cols();
    Eigen::MatrixXd P1 = (params.W1 * X).colwise() + params.b1.col(0);
    Eigen::MatrixXd H1 = P1.cwiseMax(0.0);
    Eigen::MatrixXd P2 = (params.W2 * H1).colwise() + params.b2.col(0);
    Eigen::MatrixXd H2 = P2.cwiseMax(0.0);
    Eigen::RowVectorXd V = (params.Wv * H2).row(0).array() + params.bv(0, 0);
    Eigen::MatrixXd A = (params.Wa * H2).colwise() + params.ba.col(0);
    Eigen::RowVectorXd mean_a = A.colwise().mean();
    Eigen::MatrixXd Q = A;
    for (Eigen::Index c = 0; c < batch; ++c)
        Q.col(c).array() += V(c) - mean_a(c);
    if (cache) {
        cache->X = X;
        cache->P1 = std::move(P1);
        cache->H1 = std::move(H1);
        cache->P2 = std::move(P2);
        cache->H2 = std::move(H2);
        cache->A = std::move(A);
        cache->V = std::move(V);
    }
    return Q;
}

Eigen::VectorXd DuelingQNet::q_values_single(const Eigen::VectorXd& x) const {
    return forward(x, nullptr).col(0);
}

Eigen::MatrixXd DuelingQNet::backward(const Cache& cache, const Eigen::MatrixXd& dQ,
                                      QParams& grads) const {
    // Q = V + A - mean(A): dV = colsum(dQ), dA = dQ - colsum(dQ)/P
    Eigen::RowVectorXd dV = dQ.colwise().sum();
    Eigen::MatrixXd dA = dQ;
    double inv_p = 1.0 / static_cast<double>(actions_);
    for (Eigen::Index c = 0; c < dQ.cols(); ++c) dA.col(c).array() -= dV(c) * inv_p;

    grads.Wv += dV * cache.H2.transpose();
    grads.bv(0, 0) += dV.sum();
    grads.Wa += dA * cache.H2.transpose();
    grads.ba.col(0) += dA.rowwise().sum();

    Eigen::MatrixXd dH2 = params.Wv.transpose() * dV + params.Wa.transpose() * dA;
    Eigen::MatrixXd dP2 =
        dH2.cwiseProduct((cache.P2.array() > 0.0).cast<double>().matrix());
    grads.W2 += dP2 * cache.H1.transpose();
    grads.b2.col(0) += dP2.rowwise().sum();

    Eigen::MatrixXd dH1 = params.W2.transpose() * dP2;
    Eigen::MatrixXd dP1 =
        dH1.cwiseProduct((cache.P1.array() > 0.0).cast<double>().matrix());
    grads.W1 += dP1 * cache.X.transpose();
    grads.b1.col(0) += dP1.rowwise().sum();

    return params.W1.transpose() * dP1;
}

int argmax_action(const Eigen::VectorXd& q) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i)
        if (q(i) > q(best)) best = i;
    return best;
}

} // namespace siglab
