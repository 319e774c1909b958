#include "siglab/attention.hpp"

#include "siglab/errors.hpp"

#include <cmath>

namespace siglab {

namespace {

void fill_normal(Eigen::MatrixXd& m, Rng& rng, double stddev) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            m(r, c) = rng.normal() * stddev;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& e) {
    Eigen::VectorXd shifted = e.array() - e.maxCoeff();
    Eigen::VectorXd ex = shifted.array().exp();
    return ex / ex.sum();
}

} // namespace

AttentionParams AttentionParams::shaped(int obs_dim, int d) {
    AttentionParams p;
    p.Wl = Eigen::MatrixXd::Zero(d, obs_dim);
    p.b = Eigen::MatrixXd::Zero(d, 1);
    p.Wk = Eigen::MatrixXd::Zero(d, d);
    p.Wq = Eigen::MatrixXd::Zero(d, d);
    return p;
}

void AttentionParams::set_zero() {
    Wl.setZero();
    b.setZero();
    Wk.setZero();
    Wq.setZero();
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> AttentionParams::named() {
    return {{"Wl", &Wl}, {"b", &b}, {"Wk", &Wk}, {"Wq", &Wq}};
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> AttentionParams::named() const {
    return {{"Wl", &Wl}, {"b", &b}, {"Wk", &Wk}, {"Wq", &Wq}};
}

AttentionLayer::AttentionLayer(int obs_dim, int d)
    : params(AttentionParams::shaped(obs_dim, d)), obs_dim_(obs_dim), d_(d) {
    if (obs_dim <= 0 || d <= 0)
        throw ContractError("attention dimensions must be positive");
}

void AttentionLayer::init(Rng& rng) {
    fill_normal(params.Wl, rng, std::sqrt(1.0 / obs_dim_));
    params.b.setZero();
    fill_normal(params.Wk, rng, std::sqrt(1.0 / d_));
    fill_normal(params.Wq, rng, std::sqrt(1.0 / d_));
}

Eigen::VectorXd AttentionLayer::embed(const Eigen::VectorXd& o) const {
    if (o.size() != obs_dim_)
        throw ContractError("attention embed: observation size mismatch");
    return params.Wl * o + params.b.col(0);
}

Eigen::MatrixXd AttentionLayer::embed_all(const Eigen::MatrixXd& members) const {
    if (members.rows() != obs_dim_ || members.cols() < 1)
        throw ContractError("attention embed_all: member matrix shape mismatch");
    return (params.Wl * members).colwise() + params.b.col(0);
}

Eigen::VectorXd AttentionLayer::score_row(const Eigen::MatrixXd& Z) const {
    Eigen::VectorXd uq = params.Wq * Z.col(0);
    Eigen::VectorXd e = (params.Wk * Z).transpose() * uq;
    return softmax(e);
}

Eigen::VectorXd AttentionLayer::aggregate(const Eigen::MatrixXd& Z, const Eigen::VectorXd& alpha) {
    return (Z * alpha).cwiseMax(0.0);
}

Eigen::VectorXd AttentionLayer::forward(const Eigen::MatrixXd& members, Cache* cache) const {
    Eigen::MatrixXd Z = embed_all(members);
    Eigen::MatrixXd K = params.Wk * Z;
    Eigen::VectorXd uq = params.Wq * Z.col(0);
    Eigen::VectorXd alpha = softmax(K.transpose() * uq);
    Eigen::VectorXd s = Z * alpha;

    Eigen::VectorXd out(2 * d_);
    out.head(d_) = Z.col(0);
    out.tail(d_) = s.cwiseMax(0.0);

    if (cache) {
        cache->O = members;
        cache->Z = std::move(Z);
        cache->K = std::move(K);
        cache->uq = std::move(uq);
        cache->alpha = std::move(alpha);
        cache->s = std::move(s);
    }
    return out;
}

Eigen::VectorXd AttentionLayer::scores(const Eigen::MatrixXd& members) const {
    return score_row(embed_all(members));
}

void AttentionLayer::backward(const Cache& cache, const Eigen::VectorXd& dx,
                              AttentionParams& grads) const {
    if (dx.size() != 2 * d_)
        throw ContractError("attention backward: gradient size mismatch");

    Eigen::VectorXd dz_direct = dx.head(d_);
    Eigen::VectorXd dh = dx.tail(d_);

    Eigen::VectorXd ds = dh.array() * (cache.s.array() > 0.0).cast<double>();
    Eigen::VectorXd dalpha = cache.Z.transpose() * ds;
    // Softmax Jacobian: de = alpha .* (dalpha - alpha' dalpha).
    double inner = cache.alpha.dot(dalpha);
    Eigen::VectorXd de = cache.alpha.array() * (dalpha.array() - inner);

    Eigen::VectorXd duq = cache.K * de;
    Eigen::MatrixXd dK = cache.uq * de.transpose();

    grads.Wq += duq * cache.Z.col(0).transpose();
    grads.Wk += dK * cache.Z.transpose();

    Eigen::MatrixXd dZ = ds * cache.alpha.transpose() + params.Wk.transpose() * dK;
    dZ.col(0) += params.Wq.transpose() * duq + dz_direct;

    grads.Wl += dZ * cache.O.transpose();
    grads.b.col(0) += dZ.rowwise().sum();
}

} // namespace siglab
