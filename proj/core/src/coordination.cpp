#include "siglab/coordination.hpp"

#include "siglab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <utility>

namespace siglab {

namespace {

constexpr double kZeroReward = 1e-9;

int position_of(const std::vector<int>& list, int value) {
    auto it = std::find(list.begin(), list.end(), value);
    if (it == list.end()) return -1;
    return static_cast<int>(it - list.begin());
}

} // namespace

RawBuffer::RawBuffer(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw ContractError("raw buffer capacity must be positive");
}

void RawBuffer::record(RawEntry entry) {
    if (!entries_.empty() && entry.t != entries_.back().t + 1)
        throw ContractError("raw buffer: step indices must be contiguous");
    entry.stored_reward = entry.raw_reward;
    entry.amended = false;
    entries_.push_back(std::move(entry));
    if (entries_.size() > cap_) entries_.pop_front();
}

RawEntry* RawBuffer::find(long t) {
    if (entries_.empty() || t < entries_.front().t || t > entries_.back().t) return nullptr;
    return &entries_[static_cast<std::size_t>(t - entries_.front().t)];
}

const RawEntry* RawBuffer::find(long t) const {
    return const_cast<RawBuffer*>(this)->find(t);
}

AmendedBuffer::AmendedBuffer(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw ContractError("amended buffer capacity must be positive");
}

void AmendedBuffer::push(Experience e) {
    entries_.push_back(std::move(e));
    if (entries_.size() > cap_) entries_.pop_front();
}

std::vector<const Experience*> AmendedBuffer::sample(std::size_t batch, Rng& rng) const {
    if (entries_.empty()) throw ContractError("sample from empty amended buffer");
    std::vector<const Experience*> out(batch);
    for (std::size_t k = 0; k < batch; ++k)
        out[k] = &entries_[static_cast<std::size_t>(rng.below(entries_.size()))];
    return out;
}

double spatial_differentiation(double r_i_t, const std::vector<NeighborTerm>& terms,
                               const CoordinationConfig& cfg) {
    if (!std::isfinite(r_i_t))
        throw ContractError("spatial_differentiation: non-finite own reward");
    double sum = 0.0;
    for (const NeighborTerm& term : terms) {
        if (!std::isfinite(term.future_stored) || !std::isfinite(term.raw) ||
            !std::isfinite(term.weight))
            throw ContractError("spatial_differentiation: non-finite neighbor term");
        if (term.weight < 0.0)
            throw ContractError("spatial_differentiation: negative weight");
        if (std::abs(term.raw) < kZeroReward) continue; // ratio defined as c, term vanishes
        sum += term.weight * (term.future_stored / term.raw - cfg.c);
    }
    return r_i_t * (1.0 + cfg.gamma * std::tanh(sum));
}

std::vector<Inbox> exchange_neighbor_rewards(const std::vector<RawBuffer>& raw,
                                             const std::vector<std::vector<int>>& neighbors,
                                             long t, int n) {
    std::vector<Inbox> inboxes(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (int j : neighbors[i]) {
            if (const RawEntry* e = raw[j].find(t))
                inboxes[i].push_back({j, t, e->raw_reward, e->stored_reward});
            if (const RawEntry* e = raw[j].find(t + n))
                inboxes[i].push_back({j, t + n, e->raw_reward, e->stored_reward});
        }
    }
    return inboxes;
}

Coordinator::Coordinator(std::vector<std::vector<int>> neighbors, const CoordinationConfig& cfg)
    : neighbors_(std::move(neighbors)), cfg_(cfg) {
    if (cfg.n < 1) throw ContractError("coordination: delay span n must be >= 1");
    if (cfg.gamma < 0.0) throw ContractError("coordination: gamma must be >= 0");
    if (cfg.c <= 0.0) throw ContractError("coordination: threshold c must be > 0");
    const int A = agents();
    for (int i = 0; i < A; ++i)
        for (int j : neighbors_[i]) {
            if (j < 0 || j >= A || j == i)
                throw ContractError("coordination: bad neighbor index");
            if (position_of(neighbors_[j], i) < 0)
                throw ContractError("coordination: neighbor lists must be symmetric");
        }
    raw_.assign(A, RawBuffer(cfg.capacity + static_cast<std::size_t>(cfg.n)));
    amended_.assign(A, AmendedBuffer(cfg.capacity));
}

void Coordinator::record(int agent, RawEntry entry) {
    raw_[agent].record(std::move(entry));
}

long Coordinator::latest() const {
    long lo = raw_.empty() ? -1 : raw_[0].latest();
    for (const RawBuffer& b : raw_) lo = std::min(lo, b.latest());
    return lo;
}

AmendStats Coordinator::amend(const WeightsProvider& weights) {
    AmendStats stats;
    const long newest = latest();
    if (newest < 0) return stats;
    const long hi = newest - cfg_.n;
    if (hi <= watermark_) return stats;
    long lo = watermark_ + 1;
    for (const RawBuffer& b : raw_)
        lo = std::max(lo, b.earliest());

    const int A = agents();
    std::vector<Eigen::VectorXd> rows(A);
    std::vector<char> row_ready(A);
    for (long t = hi; t >= lo; --t) {
        std::vector<Inbox> inboxes = exchange_neighbor_rewards(raw_, neighbors_, t, cfg_.n);
        std::fill(row_ready.begin(), row_ready.end(), 0);
        for (int i = 0; i < A; ++i) {
            RawEntry* e = raw_[i].find(t);
            if (!e) {
                ++stats.skipped;
                continue;
            }
            if (e->amended)
                throw ContractError("amend: entry visited twice");

            bool complete = true;
            std::vector<NeighborTerm> terms;
            terms.reserve(neighbors_[i].size());
            for (int j : neighbors_[i]) {
                const InboxEntry* at_t = nullptr;
                const InboxEntry* at_tn = nullptr;
                for (const InboxEntry& m : inboxes[i]) {
                    if (m.source != j) continue;
                    if (m.t == t) at_t = &m;
                    else if (m.t == t + cfg_.n) at_tn = &m;
                }
                if (!at_t || !at_tn) {
                    complete = false;
                    break;
                }
                double w = 1.0;
                if (weights) {
                    if (!row_ready[j]) {
                        rows[j] = weights(j, raw_[j].find(t)->obs);
                        if (rows[j].size() !=
                            static_cast<Eigen::Index>(neighbors_[j].size()) + 1)
                            throw ContractError(
                                "amend: weight row must cover self plus neighbors");
                        row_ready[j] = 1;
                    }
                    int pos = position_of(neighbors_[j], i);
                    w = rows[j](pos + 1); // column 0 of j's bundle is j itself
                }
                terms.push_back({at_tn->stored, at_t->raw, w});
            }
            if (!complete) {
                ++stats.skipped;
                std::cerr << "warning: agent " << i << " step " << t
                          << " left unamended, neighbor data evicted\n";
                continue;
            }

            double R = spatial_differentiation(e->raw_reward, terms, cfg_);
            e->stored_reward = R;
            e->amended = true;
            ++stats.amended;

            if (audit_) {
                if (terms.empty()) {
                    audit_->push_back({i, t, e->raw_reward, R, -1, 0.0, 0.0});
                } else {
                    for (std::size_t k = 0; k < terms.size(); ++k) {
                        const NeighborTerm& term = terms[k];
                        double ratio = std::abs(term.raw) < kZeroReward
                                           ? cfg_.c
                                           : term.future_stored / term.raw;
                        audit_->push_back(
                            {i, t, e->raw_reward, R, neighbors_[i][k], ratio, term.weight});
                    }
                }
            }
        }
    }

    // Oldest first so FIFO eviction in the amended buffers follows step order.
    for (long t = lo; t <= hi; ++t)
        for (int i = 0; i < A; ++i) {
            const RawEntry* e = raw_[i].find(t);
            if (e && e->amended)
                amended_[i].push(
                    {e->obs, e->action, e->stored_reward, e->next_obs, e->terminal});
        }

    watermark_ = hi;
    return stats;
}

} // namespace siglab
