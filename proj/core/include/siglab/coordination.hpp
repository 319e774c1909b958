#pragma once

#include "siglab/agent.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

namespace siglab {

struct CoordinationConfig {
    double gamma = 0.5;            // spatial discount in [0, 1]
    int n = 1;                     // delay span in decision steps
    double c = 0.8;                // expected neighbor reward ratio
    std::size_t capacity = 10000;  // amended buffer capacity N_D
};

/// One decision step as first recorded: stored_reward starts equal to the raw
/// reward and is overwritten exactly once by the amendment pass.
struct RawEntry {
    long t = 0;
    Eigen::MatrixXd obs;
    int action = 0;
    double raw_reward = 0.0;
    double stored_reward = 0.0;
    Eigen::MatrixXd next_obs;
    bool terminal = false;
    bool amended = false;
};

/// Ring of raw entries with contiguous, strictly increasing step indices.
class RawBuffer {
public:
    explicit RawBuffer(std::size_t capacity);

    void record(RawEntry entry);
    RawEntry* find(long t);
    const RawEntry* find(long t) const;

    long earliest() const { return entries_.empty() ? -1 : entries_.front().t; }
    long latest() const { return entries_.empty() ? -1 : entries_.back().t; }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return cap_; }

private:
    std::size_t cap_;
    std::deque<RawEntry> entries_;
};

/// FIFO of amended experiences; only the amendment pass writes here.
class AmendedBuffer {
public:
    explicit AmendedBuffer(std::size_t capacity);

    void push(Experience e);
    std::size_t size() const { return entries_.size(); }
    const Experience& at(std::size_t i) const { return entries_[i]; }

    /// Uniform with replacement; draws exactly `batch` variates.
    std::vector<const Experience*> sample(std::size_t batch, Rng& rng) const;

private:
    std::size_t cap_;
    std::deque<Experience> entries_;
};

/// One neighbor's contribution to the differentiation sum at a given step:
/// the neighbor's stored reward n steps ahead, its raw reward at the step
/// itself, and the exchange weight (1 for plain gamma-Reward, the target
/// attention score for the attention variant).
struct NeighborTerm {
    double future_stored = 0.0;
    double raw = 0.0;
    double weight = 1.0;
};

/// R = r * (1 + gamma * tanh(sum_j w_j * (R_j/r_j - c))); a neighbor with
/// |r_j| < 1e-9 contributes a neutral term (its ratio is defined as c).
double spatial_differentiation(double r_i_t, const std::vector<NeighborTerm>& terms,
                               const CoordinationConfig& cfg);

/// Message from neighbor `source` describing step `t`. The payload is two
/// reals; nothing wider ever crosses an agent boundary.
struct InboxEntry {
    int source = -1;
    long t = 0;
    double raw = 0.0;
    double stored = 0.0;
};
using Inbox = std::vector<InboxEntry>;

/// Collects, for every agent, the messages needed to amend step t: each
/// neighbor's (raw, stored) at t and at t+n. Entries a neighbor has already
/// evicted are absent from the inbox.
std::vector<Inbox> exchange_neighbor_rewards(const std::vector<RawBuffer>& raw,
                                             const std::vector<std::vector<int>>& neighbors,
                                             long t, int n);

struct AmendStats {
    long amended = 0;
    long skipped = 0; // entries left unamended because a neighbor evicted data
};

struct AuditRow {
    int agent = 0;
    long t = 0;
    double r = 0.0;
    double R = 0.0;
    int neighbor = -1; // -1 when the agent has no neighbors
    double ratio = 0.0;
    double weight = 0.0;
};

/// Owns the per-agent buffer pair and runs the amendment procedure. Neighbor
/// lists are index-based and must be symmetric.
class Coordinator {
public:
    /// Returns the attention score row of `agent` over its member bundle
    /// (column 0 = self); null provider means all-ones weights.
    using WeightsProvider = std::function<Eigen::VectorXd(int agent, const Eigen::MatrixXd& bundle)>;

    Coordinator(std::vector<std::vector<int>> neighbors, const CoordinationConfig& cfg);

    void record(int agent, RawEntry entry);

    /// Amends every step in (watermark, latest-n], newest first so that a
    /// step's own amendment sees its neighbors' already-amended futures, then
    /// copies amended entries into the amended buffers oldest first.
    AmendStats amend(const WeightsProvider& weights = nullptr);

    long watermark() const { return watermark_; }
    long latest() const;
    int agents() const { return static_cast<int>(neighbors_.size()); }

    RawBuffer& raw(int agent) { return raw_[agent]; }
    const RawBuffer& raw(int agent) const { return raw_[agent]; }
    AmendedBuffer& amended(int agent) { return amended_[agent]; }
    const AmendedBuffer& amended(int agent) const { return amended_[agent]; }
    const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
    const CoordinationConfig& config() const { return cfg_; }

    /// When set, amend appends one row per (entry, neighbor term).
    void set_audit_sink(std::vector<AuditRow>* sink) { audit_ = sink; }

private:
    std::vector<std::vector<int>> neighbors_;
    CoordinationConfig cfg_;
    std::vector<RawBuffer> raw_;
    std::vector<AmendedBuffer> amended_;
    long watermark_ = -1;
    std::vector<AuditRow>* audit_ = nullptr;
};

} // namespace siglab
