#pragma once

// Stubborn insider attacker. From the onset iteration on, every attacker j
// reports y_j(s+1) = alpha^l + n_j^l(s), where the masking noise
//   n_j^l(s) = (m_j^l - alpha^l) rho^k + sigma rho^k w,   k = s - onset,
// decays geometrically so the reported trajectory looks like a node that is
// converging from the mask value m_j^l to the target alpha^l.

#include "gossipguard/consensus.hpp"
#include "gossipguard/error.hpp"
#include "gossipguard/random.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace gossipguard {

struct AttackConfig {
    std::vector<NodeId> attackers;           // sorted, unique
    std::vector<double> targets;             // alpha^l, one per instance
    double rho = 0.9;                        // decay in [0, 1)
    double sigma = 0.05;                     // stochastic noise scale
    std::vector<std::vector<double>> masks;  // masks[attacker index][instance]
    std::size_t start_iteration = 0;

    bool empty() const noexcept { return attackers.empty(); }

    bool is_attacker(NodeId j) const { return std::binary_search(attackers.begin(), attackers.end(), j); }

    std::size_t index_of(NodeId j) const {
        auto it = std::lower_bound(attackers.begin(), attackers.end(), j);
        if (it == attackers.end() || *it != j) throw InputError("node " + std::to_string(j) + " is not an attacker");
        return std::size_t(it - attackers.begin());
    }

    double target(std::size_t l) const { return targets.size() == 1 ? targets.front() : targets.at(l); }
    double mask(NodeId j, std::size_t l) const { return masks.at(index_of(j)).at(l); }

    void validate(std::size_t node_count, std::size_t instances) const {
        if (!std::is_sorted(attackers.begin(), attackers.end()) ||
            std::adjacent_find(attackers.begin(), attackers.end()) != attackers.end())
            throw InputError("attack.attackers must be sorted and unique");
        if (!attackers.empty() && attackers.back() >= node_count) throw InputError("attack.attackers: node out of range");
        if (attackers.size() >= node_count && node_count > 0)
            throw InputError("attack.attackers: at least one node must be normal");
        if (!(rho >= 0.0 && rho < 1.0)) throw InputError("attack.rho must lie in [0, 1)");
        if (!(sigma >= 0.0)) throw InputError("attack.sigma must be non-negative");
        if (attackers.empty()) return;
        if (targets.size() != 1 && targets.size() != instances)
            throw InputError("attack.alpha: need a scalar or one value per instance");
        if (masks.size() != attackers.size()) throw InputError("attack masks: one row per attacker required");
        for (const auto& row : masks)
            if (row.size() != instances) throw InputError("attack masks: one value per instance required");
    }
};

inline double masking_noise(NodeId j, std::size_t l, std::size_t s, const AttackConfig& config, Rng& rng) {
    if (s < config.start_iteration) throw InputError("masking_noise: iteration precedes attack onset");
    const double alpha = config.target(l);
    const double decay = std::pow(config.rho, double(s - config.start_iteration));
    std::normal_distribution<double> w(0.0, 1.0);
    const double jitter = w(rng);
    return (config.mask(j, l) - alpha) * decay + config.sigma * decay * jitter;
}

// Reported attacker state for iteration s+1; overrides whatever gossip wrote.
inline double attacker_update(NodeId j, std::size_t l, std::size_t s, const AttackConfig& config, Rng& rng) {
    if (!config.is_attacker(j)) throw InputError("attacker_update: node " + std::to_string(j) + " is not an attacker");
    return config.target(l) + masking_noise(j, l, s, config, rng);
}

struct PartitionedStates {
    std::vector<double> attackers;  // t
    std::vector<double> normal;     // r
};

inline PartitionedStates partition_states(std::span<const double> states, std::span<const NodeId> attackers) {
    PartitionedStates out;
    std::vector<bool> hostile(states.size(), false);
    for (NodeId a : attackers) {
        if (a >= states.size()) throw InputError("partition_states: attacker out of range");
        hostile[a] = true;
    }
    for (std::size_t i = 0; i < states.size(); ++i) (hostile[i] ? out.attackers : out.normal).push_back(states[i]);
    return out;
}

inline std::vector<double> departition_states(const PartitionedStates& parts, std::span<const NodeId> attackers) {
    const std::size_t n = parts.attackers.size() + parts.normal.size();
    std::vector<bool> hostile(n, false);
    for (NodeId a : attackers) {
        if (a >= n) throw InputError("departition_states: attacker out of range");
        hostile[a] = true;
    }
    std::vector<double> out;
    out.reserve(n);
    std::size_t t = 0, r = 0;
    for (std::size_t i = 0; i < n; ++i) out.push_back(hostile[i] ? parts.attackers.at(t++) : parts.normal.at(r++));
    return out;
}

// Expected matrix of the attacked system: attacker rows become identity rows,
// normal rows keep their expected-gossip weights (the Q and C blocks).
inline WeightMatrix blocked_expected_matrix(const Topology& topology, std::span<const NodeId> attackers) {
    Eigen::MatrixXd p = expected_weight_matrix(topology).entries();
    for (NodeId a : attackers) {
        if (a >= topology.node_count()) throw InputError("blocked_expected_matrix: attacker out of range");
        p.row(Eigen::Index(a)).setZero();
        p(Eigen::Index(a), Eigen::Index(a)) = 1.0;
    }
    return WeightMatrix(std::move(p));
}

// Lockstep gossip over L instances, each with its own random stream, with
// attacker overrides applied after every step once the attack is active.
class GossipSimulation {
public:
    GossipSimulation(const Topology& topology, std::vector<std::vector<double>> initial, const AttackConfig& attack,
                     std::vector<Rng> streams)
        : attack_(&attack), schedule_(topology), states_(std::move(initial)),
          streams_(std::move(streams)) {
        if (states_.node_count() != topology.node_count())
            throw InputError("GossipSimulation: initial state width does not match topology");
        if (streams_.size() != states_.instances()) throw InputError("GossipSimulation: need one stream per instance");
        attack.validate(topology.node_count(), states_.instances());
    }

    const InstanceStates& states() const noexcept { return states_; }
    std::size_t iteration() const noexcept { return states_.iteration(); }
    bool attack_active() const noexcept { return !attack_->empty() && iteration() >= attack_->start_iteration; }

    void step() {
        const std::size_t s = states_.iteration();
        const bool active = attack_active();
        for (std::size_t l = 0; l < states_.instances(); ++l) {
            Rng& rng = streams_[l];
            auto y = states_.mutable_state(l);
            if (!schedule_.empty()) {
                const Edge e = schedule_.next(rng);
                average_pair(y, e.a, e.b);
            }
            if (active)
                for (NodeId j : attack_->attackers) y[j] = attacker_update(j, l, s, *attack_, rng);
        }
        states_.advance();
    }

    void run(std::size_t iterations) {
        for (std::size_t k = 0; k < iterations; ++k) step();
    }

private:
    const AttackConfig* attack_;
    EdgeScheduler schedule_;
    InstanceStates states_;
    std::vector<Rng> streams_;
};

}  // namespace gossipguard
