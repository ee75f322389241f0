#pragma once

// Network topology and randomized pairwise gossip averaging.
//
// One uniformly chosen edge of the topology fires per iteration; both
// endpoints replace their state with the pair average. The expected weight
// matrix is I - Sigma/(2M) + (A + A^T)/(2M) where Sigma_j = sum_i (A_ij + A_ji).

#include "gossipguard/error.hpp"
#include "gossipguard/format.hpp"
#include "gossipguard/random.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <compare>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gossipguard {

struct Edge {
    NodeId a = 0;
    NodeId b = 0;

    Edge() = default;
    Edge(NodeId i, NodeId j) : a(std::min(i, j)), b(std::max(i, j)) {}

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

class Topology {
public:
    explicit Topology(std::size_t node_count = 0) : node_count_(node_count), neighbors_(node_count) {}

    Topology(std::size_t node_count, std::span<const std::pair<NodeId, NodeId>> edges) : Topology(node_count) {
        for (auto [i, j] : edges) add_edge(i, j);
    }

    Topology(std::size_t node_count, std::initializer_list<std::pair<NodeId, NodeId>> edges)
        : Topology(node_count, std::span<const std::pair<NodeId, NodeId>>(edges.begin(), edges.size())) {}

    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    // Duplicate insertions are ignored; self-loops and out-of-range IDs are rejected.
    void add_edge(NodeId i, NodeId j) {
        check_node(i);
        check_node(j);
        if (i == j) throw InputError("self-loop on node " + std::to_string(i));
        Edge e(i, j);
        auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
        if (it != edges_.end() && *it == e) return;
        edges_.insert(it, e);
        insert_sorted(neighbors_[i], j);
        insert_sorted(neighbors_[j], i);
    }

    bool has_edge(NodeId i, NodeId j) const {
        if (i >= node_count_ || j >= node_count_ || i == j) return false;
        return std::binary_search(edges_.begin(), edges_.end(), Edge(i, j));
    }

    const std::vector<NodeId>& neighbors(NodeId i) const {
        check_node(i);
        return neighbors_[i];
    }

    std::size_t degree(NodeId i) const { return neighbors(i).size(); }

    // Copy with edge (i, j) removed; a missing edge leaves the copy unchanged.
    Topology without_edge(NodeId i, NodeId j) const {
        Topology out = *this;
        out.remove_edge(i, j);
        return out;
    }

    // Copy with every edge incident to `node` removed.
    Topology without_node_edges(NodeId node) const {
        Topology out = *this;
        for (NodeId j : neighbors(node)) out.remove_edge(node, j);
        return out;
    }

    Eigen::MatrixXd adjacency() const {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(Eigen::Index(node_count_), Eigen::Index(node_count_));
        for (const auto& e : edges_) {
            a(Eigen::Index(e.a), Eigen::Index(e.b)) = 1.0;
            a(Eigen::Index(e.b), Eigen::Index(e.a)) = 1.0;
        }
        return a;
    }

    // Subgraph over `keep` (sorted ascending), relabelled 0..|keep|-1 in that order.
    Topology induced(std::span<const NodeId> keep) const {
        std::vector<std::size_t> label(node_count_, node_count_);
        for (std::size_t k = 0; k < keep.size(); ++k) label[check_node(keep[k])] = k;
        Topology out(keep.size());
        for (const auto& e : edges_)
            if (label[e.a] < node_count_ && label[e.b] < node_count_) out.add_edge(label[e.a], label[e.b]);
        return out;
    }

    friend bool operator==(const Topology& x, const Topology& y) {
        return x.node_count_ == y.node_count_ && x.edges_ == y.edges_;
    }

private:
    NodeId check_node(NodeId i) const {
        if (i >= node_count_)
            throw InputError("node " + std::to_string(i) + " out of range [0, " + std::to_string(node_count_) + ")");
        return i;
    }

    void remove_edge(NodeId i, NodeId j) {
        if (!has_edge(i, j)) return;
        Edge e(i, j);
        edges_.erase(std::lower_bound(edges_.begin(), edges_.end(), e));
        std::erase(neighbors_[i], j);
        std::erase(neighbors_[j], i);
    }

    static void insert_sorted(std::vector<NodeId>& v, NodeId x) { v.insert(std::lower_bound(v.begin(), v.end(), x), x); }

    std::size_t node_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> neighbors_;
};

inline const std::vector<NodeId>& neighbor_set(const Topology& topology, NodeId i) { return topology.neighbors(i); }

// ---------------------------------------------------------------------------
// Construction helpers

inline Topology path_topology(std::size_t n) {
    Topology t(n);
    for (NodeId i = 0; i + 1 < n; ++i) t.add_edge(i, i + 1);
    return t;
}

inline Topology ring_topology(std::size_t n) {
    Topology t = path_topology(n);
    if (n > 2) t.add_edge(n - 1, 0);
    return t;
}

inline Topology complete_topology(std::size_t n) {
    Topology t(n);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j) t.add_edge(i, j);
    return t;
}

// Random spanning tree plus independent extra edges with probability edge_prob;
// connected by construction.
inline Topology random_connected_topology(std::size_t n, double edge_prob, Rng& rng) {
    if (edge_prob < 0.0 || edge_prob > 1.0) throw InputError("edge_prob must lie in [0, 1]");
    Topology t(n);
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 1; k < n; ++k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        t.add_edge(order[k], order[pick(rng)]);
    }
    std::bernoulli_distribution extra(edge_prob);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
            if (extra(rng)) t.add_edge(i, j);
    return t;
}

// Integer JSON values built in C++ are signed even when non-negative.
inline bool is_json_index(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// {"nodes": M, "edges": [[i, j], ...]}
inline Topology topology_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("nodes")) throw ConfigError("topology.nodes", "missing");
    if (!is_json_index(doc["nodes"]) || doc["nodes"].get<std::size_t>() == 0)
        throw ConfigError("topology.nodes", "must be a positive integer");
    Topology t(doc["nodes"].get<std::size_t>());
    if (!doc.contains("edges")) return t;
    if (!doc["edges"].is_array()) throw ConfigError("topology.edges", "must be an array of [i, j] pairs");
    std::size_t k = 0;
    for (const auto& e : doc["edges"]) {
        const std::string field = "topology.edges[" + std::to_string(k++) + "]";
        if (!e.is_array() || e.size() != 2 || !is_json_index(e[0]) || !is_json_index(e[1]))
            throw ConfigError(field, "must be a pair of non-negative integers");
        try {
            t.add_edge(e[0].get<NodeId>(), e[1].get<NodeId>());
        } catch (const InputError& err) {
            throw ConfigError(field, err.what());
        }
    }
    return t;
}

inline nlohmann::json topology_to_json(const Topology& t) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : t.edges()) edges.push_back({e.a, e.b});
    return {{"nodes", t.node_count()}, {"edges", std::move(edges)}};
}

// ---------------------------------------------------------------------------
// Weight matrices

class WeightMatrix {
public:
    WeightMatrix() = default;
    explicit WeightMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols()) throw InputError("weight matrix must be square");
    }

    std::size_t size() const noexcept { return std::size_t(entries_.rows()); }
    const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_(Eigen::Index(i), Eigen::Index(j)); }

    Eigen::VectorXd apply(const Eigen::VectorXd& y) const { return entries_ * y; }

    bool row_stochastic(double tol = 1e-12) const {
        return entries_.minCoeff() >= -tol && ((entries_.rowwise().sum().array() - 1.0).abs() <= tol).all();
    }

    bool doubly_stochastic(double tol = 1e-12) const {
        return row_stochastic(tol) && entries_.maxCoeff() <= 1.0 + tol &&
               ((entries_.colwise().sum().array() - 1.0).abs() <= tol).all();
    }

private:
    Eigen::MatrixXd entries_;
};

// I - (f_i - f_j)(f_i - f_j)^T / 2
inline WeightMatrix pairwise_weight_matrix(std::size_t node_count, NodeId i, NodeId j) {
    if (i >= node_count || j >= node_count) throw InputError("pairwise_weight_matrix: node out of range");
    if (i == j) throw InputError("pairwise_weight_matrix: i == j is not a gossip exchange");
    Eigen::VectorXd d = Eigen::VectorXd::Zero(Eigen::Index(node_count));
    d(Eigen::Index(i)) = 1.0;
    d(Eigen::Index(j)) = -1.0;
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(d.size(), d.size()) - d * d.transpose() / 2.0;
    return WeightMatrix(std::move(p));
}

// Expected gossip matrix with an explicit normalization denominator:
// I - (Sigma - A - A^T) / denominator.
inline WeightMatrix expected_weight_matrix(const Topology& topology, double denominator) {
    if (topology.node_count() == 0) throw InputError("expected_weight_matrix: empty topology");
    if (!(denominator > 0.0)) throw InputError("expected_weight_matrix: denominator must be positive");
    const Eigen::MatrixXd a = topology.adjacency();
    const Eigen::MatrixXd sym = a + a.transpose();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    sigma.diagonal() = sym.colwise().sum().transpose();
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(a.rows(), a.cols()) - sigma / denominator + sym / denominator;
    return WeightMatrix(std::move(p));
}

inline WeightMatrix expected_weight_matrix(const Topology& topology) {
    return expected_weight_matrix(topology, 2.0 * double(topology.node_count()));
}

// One uniformly drawn edge per iteration has expectation I - L/(2|F|), which is
// the general form above with denominator 4|F|.
inline WeightMatrix schedule_expected_matrix(const Topology& topology) {
    if (topology.edge_count() == 0) return expected_weight_matrix(topology);
    return expected_weight_matrix(topology, 4.0 * double(topology.edge_count()));
}

// Second-largest eigenvalue magnitude; 0 for a 1x1 matrix.
inline double second_eigenvalue_magnitude(const WeightMatrix& p) {
    const auto& m = p.entries();
    if (m.rows() <= 1) return 0.0;
    std::vector<double> mags;
    mags.reserve(std::size_t(m.rows()));
    if (m.isApprox(m.transpose(), 1e-12)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
        for (double v : solver.eigenvalues()) mags.push_back(std::abs(v));
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
        for (const auto& v : solver.eigenvalues()) mags.push_back(std::abs(v));
    }
    std::sort(mags.begin(), mags.end(), std::greater<>());
    return mags[1];
}

inline bool connected_in_expectation(const WeightMatrix& pbar) {
    return pbar.size() <= 1 || second_eigenvalue_magnitude(pbar) < 1.0 - 1e-9;
}

inline bool connected_in_expectation(const Topology& topology) {
    return connected_in_expectation(expected_weight_matrix(topology));
}

// ---------------------------------------------------------------------------
// State evolution

// In-place pairwise average of y[i] and y[j].
inline void average_pair(std::span<double> y, NodeId i, NodeId j) {
    const double mid = 0.5 * (y[i] + y[j]);
    y[i] = mid;
    y[j] = mid;
}

// L x M block of per-instance node states; the initial block is frozen at construction.
class InstanceStates {
public:
    explicit InstanceStates(std::vector<std::vector<double>> initial) : initial_(std::move(initial)) {
        if (initial_.empty()) throw InputError("InstanceStates: need at least one instance");
        for (const auto& row : initial_)
            if (row.size() != initial_.front().size() || row.empty())
                throw InputError("InstanceStates: ragged or empty instance row");
        states_ = initial_;
    }

    std::size_t instances() const noexcept { return initial_.size(); }
    std::size_t node_count() const noexcept { return initial_.front().size(); }
    std::size_t iteration() const noexcept { return iteration_; }

    const std::vector<double>& initial(std::size_t l) const { return initial_.at(l); }
    const std::vector<double>& state(std::size_t l) const { return states_.at(l); }
    std::span<double> mutable_state(std::size_t l) { return states_.at(l); }

    double sum(std::size_t l) const {
        const auto& s = state(l);
        return std::accumulate(s.begin(), s.end(), 0.0);
    }

    void advance() noexcept { ++iteration_; }

private:
    std::vector<std::vector<double>> initial_;
    std::vector<std::vector<double>> states_;
    std::size_t iteration_ = 0;
};

inline void gossip_step(InstanceStates& states, const Topology& topology, std::size_t instance, Edge edge) {
    if (!topology.has_edge(edge.a, edge.b))
        throw InputError("gossip_step: edge (" + std::to_string(edge.a) + "," + std::to_string(edge.b) +
                         ") not in topology");
    if (topology.node_count() != states.node_count()) throw InputError("gossip_step: node count mismatch");
    average_pair(states.mutable_state(instance), edge.a, edge.b);
}

class EdgeScheduler {
public:
    explicit EdgeScheduler(const Topology& topology)
        : edges_(&topology.edges()), pick_(0, topology.edge_count() == 0 ? 0 : topology.edge_count() - 1) {}

    bool empty() const noexcept { return edges_->empty(); }
    Edge next(Rng& rng) { return (*edges_)[pick_(rng)]; }

private:
    const std::vector<Edge>* edges_;
    std::uniform_int_distribution<std::size_t> pick_;
};

using Trajectory = std::vector<std::vector<double>>;

// Attack-free run: returns y(0), ..., y(S).
inline Trajectory run_instance(const Topology& topology, std::vector<double> init, std::size_t iterations, Rng& rng) {
    if (init.size() != topology.node_count()) throw InputError("run_instance: initial state size mismatch");
    Trajectory out;
    out.reserve(iterations + 1);
    out.push_back(init);
    EdgeScheduler schedule(topology);
    for (std::size_t s = 0; s < iterations; ++s) {
        if (!schedule.empty()) {
            const Edge e = schedule.next(rng);
            average_pair(init, e.a, e.b);
        }
        out.push_back(init);
    }
    return out;
}

inline double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

inline double max_deviation(std::span<const double> v, double target) {
    double dev = 0.0;
    for (double x : v) dev = std::max(dev, std::abs(x - target));
    return dev;
}

// CSV columns: instance,iteration,node,state
inline void write_trajectory_csv(std::ostream& out, std::span<const Trajectory> per_instance) {
    out << "instance,iteration,node,state\n";
    for (std::size_t l = 0; l < per_instance.size(); ++l)
        for (std::size_t s = 0; s < per_instance[l].size(); ++s)
            for (std::size_t i = 0; i < per_instance[l][s].size(); ++i)
                out << l << ',' << s << ',' << i << ',' << format_real(per_instance[l][s][i]) << '\n';
}

}  // namespace gossipguard
