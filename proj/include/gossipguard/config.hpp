#pragma once

// Experiment configuration document. Every parse failure is a ConfigError
// naming the dotted field path.
//
// {
//   "topology":   {"nodes": 10, "edges": [[0,1], ...]}
//               | {"generator": "random_connected"|"ring"|"path"|"complete",
//                  "nodes": 10, "edge_prob": 0.3, "seed": 7},
//   "initial":    {"mean": 0.0, "sd": 1.0},
//   "instances":  10, "iterations": 60,
//   "attack":     {"attackers": [0] | "count": 1, "alpha": x | [..] | "alpha_gap": g,
//                  "rho": 0.9, "sigma": 0.05, "start": 0},
//   "trust":      {"comparison": [[..]], "tau": 0.5, "window": 50,
//                  "attacker_bias": 1.0, "forged": [node ids]},
//   "thresholds": {"delta1": x, "epsilon": y, "direction": "gt"|"lt"},
//   "calibration":{"target_far": 0.05, "trials": 500},
//   "trials": 100, "h0_trials": 100, "seed": 1,
//   "check_interval": 1, "seconds_per_iteration": 0.01,
//   "export_trajectories": true
// }
//
// alpha_gap is in units of the initial-state sd: alpha = mean + alpha_gap * sd.

#include "gossipguard/consensus.hpp"
#include "gossipguard/detector.hpp"
#include "gossipguard/scenario.hpp"
#include "gossipguard/trust.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gossipguard {

struct TopologySpec {
    std::optional<Topology> fixed;
    std::string generator;
    std::size_t nodes = 0;
    double edge_prob = 0.3;
    std::uint64_t seed = 7;

    std::size_t node_count() const { return fixed ? fixed->node_count() : nodes; }

    Topology build() const {
        if (fixed) return *fixed;
        if (generator == "ring") return ring_topology(nodes);
        if (generator == "path") return path_topology(nodes);
        if (generator == "complete") return complete_topology(nodes);
        Rng rng = derive_rng(seed, Stream::Topology);
        return random_connected_topology(nodes, edge_prob, rng);
    }
};

struct TrustSettings {
    trust::ComparisonMatrix comparison = trust::ComparisonMatrix::uniform(4);
    double tau = 0.5;
    std::size_t window = 50;
    double attacker_bias = 1.0;
    std::vector<NodeId> forged;  // nodes presenting a tampered credential
};

struct CalibrationRequest {
    double target_far = 0.05;
    std::size_t trials = 500;
};

struct ExperimentConfig {
    TopologySpec topology;
    InitialDistribution initial;
    std::size_t instances = 10;
    std::size_t iterations = 60;

    std::vector<NodeId> attackers;
    std::optional<std::vector<double>> alpha;  // absolute targets
    double alpha_gap = 0.0;                    // used when alpha is absent
    double rho = 0.9;
    double sigma = 0.05;
    std::size_t attack_start = 0;

    TrustSettings trust;
    std::optional<Thresholds> thresholds;
    CalibrationRequest calibration;

    std::size_t trials = 100;
    std::size_t h0_trials = 100;
    std::uint64_t seed = 1;
    std::size_t check_interval = 1;
    double seconds_per_iteration = 0.01;
    bool export_trajectories = true;

    std::vector<double> resolved_alpha() const {
        if (alpha) return *alpha;
        return {initial.mean + alpha_gap * initial.sd};
    }

    double effective_alpha_gap() const {
        if (!alpha) return alpha_gap;
        if (initial.sd == 0.0) return 0.0;
        double mean = 0.0;
        for (double a : *alpha) mean += a;
        mean /= double(alpha->size());
        return (mean - initial.mean) / initial.sd;
    }

    Scenario scenario(const Topology& topology) const {
        Scenario s;
        s.topology = topology;
        s.initial = initial;
        s.instances = instances;
        s.iterations = iterations;
        s.attack.attackers = attackers;
        s.attack.alpha = resolved_alpha();
        s.attack.rho = rho;
        s.attack.sigma = sigma;
        s.attack.start = attack_start;
        s.check_interval = check_interval;
        return s;
    }

    void validate() const {
        const std::size_t m = topology.node_count();
        if (m == 0) throw ConfigError("topology.nodes", "must be positive");
        if (instances == 0) throw ConfigError("instances", "must be >= 1");
        if (iterations == 0) throw ConfigError("iterations", "must be >= 1");
        if (!(initial.sd >= 0.0)) throw ConfigError("initial.sd", "must be non-negative");
        for (NodeId a : attackers)
            if (a >= m) throw ConfigError("attack.attackers", "node " + std::to_string(a) + " out of range");
        if (!attackers.empty() && attackers.size() >= m) throw ConfigError("attack.attackers", "must leave a normal node");
        if (alpha && alpha->size() != 1 && alpha->size() != instances)
            throw ConfigError("attack.alpha", "need a scalar or one value per instance");
        if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("attack.rho", "must lie in [0, 1)");
        if (!(sigma >= 0.0)) throw ConfigError("attack.sigma", "must be non-negative");
        if (trust.comparison.size() != 4) throw ConfigError("trust.comparison", "must be 4x4");
        if (!(trust.tau >= 0.0 && trust.tau <= 1.0)) throw ConfigError("trust.tau", "must lie in [0, 1]");
        if (trust.window == 0) throw ConfigError("trust.window", "must be >= 1");
        for (NodeId f : trust.forged)
            if (f >= m) throw ConfigError("trust.forged", "node " + std::to_string(f) + " out of range");
        if (thresholds) {
            if (!(thresholds->delta1 > 0.0)) throw ConfigError("thresholds.delta1", "must be positive");
            if (!(thresholds->epsilon > 0.0)) throw ConfigError("thresholds.epsilon", "must be positive");
        }
        if (!(calibration.target_far > 0.0 && calibration.target_far < 1.0))
            throw ConfigError("calibration.target_far", "must lie in (0, 1)");
        if (calibration.trials < 100) throw ConfigError("calibration.trials", "must be >= 100");
        if (trials == 0) throw ConfigError("trials", "must be >= 1");
        if (check_interval == 0) throw ConfigError("check_interval", "must be >= 1");
        if (!(seconds_per_iteration >= 0.0)) throw ConfigError("seconds_per_iteration", "must be non-negative");
    }
};

namespace detail {

inline const nlohmann::json* member(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline double read_number(const nlohmann::json& obj, const char* key, const std::string& path, double fallback) {
    const auto* v = member(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(path, "must be a number");
    return v->get<double>();
}

inline std::uint64_t read_count(const nlohmann::json& obj, const char* key, const std::string& path,
                                std::uint64_t fallback) {
    const auto* v = member(obj, key);
    if (!v) return fallback;
    if (!is_json_index(*v)) throw ConfigError(path, "must be a non-negative integer");
    return v->get<std::uint64_t>();
}

inline std::vector<NodeId> read_nodes(const nlohmann::json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "must be an array of node IDs");
    std::vector<NodeId> out;
    for (const auto& x : v) {
        if (!is_json_index(x)) throw ConfigError(path, "node IDs must be non-negative integers");
        out.push_back(x.get<NodeId>());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline const nlohmann::json& object_or_empty(const nlohmann::json& doc, const char* key) {
    static const nlohmann::json empty = nlohmann::json::object();
    const auto* v = member(doc, key);
    if (!v) return empty;
    if (!v->is_object()) throw ConfigError(key, "must be an object");
    return *v;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ConfigError("<root>", "config must be a JSON object");
    ExperimentConfig cfg;

    const auto* topo = member(doc, "topology");
    if (!topo || !topo->is_object()) throw ConfigError("topology", "missing or not an object");
    if (member(*topo, "generator")) {
        const auto& g = (*topo)["generator"];
        if (!g.is_string()) throw ConfigError("topology.generator", "must be a string");
        cfg.topology.generator = g.get<std::string>();
        if (cfg.topology.generator != "random_connected" && cfg.topology.generator != "ring" &&
            cfg.topology.generator != "path" && cfg.topology.generator != "complete")
            throw ConfigError("topology.generator", "unknown generator '" + cfg.topology.generator + "'");
        cfg.topology.nodes = read_count(*topo, "nodes", "topology.nodes", 0);
        cfg.topology.edge_prob = read_number(*topo, "edge_prob", "topology.edge_prob", 0.3);
        if (!(cfg.topology.edge_prob >= 0.0 && cfg.topology.edge_prob <= 1.0))
            throw ConfigError("topology.edge_prob", "must lie in [0, 1]");
        cfg.topology.seed = read_count(*topo, "seed", "topology.seed", 7);
    } else {
        cfg.topology.fixed = topology_from_json(*topo);
    }

    const auto& init = object_or_empty(doc, "initial");
    cfg.initial.mean = read_number(init, "mean", "initial.mean", 0.0);
    cfg.initial.sd = read_number(init, "sd", "initial.sd", 1.0);

    cfg.instances = read_count(doc, "instances", "instances", cfg.instances);
    cfg.iterations = read_count(doc, "iterations", "iterations", cfg.iterations);

    const auto& attack = object_or_empty(doc, "attack");
    if (const auto* a = member(attack, "attackers")) {
        cfg.attackers = read_nodes(*a, "attack.attackers");
    } else if (member(attack, "count")) {
        const auto k = read_count(attack, "count", "attack.count", 0);
        for (NodeId j = 0; j < k; ++j) cfg.attackers.push_back(j);
    }
    if (const auto* a = member(attack, "alpha")) {
        if (member(attack, "alpha_gap")) throw ConfigError("attack.alpha", "give either alpha or alpha_gap, not both");
        std::vector<double> alpha;
        if (a->is_number()) {
            alpha.push_back(a->get<double>());
        } else if (a->is_array() && !a->empty()) {
            for (const auto& x : *a) {
                if (!x.is_number()) throw ConfigError("attack.alpha", "entries must be numbers");
                alpha.push_back(x.get<double>());
            }
        } else {
            throw ConfigError("attack.alpha", "must be a number or a non-empty array of numbers");
        }
        cfg.alpha = std::move(alpha);
    }
    cfg.alpha_gap = read_number(attack, "alpha_gap", "attack.alpha_gap", 0.0);
    cfg.rho = read_number(attack, "rho", "attack.rho", cfg.rho);
    cfg.sigma = read_number(attack, "sigma", "attack.sigma", cfg.sigma);
    cfg.attack_start = read_count(attack, "start", "attack.start", 0);

    const auto& tr = object_or_empty(doc, "trust");
    if (const auto* c = member(tr, "comparison")) {
        std::vector<std::vector<double>> rows;
        try {
            rows = c->get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("trust.comparison", "must be a matrix of numbers");
        }
        try {
            cfg.trust.comparison = trust::ComparisonMatrix(std::move(rows));
        } catch (const InputError& e) {
            throw ConfigError("trust.comparison", e.what());
        }
    }
    cfg.trust.tau = read_number(tr, "tau", "trust.tau", cfg.trust.tau);
    cfg.trust.window = read_count(tr, "window", "trust.window", cfg.trust.window);
    cfg.trust.attacker_bias = read_number(tr, "attacker_bias", "trust.attacker_bias", cfg.trust.attacker_bias);
    if (const auto* f = member(tr, "forged")) cfg.trust.forged = read_nodes(*f, "trust.forged");

    if (const auto* th = member(doc, "thresholds")) {
        if (!th->is_object()) throw ConfigError("thresholds", "must be an object");
        Thresholds t;
        if (!member(*th, "delta1")) throw ConfigError("thresholds.delta1", "missing");
        if (!member(*th, "epsilon")) throw ConfigError("thresholds.epsilon", "missing");
        t.delta1 = read_number(*th, "delta1", "thresholds.delta1", 0.0);
        t.epsilon = read_number(*th, "epsilon", "thresholds.epsilon", 0.0);
        if (const auto* d = member(*th, "direction")) {
            if (!d->is_string()) throw ConfigError("thresholds.direction", "must be \"gt\" or \"lt\"");
            try {
                t.direction = direction_from_string(d->get<std::string>());
            } catch (const InputError& e) {
                throw ConfigError("thresholds.direction", e.what());
            }
        }
        cfg.thresholds = t;
    }

    const auto& cal = object_or_empty(doc, "calibration");
    cfg.calibration.target_far = read_number(cal, "target_far", "calibration.target_far", cfg.calibration.target_far);
    cfg.calibration.trials = read_count(cal, "trials", "calibration.trials", cfg.calibration.trials);

    cfg.trials = read_count(doc, "trials", "trials", cfg.trials);
    cfg.h0_trials = read_count(doc, "h0_trials", "h0_trials", cfg.trials);
    cfg.seed = read_count(doc, "seed", "seed", cfg.seed);
    cfg.check_interval = read_count(doc, "check_interval", "check_interval", cfg.check_interval);
    cfg.seconds_per_iteration =
        read_number(doc, "seconds_per_iteration", "seconds_per_iteration", cfg.seconds_per_iteration);
    if (const auto* e = member(doc, "export_trajectories")) {
        if (!e->is_boolean()) throw ConfigError("export_trajectories", "must be a boolean");
        cfg.export_trajectories = e->get<bool>();
    }

    cfg.validate();
    return cfg;
}

inline nlohmann::json calibration_to_json(const CalibrationResult& r) {
    nlohmann::json j = {{"delta1", r.thresholds.delta1},
                        {"epsilon", r.thresholds.epsilon},
                        {"direction", to_string(r.thresholds.direction)},
                        {"achieved_far", r.achieved_far},
                        {"target_far", r.target_far},
                        {"trials", r.trials}};
    if (r.tpr) j["tpr"] = *r.tpr;
    if (r.fpr) j["fpr"] = *r.fpr;
    return j;
}

}  // namespace gossipguard
