#pragma once

// Layered decentralized detection run by every normal observer i:
//
//   xi_ij = (1/L) sum_l (y_j^l(S) - y_j^l(0))            neighbor drift score
//   c1_i  = (1/|M_i|) sum_j |xi_ij - mean_j xi_ij|        network layer, G1 iff c1_i > delta1
//   K1_ij = |xi_ij|                                       localization, G1 iff K1_ij crosses epsilon
//
// Localization only runs at observers whose network layer reported G1.

#include "gossipguard/consensus.hpp"
#include "gossipguard/error.hpp"
#include "gossipguard/format.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gossipguard {

enum class Hypothesis { G0, G1 };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::G1 ? "G1" : "G0"; }

// Which side of epsilon marks an attacker.
enum class Direction { Greater, Less };

inline const char* to_string(Direction d) { return d == Direction::Greater ? "gt" : "lt"; }

inline Direction direction_from_string(std::string_view s) {
    if (s == "gt") return Direction::Greater;
    if (s == "lt") return Direction::Less;
    throw InputError("direction must be \"gt\" or \"lt\"");
}

struct Thresholds {
    double delta1 = 0.0;
    double epsilon = 0.0;
    Direction direction = Direction::Greater;
};

struct InstanceObservation {
    double first = 0.0;
    double last = 0.0;
};

// First and last states of each neighbor of `observer`, one record per instance.
struct ObservationLog {
    NodeId observer = 0;
    std::size_t instances = 0;
    std::map<NodeId, std::vector<InstanceObservation>> neighbors;
};

// Builds the log from L x M blocks of first and last states.
inline ObservationLog observe(const Topology& topology, NodeId observer, std::span<const std::vector<double>> first,
                              std::span<const std::vector<double>> last) {
    if (first.size() != last.size() || first.empty()) throw InputError("observe: first/last instance count mismatch");
    ObservationLog log{observer, first.size(), {}};
    for (NodeId j : topology.neighbors(observer)) {
        auto& rec = log.neighbors[j];
        rec.reserve(first.size());
        for (std::size_t l = 0; l < first.size(); ++l) rec.push_back({first[l].at(j), last[l].at(j)});
    }
    return log;
}

using ScoreMap = std::map<NodeId, double>;
using VerdictMap = std::map<NodeId, Hypothesis>;

inline ScoreMap score_xi(const ObservationLog& log) {
    if (log.instances == 0) throw InputError("score_xi: need at least one instance");
    ScoreMap xi;
    for (const auto& [j, records] : log.neighbors) {
        if (records.size() != log.instances)
            throw InputError("score_xi: neighbor " + std::to_string(j) + " has " + std::to_string(records.size()) +
                             " instance records, expected " + std::to_string(log.instances));
        double total = 0.0;
        for (const auto& r : records) total += r.last - r.first;
        xi[j] = total / double(log.instances);
    }
    return xi;
}

inline double c1_statistic(const ScoreMap& xi) {
    if (xi.empty()) throw InputError("network_detect: empty neighbor set");
    // identical scores give exactly 0 rather than a rounding residue of the mean
    if (std::all_of(xi.begin(), xi.end(), [&](const auto& e) { return e.second == xi.begin()->second; })) return 0.0;
    double mean = 0.0;
    for (const auto& [j, v] : xi) mean += v;
    mean /= double(xi.size());
    double dev = 0.0;
    for (const auto& [j, v] : xi) dev += std::abs(v - mean);
    return dev / double(xi.size());
}

struct NetworkDecision {
    double c1 = 0.0;
    Hypothesis verdict = Hypothesis::G0;
};

// Strict inequality: c1 == delta1 stays G0.
inline NetworkDecision network_detect(const ScoreMap& xi, double delta1) {
    if (!(delta1 > 0.0)) throw InputError("network_detect: delta1 must be positive");
    const double c1 = c1_statistic(xi);
    return {c1, c1 > delta1 ? Hypothesis::G1 : Hypothesis::G0};
}

inline bool crosses(double k1, double epsilon, Direction direction) {
    return direction == Direction::Greater ? k1 > epsilon : k1 < epsilon;
}

inline VerdictMap localize(const ScoreMap& xi, double epsilon, Direction direction = Direction::Greater) {
    if (!(epsilon > 0.0)) throw InputError("localize: epsilon must be positive");
    VerdictMap out;
    for (const auto& [j, v] : xi) out[j] = crosses(std::abs(v), epsilon, direction) ? Hypothesis::G1 : Hypothesis::G0;
    return out;
}

struct DetectionReport {
    NodeId observer = 0;
    ScoreMap xi;
    double c1 = 0.0;
    Hypothesis network_verdict = Hypothesis::G0;
    VerdictMap neighbor_verdicts;  // empty unless network_verdict == G1
    Thresholds thresholds;

    std::vector<NodeId> flagged() const {
        std::vector<NodeId> out;
        for (const auto& [j, h] : neighbor_verdicts)
            if (h == Hypothesis::G1) out.push_back(j);
        return out;
    }
};

inline DetectionReport detect(const ObservationLog& log, const Thresholds& thresholds) {
    DetectionReport report;
    report.observer = log.observer;
    report.thresholds = thresholds;
    report.xi = score_xi(log);
    const auto decision = network_detect(report.xi, thresholds.delta1);
    report.c1 = decision.c1;
    report.network_verdict = decision.verdict;
    if (decision.verdict == Hypothesis::G1)
        report.neighbor_verdicts = localize(report.xi, thresholds.epsilon, thresholds.direction);
    return report;
}

// Observer i severs its link to j. Absent edges leave the topology unchanged.
inline Topology isolate(const Topology& topology, NodeId i, NodeId j) { return topology.without_edge(i, j); }

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json to_json(const DetectionReport& r) {
    nlohmann::json neighbors = nlohmann::json::array();
    for (const auto& [j, v] : r.xi) {
        auto it = r.neighbor_verdicts.find(j);
        neighbors.push_back({{"neighbor", j},
                             {"xi", v},
                             {"k1", std::abs(v)},
                             {"verdict", to_string(it == r.neighbor_verdicts.end() ? Hypothesis::G0 : it->second)}});
    }
    return {{"observer", r.observer},
            {"c1", r.c1},
            {"network_verdict", to_string(r.network_verdict)},
            {"delta1", r.thresholds.delta1},
            {"epsilon", r.thresholds.epsilon},
            {"direction", to_string(r.thresholds.direction)},
            {"neighbors", std::move(neighbors)}};
}

inline void write_detection_csv_header(std::ostream& out) { out << "observer,neighbor,xi,k1,verdict\n"; }

inline void write_detection_csv_rows(std::ostream& out, const DetectionReport& r) {
    for (const auto& [j, v] : r.xi) {
        auto it = r.neighbor_verdicts.find(j);
        const Hypothesis h = it == r.neighbor_verdicts.end() ? Hypothesis::G0 : it->second;
        out << r.observer << ',' << j << ',' << format_real(v) << ',' << format_real(std::abs(v)) << ','
            << to_string(h) << '\n';
    }
}

}  // namespace gossipguard
