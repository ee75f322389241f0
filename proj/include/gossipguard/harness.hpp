#pragma once

// End-to-end experiment: admit -> score trust -> gossip under attack ->
// detect / localize -> isolate -> record, plus the metrics report and
// parameter sweeps.

#include "gossipguard/config.hpp"
#include "gossipguard/consensus.hpp"
#include "gossipguard/detector.hpp"
#include "gossipguard/ledger.hpp"
#include "gossipguard/metrics.hpp"
#include "gossipguard/scenario.hpp"
#include "gossipguard/trust.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gossipguard {

struct MetricsReport {
    std::size_t trials = 0;
    Confusion pairs;  // observer-neighbor localization verdicts
    Confusion nodes;  // majority vote of a node's observers
    std::optional<double> precision, recall, f1;
    std::size_t detected_trials = 0;
    double detection_rate = 0.0;
    double c1_mean = 0.0;
    std::size_t h0_trials = 0;
    std::size_t false_alarms = 0;
    std::optional<double> detection_time_iters;  // mean over detected trials
    std::optional<double> detection_time_s;
};

struct IsolationCheck {
    std::vector<NodeId> quarantined;  // attackers confirmed by at least one observer
    bool all_attackers_quarantined = false;
    double max_sum_drift = 0.0;       // largest per-step change of any instance's normal-node sum
};

struct ExperimentResult {
    Topology topology;              // after admission
    std::vector<NodeId> admitted;
    Thresholds thresholds;
    std::optional<CalibrationResult> calibration;
    std::vector<trust::TrustProfile> trust_profiles;
    std::vector<Trajectory> trajectories;    // primary trial
    std::vector<DetectionReport> reports;    // primary trial
    std::vector<Edge> isolated_edges;        // primary trial
    IsolationCheck isolation;
    MetricsReport metrics;
    ledger::Ledger chain;
    double alpha_gap = 0.0;
    std::size_t attacker_count = 0;
};

// ---------------------------------------------------------------------------
// Admission and trust

inline trust::Credential node_credential(NodeId i, Rng& rng) {
    trust::Credential c;
    c.node_id = "node-" + std::to_string(i);
    c.issuer_id = "csp-0";
    c.mac_address = {0x02, 0x00, std::uint8_t(i >> 24), std::uint8_t(i >> 16), std::uint8_t(i >> 8), std::uint8_t(i)};
    c.public_key.resize(32);
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& b : c.public_key) b = std::uint8_t(byte(rng));
    return c;
}

inline ledger::Bytes admission_payload(NodeId node, const std::string& node_id, int admitted) {
    return ledger::PayloadWriter(ledger::EventKind::Admission)
        .field(std::uint64_t(node))
        .field(node_id)
        .field(std::uint64_t(admitted))
        .take();
}

inline ledger::Bytes trust_payload(const trust::TrustProfile& p) {
    ledger::PayloadWriter w(ledger::EventKind::TrustUpdate);
    w.field(std::uint64_t(p.node));
    for (double s : p.scores) w.field(s);
    w.field(std::uint64_t(p.indicator)).field(p.rank).field(p.activity);
    return w.take();
}

inline ledger::Bytes verdict_payload(std::size_t trial, NodeId observer, NodeId neighbor, double xi, double c1) {
    return ledger::PayloadWriter(ledger::EventKind::Verdict)
        .field(std::uint64_t(trial))
        .field(std::uint64_t(observer))
        .field(std::uint64_t(neighbor))
        .field(xi)
        .field(std::abs(xi))
        .field(c1)
        .field(std::string_view("G1"))
        .take();
}

inline ledger::Bytes isolation_payload(std::size_t trial, NodeId observer, NodeId neighbor) {
    return ledger::PayloadWriter(ledger::EventKind::Isolation)
        .field(std::uint64_t(trial))
        .field(std::uint64_t(observer))
        .field(std::uint64_t(neighbor))
        .take();
}

// Synthesized behavior metrics over `window` slots: attackers run slower,
// drop more packets, fail more often and flood more requests, scaled by bias.
inline std::vector<trust::TrustProfile> simulate_trust(const Topology& topology, std::span<const NodeId> nodes,
                                                       const AttackConfig& attack, const TrustSettings& settings,
                                                       Rng& rng) {
    const std::size_t m = topology.node_count();
    const auto weights = trust::ahp_weights(settings.comparison);
    std::vector<trust::IndicatorWindow> windows(m, trust::IndicatorWindow(settings.window));
    std::vector<trust::Scores> last(m);

    struct Raw {
        double rt, tp, fail, req;
    };
    std::vector<Raw> raw(m);
    std::normal_distribution<double> rt_noise(0.0, 0.05), tp_noise(0.0, 0.03);
    for (std::size_t slot = 0; slot < settings.window; ++slot) {
        for (NodeId i = 0; i < m; ++i) {
            const double bias = attack.is_attacker(i) ? settings.attacker_bias : 0.0;
            std::poisson_distribution<int> fails(2.0 + 4.0 * bias), reqs(100.0 + 60.0 * bias);
            raw[i].rt = std::max(0.001, 0.2 + 0.1 * bias + rt_noise(rng));
            raw[i].tp = std::clamp(0.9 - 0.15 * bias + tp_noise(rng), 0.0, 1.0);
            raw[i].fail = double(fails(rng));
            raw[i].req = double(reqs(rng));
        }
        for (NodeId i : nodes) {
            trust::MetricSnapshot snap{raw[i].rt, raw[i].tp, raw[i].fail, raw[i].req, raw[i].rt, raw[i].rt,
                                       raw[i].tp, raw[i].tp, raw[i].fail, raw[i].fail, raw[i].req, raw[i].req};
            for (NodeId j : topology.neighbors(i)) {
                snap.rt_min = std::min(snap.rt_min, raw[j].rt);
                snap.rt_max = std::max(snap.rt_max, raw[j].rt);
                snap.tp_min = std::min(snap.tp_min, raw[j].tp);
                snap.tp_max = std::max(snap.tp_max, raw[j].tp);
                snap.fail_min = std::min(snap.fail_min, raw[j].fail);
                snap.fail_max = std::max(snap.fail_max, raw[j].fail);
                snap.req_min = std::min(snap.req_min, raw[j].req);
                snap.req_max = std::max(snap.req_max, raw[j].req);
            }
            last[i] = trust::metric_scores(snap);
            windows[i].push(trust::trust_indicator(last[i], weights, settings.tau));
        }
    }

    std::vector<trust::TrustProfile> out;
    for (NodeId i : nodes) {
        trust::TrustProfile p;
        p.node = i;
        p.scores = last[i];
        p.weights = weights;
        p.indicator = trust::trust_indicator(last[i], weights, settings.tau);
        p.rank = windows[i].rank();
        double lo = p.rank, hi = p.rank;
        for (NodeId j : topology.neighbors(i)) {
            lo = std::min(lo, windows[j].rank());
            hi = std::max(hi, windows[j].rank());
        }
        p.activity = trust::activity_level(p.rank, lo, hi);
        out.push_back(std::move(p));
    }
    return out;
}

// Largest per-step change of the normal-node sum across all instances of a
// fresh run on `topology` with the attack still in place.
inline double normal_sum_drift(const Scenario& scenario, std::uint64_t seed) {
    const std::size_t m = scenario.topology.node_count();
    const std::size_t L = scenario.instances;
    Rng init_rng = derive_rng(seed, Stream::Isolation, {0});
    std::normal_distribution<double> draw(scenario.initial.mean, scenario.initial.sd);
    std::vector<std::vector<double>> initial(L, std::vector<double>(m));
    for (auto& row : initial)
        for (auto& v : row) v = scenario.initial.sd > 0.0 ? draw(init_rng) : scenario.initial.mean;
    AttackConfig attack = realize_attack(scenario.attack, scenario.initial, L, init_rng);
    std::vector<Rng> streams;
    for (std::size_t l = 0; l < L; ++l) streams.push_back(derive_rng(seed, Stream::Isolation, {1, l}));
    GossipSimulation sim(scenario.topology, initial, attack, std::move(streams));

    auto normal_sum = [&](std::size_t l) {
        double t = 0.0;
        const auto& y = sim.states().state(l);
        for (NodeId i = 0; i < m; ++i)
            if (!attack.is_attacker(i)) t += y[i];
        return t;
    };
    std::vector<double> prev(L);
    for (std::size_t l = 0; l < L; ++l) prev[l] = normal_sum(l);
    double drift = 0.0;
    for (std::size_t s = 0; s < scenario.iterations; ++s) {
        sim.step();
        for (std::size_t l = 0; l < L; ++l) {
            const double now = normal_sum(l);
            drift = std::max(drift, std::abs(now - prev[l]));
            prev[l] = now;
        }
    }
    return drift;
}

// ---------------------------------------------------------------------------

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult result;
    result.alpha_gap = config.effective_alpha_gap();
    result.attacker_count = config.attackers.size();
    const Topology full = config.topology.build();
    const std::size_t m = full.node_count();
    const std::uint64_t sim_span = config.iterations;

    // (1) admission
    trust::CspRegistry registry({"csp-0"});
    Rng cred_rng = derive_rng(config.seed, Stream::Trust, {0});
    Topology admitted_topology = full;
    for (NodeId i = 0; i < m; ++i) {
        auto cred = node_credential(i, cred_rng);
        registry.issue(cred);
        trust::Credential presented = cred;
        if (std::binary_search(config.trust.forged.begin(), config.trust.forged.end(), i))
            presented.mac_address.back() ^= 0x01;
        const int ok = trust::authenticate(presented, registry);
        result.chain.append(admission_payload(i, cred.node_id, ok), 0);
        if (ok)
            result.admitted.push_back(i);
        else
            admitted_topology = admitted_topology.without_node_edges(i);
    }
    if (result.admitted.empty()) throw ConfigError("trust.forged", "no node was admitted");
    if (!connected_in_expectation(admitted_topology.induced(result.admitted)))
        throw ConfigError("topology", "admitted nodes are not connected in expectation");
    result.topology = admitted_topology;

    Scenario scenario = config.scenario(admitted_topology);
    std::vector<NodeId> active_attackers;
    for (NodeId a : config.attackers)
        if (std::binary_search(result.admitted.begin(), result.admitted.end(), a)) active_attackers.push_back(a);

    // (2) trust profiles
    {
        AttackConfig labels;
        labels.attackers = config.attackers;
        Rng trust_rng = derive_rng(config.seed, Stream::Trust, {1});
        result.trust_profiles = simulate_trust(admitted_topology, result.admitted, labels, config.trust, trust_rng);
        for (const auto& p : result.trust_profiles) result.chain.append(trust_payload(p), 0);
    }

    // thresholds
    if (config.thresholds) {
        result.thresholds = *config.thresholds;
    } else {
        result.calibration =
            calibrate_thresholds(scenario, config.calibration.target_far, config.calibration.trials, config.seed);
        result.thresholds = result.calibration->thresholds;
    }

    // (3)-(6) attacked trials
    MetricsReport& mr = result.metrics;
    mr.trials = config.trials;
    double c1_total = 0.0, det_iters_total = 0.0, det_secs_total = 0.0;
    std::size_t c1_count = 0, det_count = 0;
    for (std::size_t t = 0; t < config.trials; ++t) {
        TrialOptions opts;
        opts.record_trajectories = t == 0 && config.export_trajectories;
        opts.monitor_delta1 = result.thresholds.delta1;
        const auto trial = run_trial(scenario, true, trial_seed(config.seed, t), Stream::Attacked, opts);
        const auto reports = detect_all(admitted_topology, trial, result.thresholds);

        bool alarm = false;
        std::map<NodeId, std::pair<std::size_t, std::size_t>> votes;  // node -> (flags, observers)
        Topology isolated = admitted_topology;
        const std::uint64_t clock = t * sim_span + sim_span;
        for (const auto& r : reports) {
            c1_total += r.c1;
            ++c1_count;
            alarm = alarm || r.network_verdict == Hypothesis::G1;
            for (const auto& [j, v] : r.xi) {
                auto it = r.neighbor_verdicts.find(j);
                const bool flagged = it != r.neighbor_verdicts.end() && it->second == Hypothesis::G1;
                mr.pairs.add(trial.attack.is_attacker(j), flagged);
                auto& vote = votes[j];
                vote.first += flagged ? 1 : 0;
                vote.second += 1;
                if (flagged) {
                    result.chain.append(verdict_payload(t, r.observer, j, v, r.c1), clock);
                    isolated = isolate(isolated, r.observer, j);
                    result.chain.append(isolation_payload(t, r.observer, j), clock);
                    if (t == 0) result.isolated_edges.emplace_back(r.observer, j);
                }
            }
        }
        for (const auto& [j, vote] : votes) mr.nodes.add(trial.attack.is_attacker(j), 2 * vote.first > vote.second);

        if (alarm) ++mr.detected_trials;
        if (const auto dt = detection_time(config.attack_start, trial.first_alarm, config.seconds_per_iteration)) {
            det_iters_total += double(dt->iterations);
            det_secs_total += dt->seconds;
            ++det_count;
        }

        if (t == 0) {
            result.trajectories = trial.trajectories;
            result.reports = reports;
            // attackers confirmed on the chain are cut off by every neighbor
            Topology quarantined = isolated;
            for (NodeId a : active_attackers) {
                const bool confirmed = std::any_of(reports.begin(), reports.end(), [&](const DetectionReport& r) {
                    auto it = r.neighbor_verdicts.find(a);
                    return it != r.neighbor_verdicts.end() && it->second == Hypothesis::G1;
                });
                if (confirmed) {
                    result.isolation.quarantined.push_back(a);
                    quarantined = quarantined.without_node_edges(a);
                }
            }
            result.isolation.all_attackers_quarantined = result.isolation.quarantined.size() == active_attackers.size();
            Scenario rerun = scenario;
            rerun.topology = quarantined;
            result.isolation.max_sum_drift = normal_sum_drift(rerun, config.seed);
        }
    }
    mr.precision = mr.pairs.precision();
    mr.recall = mr.pairs.recall();
    mr.f1 = mr.pairs.f1();
    mr.detection_rate = config.trials ? double(mr.detected_trials) / double(config.trials) : 0.0;
    mr.c1_mean = c1_count ? c1_total / double(c1_count) : 0.0;
    if (det_count) {
        mr.detection_time_iters = det_iters_total / double(det_count);
        mr.detection_time_s = det_secs_total / double(det_count);
    }

    // (7) attack-free runs for false alarms
    mr.h0_trials = config.h0_trials;
    for (std::size_t t = 0; t < config.h0_trials; ++t) {
        const auto trial = run_trial(scenario, false, trial_seed(config.seed, t), Stream::Null);
        if (max_observer_c1(admitted_topology, trial.observers, trial.first, trial.last) > result.thresholds.delta1)
            ++mr.false_alarms;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Metrics CSV

inline constexpr const char* kMetricsCsvHeader =
    "run_id,seed,nodes,attackers,alpha_gap,L,S,c1_mean,detection_rate,tp,fp,fn,tn,precision,recall,f1,"
    "false_alarms,det_time_iters,det_time_s";

inline void write_metrics_csv_row(std::ostream& out, std::size_t run_id, const ExperimentConfig& config,
                                  const ExperimentResult& r) {
    const auto& m = r.metrics;
    out << run_id << ',' << config.seed << ',' << r.topology.node_count() << ',' << r.attacker_count << ','
        << format_real(r.alpha_gap) << ',' << config.instances << ',' << config.iterations << ','
        << format_real(m.c1_mean) << ',' << format_real(m.detection_rate) << ',' << m.pairs.tp << ',' << m.pairs.fp
        << ',' << m.pairs.fn << ',' << m.pairs.tn << ',' << format_real(m.precision) << ','
        << format_real(m.recall) << ',' << format_real(m.f1) << ',' << m.false_alarms << ','
        << format_real(m.detection_time_iters, "not_detected") << ','
        << format_real(m.detection_time_s, "not_detected") << '\n';
}

// ---------------------------------------------------------------------------
// Sweeps

inline const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> names = {"alpha_gap", "attackers", "nodes",     "rho",       "sigma",
                                                   "instances", "iterations", "edge_prob", "tau", "seed"};
    return names;
}

inline ExperimentConfig with_parameter(ExperimentConfig config, const std::string& name, double value) {
    auto as_count = [&](const char* what) {
        if (!(value >= 0.0) || value != std::floor(value)) throw InputError(std::string(what) + " must be a non-negative integer");
        return std::size_t(value);
    };
    if (name == "alpha_gap") {
        config.alpha.reset();
        config.alpha_gap = value;
    } else if (name == "attackers") {
        config.attackers.clear();
        for (NodeId j = 0; j < as_count("attackers"); ++j) config.attackers.push_back(j);
    } else if (name == "nodes") {
        if (config.topology.fixed) throw InputError("sweep over nodes needs a generated topology");
        config.topology.nodes = as_count("nodes");
    } else if (name == "rho") {
        config.rho = value;
    } else if (name == "sigma") {
        config.sigma = value;
    } else if (name == "instances") {
        config.instances = as_count("instances");
    } else if (name == "iterations") {
        config.iterations = as_count("iterations");
    } else if (name == "edge_prob") {
        if (config.topology.fixed) throw InputError("sweep over edge_prob needs a generated topology");
        config.topology.edge_prob = value;
    } else if (name == "tau") {
        config.trust.tau = value;
    } else if (name == "seed") {
        config.seed = as_count("seed");
    } else {
        throw InputError("unknown sweep parameter '" + name + "'");
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw InputError(std::string("sweep value ") + format_real(value) + " for '" + name + "': " + e.what());
    }
    return config;
}

struct SweepRow {
    double value = 0.0;
    ExperimentConfig config;
    ExperimentResult result;
};

inline std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& name,
                                   std::span<const double> values) {
    if (values.empty()) throw InputError("sweep: grid must be non-empty");
    std::vector<ExperimentConfig> configs;
    for (double v : values) {
        auto c = with_parameter(base, name, v);
        c.export_trajectories = false;
        configs.push_back(std::move(c));
    }
    std::vector<SweepRow> rows;
    for (std::size_t k = 0; k < values.size(); ++k) rows.push_back({values[k], configs[k], run_experiment(configs[k])});
    return rows;
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << kMetricsCsvHeader << '\n';
    for (std::size_t k = 0; k < rows.size(); ++k) write_metrics_csv_row(out, k, rows[k].config, rows[k].result);
}

// ---------------------------------------------------------------------------
// Output bundle for `run`

inline nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json("undefined"); };
    const auto& m = r.metrics;
    const auto overhead = ledger::overhead_bytes(r.chain);
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : r.isolated_edges) edges.push_back({e.a, e.b});
    nlohmann::json j = {
        {"seed", config.seed},
        {"nodes", r.topology.node_count()},
        {"admitted", r.admitted},
        {"attackers", config.attackers},
        {"alpha_gap", r.alpha_gap},
        {"thresholds",
         {{"delta1", r.thresholds.delta1},
          {"epsilon", r.thresholds.epsilon},
          {"direction", to_string(r.thresholds.direction)}}},
        {"metrics",
         {{"trials", m.trials},
          {"tp", m.pairs.tp},
          {"fp", m.pairs.fp},
          {"fn", m.pairs.fn},
          {"tn", m.pairs.tn},
          {"precision", opt(m.precision)},
          {"recall", opt(m.recall)},
          {"f1", opt(m.f1)},
          {"node_level",
           {{"tp", m.nodes.tp},
            {"fp", m.nodes.fp},
            {"fn", m.nodes.fn},
            {"tn", m.nodes.tn},
            {"precision", opt(m.nodes.precision())},
            {"recall", opt(m.nodes.recall())},
            {"f1", opt(m.nodes.f1())}}},
          {"detection_rate", m.detection_rate},
          {"c1_mean", m.c1_mean},
          {"h0_trials", m.h0_trials},
          {"false_alarms", m.false_alarms},
          {"det_time_iters", m.detection_time_iters ? nlohmann::json(*m.detection_time_iters) : "not_detected"},
          {"det_time_s", m.detection_time_s ? nlohmann::json(*m.detection_time_s) : "not_detected"}}},
        {"isolation",
         {{"isolated_edges", std::move(edges)},
          {"quarantined", r.isolation.quarantined},
          {"all_attackers_quarantined", r.isolation.all_attackers_quarantined},
          {"max_sum_drift", r.isolation.max_sum_drift}}},
        {"ledger",
         {{"blocks", r.chain.size()},
          {"total_bytes", overhead.total_bytes},
          {"per_event_overhead", overhead.per_event_overhead}}},
        {"note", "sweeps substitute network size, attack magnitude and attacker count for file size"}};
    if (r.calibration) j["calibration"] = calibration_to_json(*r.calibration);
    return j;
}

inline void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const ExperimentResult& r) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("metrics.csv");
        f << kMetricsCsvHeader << '\n';
        write_metrics_csv_row(f, 0, config, r);
    }
    {
        auto f = open("detections.csv");
        write_detection_csv_header(f);
        for (const auto& rep : r.reports) write_detection_csv_rows(f, rep);
    }
    {
        auto f = open("detections.json");
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& rep : r.reports) arr.push_back(to_json(rep));
        f << arr.dump(2) << '\n';
    }
    {
        auto f = open("trust.csv");
        trust::write_trust_csv(f, r.trust_profiles);
    }
    if (config.export_trajectories) {
        auto f = open("trajectories.csv");
        write_trajectory_csv(f, r.trajectories);
    }
    {
        auto f = open("ledger.jsonl");
        ledger::write_jsonl(f, r.chain);
    }
    {
        auto f = open("report.json");
        f << summary_json(config, r).dump(2) << '\n';
    }
}

}  // namespace gossipguard
