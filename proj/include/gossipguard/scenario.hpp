#pragma once

// Monte-Carlo trial driver shared by calibration and the experiment harness.
//
// A trial draws L x M initial states from N(mean, sd), draws attacker masks
// from the same law, runs S lockstep gossip iterations and hands back the
// first/last state blocks every observer needs. Seeds follow the splitting
// rule trial seed = root + trial index, with a stream tag per family.

#include "gossipguard/adversary.hpp"
#include "gossipguard/consensus.hpp"
#include "gossipguard/detector.hpp"
#include "gossipguard/random.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

namespace gossipguard {

struct InitialDistribution {
    double mean = 0.0;
    double sd = 1.0;
};

struct AttackSpec {
    std::vector<NodeId> attackers;
    std::vector<double> alpha;  // scalar or one per instance
    double rho = 0.9;
    double sigma = 0.05;
    std::size_t start = 0;

    double mean_alpha() const {
        if (alpha.empty()) return 0.0;
        double t = 0.0;
        for (double a : alpha) t += a;
        return t / double(alpha.size());
    }
};

struct Scenario {
    Topology topology;
    InitialDistribution initial;
    std::size_t instances = 10;
    std::size_t iterations = 100;
    AttackSpec attack;
    std::size_t check_interval = 1;

    void validate() const {
        if (topology.node_count() == 0) throw InputError("scenario: empty topology");
        if (instances == 0) throw InputError("scenario: instances must be >= 1");
        if (iterations == 0) throw InputError("scenario: iterations must be >= 1");
        if (!(initial.sd >= 0.0)) throw InputError("scenario: initial sd must be non-negative");
        if (check_interval == 0) throw InputError("scenario: check_interval must be >= 1");
    }
};

// Normal nodes with at least one neighbor.
inline std::vector<NodeId> observers(const Topology& topology, std::span<const NodeId> attackers) {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < topology.node_count(); ++i)
        if (std::find(attackers.begin(), attackers.end(), i) == attackers.end() && topology.degree(i) > 0)
            out.push_back(i);
    return out;
}

struct TrialOptions {
    bool record_trajectories = false;
    std::optional<double> monitor_delta1;  // track the first network alarm against this threshold
};

struct TrialOutcome {
    std::vector<std::vector<double>> first;  // y(0), L x M
    std::vector<std::vector<double>> last;   // y(S), L x M
    std::vector<Trajectory> trajectories;    // per instance, when recorded
    std::vector<NodeId> observers;
    AttackConfig attack;
    std::optional<std::size_t> first_alarm;  // iteration of first network alarm, if monitored
};

inline AttackConfig realize_attack(const AttackSpec& spec, const InitialDistribution& init, std::size_t instances,
                                   Rng& rng) {
    AttackConfig cfg;
    cfg.attackers = spec.attackers;
    std::sort(cfg.attackers.begin(), cfg.attackers.end());
    cfg.targets = spec.alpha.empty() ? std::vector<double>{init.mean} : spec.alpha;
    cfg.rho = spec.rho;
    cfg.sigma = spec.sigma;
    cfg.start_iteration = spec.start;
    std::normal_distribution<double> draw(init.mean, init.sd);
    for (std::size_t a = 0; a < cfg.attackers.size(); ++a) {
        std::vector<double> row(instances);
        for (auto& m : row) m = init.sd > 0.0 ? draw(rng) : init.mean;
        cfg.masks.push_back(std::move(row));
    }
    return cfg;
}

// Largest c1 over observers for the states in `current` against `first`.
inline double max_observer_c1(const Topology& topology, std::span<const NodeId> obs,
                              std::span<const std::vector<double>> first, std::span<const std::vector<double>> current) {
    double best = 0.0;
    for (NodeId i : obs) best = std::max(best, c1_statistic(score_xi(observe(topology, i, first, current))));
    return best;
}

inline TrialOutcome run_trial(const Scenario& scenario, bool attacked, std::uint64_t seed, Stream stream,
                              const TrialOptions& options = {}) {
    scenario.validate();
    const std::size_t m = scenario.topology.node_count();
    const std::size_t L = scenario.instances;

    Rng init_rng = derive_rng(seed, stream, {0});
    std::normal_distribution<double> draw(scenario.initial.mean, scenario.initial.sd);
    std::vector<std::vector<double>> initial(L, std::vector<double>(m));
    for (auto& row : initial)
        for (auto& v : row) v = scenario.initial.sd > 0.0 ? draw(init_rng) : scenario.initial.mean;

    TrialOutcome out;
    if (attacked && !scenario.attack.attackers.empty()) {
        out.attack = realize_attack(scenario.attack, scenario.initial, L, init_rng);
        // an attacker's first reported value is its mask
        for (std::size_t l = 0; l < L; ++l)
            for (NodeId j : out.attack.attackers) initial[l].at(j) = out.attack.mask(j, l);
    }
    out.observers = observers(scenario.topology, out.attack.attackers);

    std::vector<Rng> streams;
    streams.reserve(L);
    for (std::size_t l = 0; l < L; ++l) streams.push_back(derive_rng(seed, stream, {1, l}));

    GossipSimulation sim(scenario.topology, initial, out.attack, std::move(streams));
    if (options.record_trajectories) {
        out.trajectories.resize(L);
        for (std::size_t l = 0; l < L; ++l) out.trajectories[l].push_back(initial[l]);
    }

    std::vector<std::vector<double>> current(L);
    const bool monitor = options.monitor_delta1.has_value() && !out.observers.empty();
    for (std::size_t s = 0; s < scenario.iterations; ++s) {
        sim.step();
        const std::size_t now = sim.iteration();
        if (options.record_trajectories)
            for (std::size_t l = 0; l < L; ++l) out.trajectories[l].push_back(sim.states().state(l));
        if (monitor && !out.first_alarm && now >= scenario.attack.start &&
            (now % scenario.check_interval == 0 || now == scenario.iterations)) {
            for (std::size_t l = 0; l < L; ++l) current[l] = sim.states().state(l);
            if (max_observer_c1(scenario.topology, out.observers, initial, current) > *options.monitor_delta1)
                out.first_alarm = now;
        }
    }
    out.first = std::move(initial);
    out.last.resize(L);
    for (std::size_t l = 0; l < L; ++l) out.last[l] = sim.states().state(l);
    return out;
}

inline std::vector<DetectionReport> detect_all(const Topology& topology, const TrialOutcome& trial,
                                               const Thresholds& thresholds) {
    std::vector<DetectionReport> reports;
    reports.reserve(trial.observers.size());
    for (NodeId i : trial.observers) reports.push_back(detect(observe(topology, i, trial.first, trial.last), thresholds));
    return reports;
}

// ---------------------------------------------------------------------------
// Threshold calibration

struct CalibrationResult {
    Thresholds thresholds;
    double target_far = 0.05;
    double achieved_far = 0.0;
    std::optional<double> tpr;  // localization rates on the attacked calibration sample
    std::optional<double> fpr;
    std::size_t trials = 0;
};

// Upper empirical quantile: the k-th smallest sample with k = ceil(q n), so at
// most a (1 - q) fraction of the sample lies strictly above it.
inline double empirical_quantile(std::vector<double> sample, double q) {
    if (sample.empty()) throw InputError("empirical_quantile: empty sample");
    std::sort(sample.begin(), sample.end());
    auto k = std::size_t(std::ceil(q * double(sample.size()) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, sample.size());
    return sample[k - 1];
}

struct LocalizationChoice {
    double epsilon = 1.0;
    Direction direction = Direction::Greater;
    double tpr = 0.0;
    double fpr = 0.0;
};

// Threshold and side maximizing TPR - FPR over labelled |xi| samples.
// Ties keep the literal side ("gt") and the lowest threshold.
inline LocalizationChoice choose_localization(std::vector<std::pair<double, bool>> samples) {
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    std::size_t positives = 0;
    for (const auto& s : samples) positives += s.second ? 1 : 0;
    const std::size_t negatives = n - positives;
    LocalizationChoice best;
    if (positives == 0 || negatives == 0 || n < 2) {
        if (n > 0) best.epsilon = std::max(samples.back().first, 1e-12);
        return best;
    }
    double best_j = -std::numeric_limits<double>::infinity();
    std::size_t pos_below = 0, neg_below = 0;
    for (std::size_t k = 1; k < n; ++k) {
        (samples[k - 1].second ? pos_below : neg_below) += 1;
        if (!(samples[k - 1].first < samples[k].first)) continue;
        const double eps = 0.5 * (samples[k - 1].first + samples[k].first);
        if (!(eps > 0.0)) continue;
        const double tpr_gt = double(positives - pos_below) / double(positives);
        const double fpr_gt = double(negatives - neg_below) / double(negatives);
        const double tpr_lt = double(pos_below) / double(positives);
        const double fpr_lt = double(neg_below) / double(negatives);
        if (tpr_gt - fpr_gt > best_j + 1e-12) {
            best_j = tpr_gt - fpr_gt;
            best = {eps, Direction::Greater, tpr_gt, fpr_gt};
        }
        if (tpr_lt - fpr_lt > best_j + 1e-12) {
            best_j = tpr_lt - fpr_lt;
            best = {eps, Direction::Less, tpr_lt, fpr_lt};
        }
    }
    return best;
}

// delta1: (1 - target_far) quantile of the per-trial network statistic (max
// observer c1) over attack-free trials. epsilon/direction: best separation of
// attacker vs normal |xi| over attacked trials at the scenario's attack.
inline CalibrationResult calibrate_thresholds(const Scenario& scenario, double target_far, std::size_t trials,
                                              std::uint64_t root_seed) {
    scenario.validate();
    if (!(target_far > 0.0 && target_far < 1.0)) throw InputError("calibrate: target_far must lie in (0, 1)");
    if (trials < 100) throw InputError("calibrate: need at least 100 trials");
    if (!connected_in_expectation(scenario.topology)) throw InputError("calibrate: topology is not connected");

    CalibrationResult result;
    result.target_far = target_far;
    result.trials = trials;

    std::vector<double> stats;
    std::vector<std::pair<double, bool>> h0_pairs;
    stats.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto trial = run_trial(scenario, false, trial_seed(root_seed, t), Stream::CalibrationNull);
        stats.push_back(max_observer_c1(scenario.topology, trial.observers, trial.first, trial.last));
        if (scenario.attack.attackers.empty())
            for (NodeId i : trial.observers)
                for (const auto& [j, v] : score_xi(observe(scenario.topology, i, trial.first, trial.last)))
                    h0_pairs.emplace_back(std::abs(v), false);
    }
    result.thresholds.delta1 = std::max(empirical_quantile(stats, 1.0 - target_far), 1e-12);
    std::size_t alarms = 0;
    for (double s : stats) alarms += s > result.thresholds.delta1 ? 1 : 0;
    result.achieved_far = double(alarms) / double(trials);

    if (scenario.attack.attackers.empty()) {
        std::vector<double> k1;
        k1.reserve(h0_pairs.size());
        for (const auto& p : h0_pairs) k1.push_back(p.first);
        result.thresholds.epsilon = std::max(empirical_quantile(k1, 1.0 - target_far), 1e-12);
        result.thresholds.direction = Direction::Greater;
        return result;
    }

    std::vector<std::pair<double, bool>> samples;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto trial = run_trial(scenario, true, trial_seed(root_seed, t), Stream::CalibrationAttacked);
        for (NodeId i : trial.observers)
            for (const auto& [j, v] : score_xi(observe(scenario.topology, i, trial.first, trial.last)))
                samples.emplace_back(std::abs(v), trial.attack.is_attacker(j));
    }
    const auto choice = choose_localization(std::move(samples));
    result.thresholds.epsilon = choice.epsilon;
    result.thresholds.direction = choice.direction;
    result.tpr = choice.tpr;
    result.fpr = choice.fpr;
    return result;
}

}  // namespace gossipguard
