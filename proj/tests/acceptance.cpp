// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "gossipguard/harness.hpp"
#include "gossipguard/ledger.hpp"
#include "gossipguard/trust.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace gossipguard;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = budget_s <= 0.0 || secs < budget_s;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failures;
    std::printf("%s [%d] %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
                in_budget ? "" : ", over budget");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Scenario fixture_scenario() {
    std::ifstream in(GOSSIPGUARD_FIXTURE);
    const auto cfg = parse_config(nlohmann::json::parse(in));
    return cfg.scenario(cfg.topology.build());
}

double alarm_rate(const Scenario& sc, double delta1, std::size_t trials, std::uint64_t root, bool attacked) {
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto trial = run_trial(sc, attacked, trial_seed(root, t), attacked ? Stream::Attacked : Stream::Null);
        hits += max_observer_c1(sc.topology, trial.observers, trial.first, trial.last) > delta1 ? 1 : 0;
    }
    return double(hits) / double(trials);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 1
Outcome consensus_convergence() {
    Rng topo_rng(2001);
    std::uniform_int_distribution<std::size_t> size(3, 20);
    std::normal_distribution<double> gauss;
    int graphs_ok = 0, worst = 20;
    for (int g = 0; g < 20; ++g) {
        const auto t = random_connected_topology(size(topo_rng), 0.25, topo_rng);
        const std::size_t m = t.node_count();
        const std::size_t steps = 200 * m * t.edge_count();
        const AttackConfig none;
        int ok = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng init(seed * 977 + std::uint64_t(g));
            std::vector<double> y(m);
            for (auto& v : y) v = gauss(init);
            const double mean = mean_of(y);
            std::vector<Rng> streams{derive_rng(seed, Stream::Null, {std::uint64_t(g)})};
            GossipSimulation sim(t, {y}, none, std::move(streams));
            sim.run(steps);
            ok += max_deviation(sim.states().state(0), mean) < 1e-6 ? 1 : 0;
        }
        worst = std::min(worst, ok);
        graphs_ok += ok >= 19 ? 1 : 0;
    }
    return {graphs_ok == 20, fmt("%g/20 graphs with >=95%% of seeds converged; worst graph %g/20", graphs_ok, worst)};
}

// 2
Outcome double_stochasticity() {
    Rng rng(2002);
    std::uniform_int_distribution<std::size_t> size(2, 25);
    double worst = 0.0;
    int bad = 0;
    auto check = [&](const WeightMatrix& w) {
        const auto& e = w.entries();
        const double dev = std::max((e.rowwise().sum().array() - 1.0).abs().maxCoeff(),
                                    (e.colwise().sum().array() - 1.0).abs().maxCoeff());
        worst = std::max(worst, dev);
        bad += dev > 1e-12 ? 1 : 0;
    };
    for (int k = 0; k < 1000; ++k) {
        const std::size_t m = size(rng);
        std::uniform_int_distribution<NodeId> node(0, m - 1);
        NodeId i = node(rng), j = node(rng);
        while (j == i) j = node(rng);
        check(pairwise_weight_matrix(m, i, j));
        check(expected_weight_matrix(random_connected_topology(m, 0.3, rng)));
    }
    return {bad == 0, fmt("2000 matrices, %g out of tolerance, worst |sum-1| = %.3g", bad, worst)};
}

// 3
Outcome attack_convergence() {
    Rng topo_rng(2003);
    std::uniform_int_distribution<std::size_t> size(3, 10);
    std::normal_distribution<double> gauss;
    int graphs_ok = 0, worst = 20;
    const int graphs = 10;
    for (int g = 0; g < graphs; ++g) {
        const auto t = random_connected_topology(size(topo_rng), 0.3, topo_rng);
        const std::size_t m = t.node_count();
        int ok = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng init(seed * 131 + std::uint64_t(g));
            std::vector<double> y(m);
            for (auto& v : y) v = gauss(init);
            AttackConfig attack;
            attack.attackers = {NodeId(seed % m)};
            attack.targets = {3.0};
            attack.masks = {{y[seed % m]}};
            std::vector<Rng> streams{derive_rng(seed, Stream::Attacked, {std::uint64_t(g)})};
            GossipSimulation sim(t, {y}, attack, std::move(streams));
            sim.run(2000 * m);
            bool all = true;
            for (NodeId i = 0; i < m; ++i)
                if (!attack.is_attacker(i)) all &= std::abs(sim.states().state(0)[i] - 3.0) < 1e-3;
            ok += all ? 1 : 0;
        }
        worst = std::min(worst, ok);
        graphs_ok += ok >= 19 ? 1 : 0;
    }
    return {graphs_ok == graphs,
            fmt("%g/%g graphs with >=95%% of seeds within 1e-3 of alpha; worst graph %g/20", graphs_ok, graphs, worst)};
}

// 4
Outcome calibration_self_consistency() {
    const auto sc = fixture_scenario();
    const auto cal = calibrate_thresholds(sc, 0.05, 2000, 4001);
    const double far = alarm_rate(sc, cal.thresholds.delta1, 2000, 9'000'000, false);
    return {std::abs(far - 0.05) <= 0.02,
            fmt("delta1=%.4g, calibration FAR %.4f, fresh FAR %.4f (target 0.05 +- 0.02)", cal.thresholds.delta1,
                cal.achieved_far, far)};
}

// 5
Outcome detection_power() {
    const auto base = fixture_scenario();
    const auto cal = calibrate_thresholds(base, 0.05, 1000, 5001);
    std::vector<double> rates;
    bool monotone = true;
    for (double gap : {0.0, 1.0, 2.0, 4.0}) {
        Scenario sc = base;
        sc.attack.alpha = {sc.initial.mean + gap * sc.initial.sd};
        rates.push_back(alarm_rate(sc, cal.thresholds.delta1, 1000, 5'500'000, true));
        if (rates.size() > 1) monotone &= rates.back() >= rates[rates.size() - 2] - 0.02;
    }
    return {monotone && rates.back() >= 0.9,
            fmt("rates at 0/1/2/4 sd: %.3f %.3f %.3f %.3f", rates[0], rates[1], rates[2], rates[3])};
}

// 6
Outcome formula_fidelity() {
    const double f1 = *compute_f1(0.915, 0.835);
    std::mt19937_64 rng(2006);
    std::uniform_int_distribution<std::uint64_t> count(0, 100);
    int broken = 0;
    for (int k = 0; k < 10000; ++k) {
        Confusion c{count(rng), count(rng), count(rng), count(rng)};
        const auto p = c.precision(), r = c.recall(), f = c.f1();
        bool ok = (c.tp + c.fp == 0) ? !p : (p && *p == double(c.tp) / double(c.tp + c.fp));
        ok &= (c.tp + c.fn == 0) ? !r : (r && *r == double(c.tp) / double(c.tp + c.fn));
        if (p && r && *p + *r > 0.0) ok &= f && *f == 2.0 * *p * *r / (*p + *r);
        else ok &= !f;
        broken += ok ? 0 : 1;
    }
    return {std::abs(f1 - 0.8732) <= 0.0005 && broken == 0,
            fmt("f1(0.915, 0.835) = %.6f; %g/10000 confusion matrices break an identity", f1, broken)};
}

// 7
Outcome trust_properties() {
    using namespace trust;
    Rng rng(2007);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int score_bad = 0;
    for (int k = 0; k < 10000; ++k) {
        MetricSnapshot s;
        auto range = [&](double scale, double& lo, double& hi) {
            double a = u(rng) * scale, b = u(rng) * scale;
            lo = std::min(a, b);
            hi = std::max(a, b);
        };
        range(5, s.rt_min, s.rt_max);
        range(1, s.tp_min, s.tp_max);
        range(100, s.fail_min, s.fail_max);
        range(1000, s.req_min, s.req_max);
        s.response_time = u(rng) * 6 - 0.5;
        s.throughput = u(rng);
        s.failures = std::floor(u(rng) * 110);
        s.fulfilled = std::floor(u(rng) * 1100);
        const auto sc = metric_scores(s);
        for (double x : sc) score_bad += (x >= 0.0 && x <= 1.0) ? 0 : 1;
        auto b = s;
        b.response_time += u(rng);
        b.throughput += 0.1 * u(rng);
        b.failures += std::floor(5 * u(rng));
        b.fulfilled += std::floor(50 * u(rng));
        const auto sb = metric_scores(b);
        score_bad += sb[0] >= sc[0] && sb[1] >= sc[1] && sb[2] <= sc[2] && sb[3] <= sc[3] ? 0 : 1;
    }

    double ahp_err = 0.0;
    std::uniform_real_distribution<double> scale(0.1, 9.0);
    for (int k = 0; k < 500; ++k) {
        std::vector<double> w(2 + std::size_t(k % 7));
        for (auto& x : w) x = scale(rng);
        std::vector<std::vector<double>> a(w.size(), std::vector<double>(w.size()));
        for (std::size_t i = 0; i < w.size(); ++i)
            for (std::size_t j = 0; j < w.size(); ++j) a[i][j] = i == j ? 1.0 : w[i] / w[j];
        const auto got = ahp_weights(ComparisonMatrix(a));
        double col = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) col += a[i][0];
        for (std::size_t i = 0; i < w.size(); ++i) ahp_err = std::max(ahp_err, std::abs(got[i] - a[i][0] / col));
    }

    int accepted = 0, rejected = 0;
    std::uniform_int_distribution<std::size_t> labels(2, 5);
    for (int k = 0; k < 100; ++k) {
        const std::size_t n = labels(rng);
        std::vector<double> w(n);
        double total = 0.0;
        for (auto& x : w) total += (x = u(rng) + 1e-3);
        for (auto& x : w) x /= total;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
        auto m = additive_measure(names, w);
        accepted += validate_fuzzy_measure(m) ? 1 : 0;
        Subset q = 0;
        std::uniform_int_distribution<Subset> pick(1, m.full());
        do q = pick(rng);
        while (std::popcount(q) < 2);
        const Subset p = q & (q - 1);
        m.values[p] = m.values[q] + 0.01 + 0.3 * u(rng);
        if (m.values[p] > 1.0) {
            m.values[p] = 1.0;
            m.values[q] = 0.95;
        }
        rejected += validate_fuzzy_measure(m) ? 0 : 1;
    }
    return {score_bad == 0 && ahp_err <= 1e-8 && accepted == 100 && rejected == 100,
            fmt("score violations %g; AHP max error %.3g; fuzzy accepted %g/100, rejected %g/100", score_bad, ahp_err,
                accepted, rejected)};
}

// 8
Outcome ledger_tamper_evidence() {
    using namespace ledger;
    std::mt19937_64 rng(2008);
    Ledger chain;
    for (std::size_t k = 0; k < 1000; ++k) {
        Bytes payload(16 + rng() % 48);
        for (auto& b : payload) b = std::uint8_t(rng());
        chain.append(std::move(payload), k);
    }
    const bool clean = bool(verify(chain));
    const std::vector<LedgerBlock> pristine(chain.blocks().begin(), chain.blocks().end());
    int caught = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto blocks = pristine;
        const std::size_t k = rng() % blocks.size();
        const std::size_t bit = rng();
        auto& b = blocks[k];
        switch (trial % 5) {
            case 0: b.index ^= std::uint32_t(1u << (bit % 32)); break;
            case 1: b.timestamp ^= std::uint64_t(1) << (bit % 64); break;
            case 2: b.prev_hash[(bit / 8) % 32] ^= std::uint8_t(1u << (bit % 8)); break;
            case 3: b.payload[(bit / 8) % b.payload.size()] ^= std::uint8_t(1u << (bit % 8)); break;
            default: b.hash[(bit / 8) % 32] ^= std::uint8_t(1u << (bit % 8)); break;
        }
        const auto r = verify(blocks);
        caught += !r && r.first_bad == k ? 1 : 0;
    }
    return {clean && caught == 200,
            fmt("unmutated verifies: %g; %g/200 mutations caught at the right index", clean ? 1 : 0, caught)};
}

// 9
Outcome isolation_efficacy() {
    std::ifstream in(GOSSIPGUARD_FIXTURE);
    auto cfg = parse_config(nlohmann::json::parse(in));
    cfg.trials = 5;
    cfg.h0_trials = 0;
    cfg.seed = 42;
    const auto r = run_experiment(cfg);
    return {r.isolation.all_attackers_quarantined && !r.isolation.quarantined.empty() &&
                r.isolation.max_sum_drift <= 1e-9,
            fmt("%g/%g attackers localized and quarantined; max per-step normal-sum drift %.3g",
                double(r.isolation.quarantined.size()), double(r.attacker_count), r.isolation.max_sum_drift)};
}

// 10
Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "gossipguard_acceptance";
    fs::remove_all(dir);
    for (const char* run : {"a", "b"}) {
        const std::string cmd = std::string(GOSSIPGUARD_CLI) + " run --config " + GOSSIPGUARD_FIXTURE +
                                " --seed 42 --out " + (dir / run).string() + " > /dev/null";
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, std::string("run ") + run + " failed"};
    }
    int differing = 0, compared = 0;
    for (const char* f : {"metrics.csv", "detections.csv", "trust.csv", "trajectories.csv", "ledger.jsonl"}) {
        ++compared;
        const auto a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
        differing += (a.empty() || a != b) ? 1 : 0;
    }
    fs::remove_all(dir);
    return {differing == 0, fmt("%g/%g CSV and ledger files byte-identical", compared - differing, compared)};
}

}  // namespace

int main() {
    criterion(1, "consensus convergence", 30, consensus_convergence);
    criterion(2, "double stochasticity", 5, double_stochasticity);
    criterion(3, "attack convergence", 60, attack_convergence);
    criterion(4, "H0 calibration self-consistency", 120, calibration_self_consistency);
    criterion(5, "detection power monotonicity", 180, detection_power);
    criterion(6, "formula fidelity", 0, formula_fidelity);
    criterion(7, "trust-layer properties", 0, trust_properties);
    criterion(8, "ledger tamper evidence", 10, ledger_tamper_evidence);
    criterion(9, "isolation efficacy", 0, isolation_efficacy);
    criterion(10, "determinism", 0, determinism);
    std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
