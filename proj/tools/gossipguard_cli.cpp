// gossipguard command-line front end.
//
//   gossipguard run --config <json> [--seed N] [--out dir]
//   gossipguard calibrate --config <json> --far 0.05 --trials 2000 [--seed N] [--out file]
//   gossipguard sweep --config <json> --param <name> --values a,b,c [--out file]
//   gossipguard verify-ledger <file>
//
// Exit codes: 0 success, 1 verification failure, 2 invalid input.

#include "gossipguard/harness.hpp"
#include "gossipguard/ledger.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace gg = gossipguard;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kInvalidInput = 2;

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw gg::InputError("cannot open config '" + path + "'");
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw gg::InputError("config '" + path + "' is not valid JSON");
    return doc;
}

gg::ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    auto cfg = gg::parse_config(load_json(path));
    if (seed) cfg.seed = *seed;
    return cfg;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
    const auto cfg = load_config(config_path, seed);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = gg::run_experiment(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    gg::write_outputs(out_dir, cfg, result);

    const auto& m = result.metrics;
    const double simulated_iters = double(cfg.trials + cfg.h0_trials) * double(cfg.iterations);
    std::printf("detection_rate=%s precision=%s recall=%s f1=%s false_alarms=%zu/%zu\n",
                gg::format_real(m.detection_rate).c_str(), gg::format_real(m.precision).c_str(),
                gg::format_real(m.recall).c_str(), gg::format_real(m.f1).c_str(), m.false_alarms, m.h0_trials);
    std::printf("det_time_iters=%s wall=%.3fs (%.3g s/iteration) ledger_blocks=%zu out=%s\n",
                gg::format_real(m.detection_time_iters, "not_detected").c_str(), wall,
                simulated_iters > 0 ? wall / simulated_iters : 0.0, result.chain.size(), out_dir.c_str());
    if (!gg::ledger::verify(result.chain)) {
        std::fprintf(stderr, "internal error: produced ledger does not verify\n");
        return kVerifyFailed;
    }
    return kOk;
}

int cmd_calibrate(const std::string& config_path, double far, std::size_t trials, std::optional<std::uint64_t> seed,
                  const std::string& out_path) {
    auto doc = load_json(config_path);
    auto cfg = gg::parse_config(doc);
    if (seed) cfg.seed = *seed;
    const auto scenario = cfg.scenario(cfg.topology.build());
    const auto result = gg::calibrate_thresholds(scenario, far, trials, cfg.seed);
    doc["thresholds"] = gg::calibration_to_json(result);
    const std::string dest = out_path.empty() ? config_path : out_path;
    std::ofstream out(dest);
    if (!out) throw gg::InputError("cannot write '" + dest + "'");
    out << doc.dump(2) << '\n';
    std::printf("delta1=%s epsilon=%s direction=%s achieved_far=%s -> %s\n",
                gg::format_real(result.thresholds.delta1).c_str(), gg::format_real(result.thresholds.epsilon).c_str(),
                gg::to_string(result.thresholds.direction), gg::format_real(result.achieved_far).c_str(),
                dest.c_str());
    return kOk;
}

int cmd_sweep(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& param,
              const std::vector<double>& values, const std::string& out_path) {
    const auto cfg = load_config(config_path, seed);
    const auto rows = gg::sweep(cfg, param, values);
    if (out_path.empty()) {
        gg::write_sweep_csv(std::cout, rows);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw gg::InputError("cannot write '" + out_path + "'");
        gg::write_sweep_csv(out, rows);
    }
    return kOk;
}

int cmd_verify(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::fprintf(stderr, "cannot open ledger '%s'\n", path.c_str());
        return kInvalidInput;
    }
    const auto loaded = gg::ledger::read_jsonl(in);
    const auto result = gg::ledger::verify(loaded);
    if (result) {
        std::printf("ok: %zu blocks\n", loaded.ledger.size());
        return kOk;
    }
    std::printf("invalid: first bad index %zu\n", *result.first_bad);
    return kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gossip-consensus insider attack simulator and detector"};
    app.require_subcommand(1);

    std::string config_path, out;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run an experiment and write its outputs");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--seed", seed, "Override the root seed");
    std::string out_dir = "out";
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* cal = app.add_subcommand("calibrate", "Calibrate detection thresholds and store them in the config");
    double far = 0.05;
    std::size_t trials = 2000;
    cal->add_option("--config", config_path, "Experiment config (JSON)")->required();
    cal->add_option("--far", far, "Target false-alarm rate")->capture_default_str();
    cal->add_option("--trials", trials, "Monte-Carlo trials")->capture_default_str();
    cal->add_option("--seed", seed, "Override the root seed");
    cal->add_option("--out", out, "Write the updated config here instead of in place");

    auto* sw = app.add_subcommand("sweep", "Sweep one parameter and emit a metrics CSV");
    std::string param;
    std::vector<double> values;
    sw->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sw->add_option("--param", param, "Parameter name")->required()->check(CLI::IsMember(gg::sweep_parameters()));
    sw->add_option("--values", values, "Comma-separated grid")->required()->delimiter(',');
    sw->add_option("--seed", seed, "Override the root seed");
    sw->add_option("--out", out, "CSV destination (default stdout)");

    auto* ver = app.add_subcommand("verify-ledger", "Verify a JSON-lines ledger file");
    std::string ledger_path;
    ver->add_option("file", ledger_path, "Ledger file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalidInput;
    }

    try {
        if (*run) return cmd_run(config_path, seed, out_dir);
        if (*cal) return cmd_calibrate(config_path, far, trials, seed, out);
        if (*sw) return cmd_sweep(config_path, seed, param, values, out);
        if (*ver) return cmd_verify(ledger_path);
    } catch (const gg::InputError& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kInvalidInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInvalidInput;
    }
    return kInvalidInput;
}
