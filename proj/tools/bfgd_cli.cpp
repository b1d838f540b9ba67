#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bfgd/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Low-rank solver harness: factored gradient descent and SVP baselines"};
    app.require_subcommand(1);

    // run --config <path.json>
    auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_option("--out-dir", out_dir, "Directory for trace CSV and report JSON");
    run->add_option("--seed", seed_override, "Override the config seed");
    run->add_flag("--quiet", quiet, "Suppress progress lines");

    // bench-svd --m --r --trials --seed --out
    auto* bench = app.add_subcommand("bench-svd", "Time truncated SVD against two matmuls");
    std::size_t bench_m = 1024, bench_r = 50, bench_trials = 5;
    std::uint64_t bench_seed = 0;
    std::string bench_out;
    bench->add_option("--m", bench_m, "Square dimension")->required();
    bench->add_option("--r", bench_r, "Target rank")->required();
    bench->add_option("--trials", bench_trials, "Trials per timing (median reported)");
    bench->add_option("--seed", bench_seed, "RNG seed");
    bench->add_option("--out", bench_out, "Output CSV path (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            bfgd::ExperimentConfig cfg = bfgd::ExperimentConfig::from_json_file(config_path);
            if (seed_override) cfg.seed = *seed_override;
            const bfgd::RunReport report = bfgd::run_experiment(cfg, out_dir, quiet);
            if (!quiet)
                std::cerr << "report: " << report.report_path << "\n"
                          << "trace:  " << report.trace_path << "\n";
            return report.termination == bfgd::Termination::Diverged ? 2 : 0;
        }
        if (bench->parsed()) {
            const bfgd::BenchRow row =
                bfgd::bench_svd_vs_matmul(bench_m, bench_r, bench_trials, bench_seed);
            if (bench_out.empty()) {
                bfgd::write_bench_csv(std::cout, {&row, 1});
            } else {
                std::ofstream out(bench_out);
                if (!out) {
                    std::cerr << "bench-svd: cannot write " << bench_out << "\n";
                    return 1;
                }
                bfgd::write_bench_csv(out, {&row, 1});
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
