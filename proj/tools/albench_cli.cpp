// albench command-line driver: active-learning benchmark experiments on
// feature-space datasets.
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "albench/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"albench - active learning query-strategy benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string results_dir;
    std::string out_dir;
    uint64_t seed = 0;
    int threads = 0;
    int trials = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config) cmd->add_option("--config", config_path, "experiment config JSON")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "base seed (overrides config)");
        cmd->add_option("--threads", threads, "worker thread count (overrides config)");
        return cmd;
    };

    CLI::App* run = add_common(app.add_subcommand("run", "run the full acquisition-loop experiment"), true);
    run->add_option("--trials", trials, "trial count (overrides config)");
    CLI::App* bench = add_common(
        app.add_subcommand("benchmark-query", "measure per-strategy query time on a fixed model"), true);
    CLI::App* robust = add_common(
        app.add_subcommand("eval-robustness", "OOD AUROC and shifted-data metrics per strategy"), true);
    CLI::App* plot = app.add_subcommand("emit-plotdata", "emit long-format plot CSVs from run results");
    plot->add_option("--results", results_dir, "directory holding summary.json")->required();
    plot->add_option("--out", out_dir, "output directory (defaults to the results directory)");
    CLI::App* gen = add_common(app.add_subcommand("generate-data", "write synthetic dataset CSVs"), true);

    CLI11_PARSE(app, argc, argv);

    CLI::App* parsed = app.get_subcommands().front();
    auto given = [&](const char* name) {
        const CLI::Option* opt = parsed->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    albench::harness::Overrides overrides;
    if (given("--out")) overrides.out = out_dir;
    if (given("--seed")) overrides.seed = seed;
    if (given("--threads")) overrides.threads = threads;
    if (given("--trials")) overrides.trials = trials;

    if (parsed == run) return albench::harness::cmd_run(config_path, overrides);
    if (parsed == bench) return albench::harness::cmd_benchmark_query(config_path, overrides);
    if (parsed == robust) return albench::harness::cmd_eval_robustness(config_path, overrides);
    if (parsed == plot) {
        std::optional<std::string> out = given("--out") ? std::make_optional(out_dir) : std::nullopt;
        return albench::harness::cmd_emit_plotdata(results_dir, out);
    }
    if (parsed == gen) return albench::harness::cmd_generate_data(config_path, overrides);
    return 1;
}
