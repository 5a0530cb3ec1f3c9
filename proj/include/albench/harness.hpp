#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "albench/dataset.hpp"
#include "albench/loop.hpp"

namespace albench::harness {

inline constexpr const char* kVersion = "0.1.0";

// Configuration problems exit with code 1, runtime failures with code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetSource {
    std::optional<std::string> csv;
    std::optional<SyntheticSpec> synthetic;
};

struct ExperimentConfig {
    std::string name;
    uint64_t seed = 0;
    int threads = 0;  // 0 = runtime default
    std::string output_dir = "results";
    std::vector<StrategyKind> strategies;
    int trials = 5;
    int cycles = 0;
    int acquisition_size = 0;
    int subset_size = 0;
    bool stratified_seed_set = false;
    DatasetSource dataset;
    DatasetSource test_dataset;
    std::optional<DatasetSource> ood_dataset;
    std::optional<ShiftSpec> shift;
    MlpConfig model;
    TrainConfig train;
    AcquireOptions acquire;
    int ece_bins = kDefaultEceBins;
    int benchmark_repetitions = 10;
    nlohmann::json raw;  // parsed config, canonical form
};

// Strict schema: unknown keys anywhere reject the whole config.
ExperimentConfig parse_config_json(const nlohmann::json& j);
ExperimentConfig parse_config_file(const std::string& path);

FeatureDataset load_source(const DatasetSource& source);

struct Overrides {
    std::optional<std::string> out;
    std::optional<uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> trials;
};

// Subcommand entry points; these catch their own errors and return the
// process exit code (0 ok, 1 config error, 2 runtime error).
int cmd_run(const std::string& config_path, const Overrides& overrides);
int cmd_benchmark_query(const std::string& config_path, const Overrides& overrides);
int cmd_eval_robustness(const std::string& config_path, const Overrides& overrides);
int cmd_emit_plotdata(const std::string& results_dir, const std::optional<std::string>& out_dir);
int cmd_generate_data(const std::string& config_path, const Overrides& overrides);

// Exposed for tests: the full run pipeline minus the error-to-exit-code
// translation. Writes results.csv, summary.json and manifest.json.
struct RunOutputs {
    std::string results_csv;
    std::string summary_json;
    std::string manifest_json;
};
RunOutputs execute_run(const ExperimentConfig& config);

std::string results_csv_text(const ExperimentConfig& config, const ExperimentResult& result, int num_classes);

uint64_t fnv1a_hash(const std::string& bytes);
std::string format_double(double v);  // shortest round-trip decimal

}  // namespace albench::harness
