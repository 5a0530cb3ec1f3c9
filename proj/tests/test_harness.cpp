#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "albench/harness.hpp"

using namespace albench;
using namespace albench::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny_config_json() {
    json synthetic = {
        {"means", {{3.0, 0.0}, {0.0, 3.0}}},
        {"stddevs", 0.5},
        {"counts", 60},
        {"seed", 5},
    };
    json test_synthetic = synthetic;
    test_synthetic["seed"] = 6;
    test_synthetic["counts"] = 20;
    return json{
        {"name", "tiny"},
        {"seed", 11},
        {"strategies", {"random", "entropy"}},
        {"trials", 1},
        {"cycles", 2},
        {"acquisition_size", 8},
        {"subset_size", 30},
        {"dataset", {{"synthetic", synthetic}}},
        {"test_dataset", {{"synthetic", test_synthetic}}},
        {"model", {{"hidden", {8}}, {"embedding_dim", 4}, {"dropout", 0.1}}},
        {"train", {{"epochs", 3}, {"lr_decay_epoch", 3}, {"batch_size", 16}}},
        {"acquisition", {{"bald_passes", 4}}},
    };
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const json& j, const fs::path& dir, const std::string& name = "config.json") {
    fs::path path = dir / name;
    std::ofstream f(path);
    f << j.dump(2);
    return path.string();
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// drop the trailing query_time_ns column from every CSV line
std::string strip_timing_column(const std::string& csv) {
    std::string out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        size_t pos = line.find_last_of(',');
        out += line.substr(0, pos);
        out += '\n';
    }
    return out;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("config parsing: defaults, overrides, and paper-default hyperparameters") {
    ExperimentConfig cfg = parse_config_json(tiny_config_json());
    CHECK(cfg.trials == 1);
    CHECK(cfg.strategies.size() == 2);
    CHECK(cfg.model.hidden == std::vector<int>{8});
    // untouched training fields keep the stock schedule
    CHECK(cfg.train.learning_rate == 0.1);
    CHECK(cfg.train.momentum == 0.9);
    CHECK(cfg.train.weight_decay == 0.0005);
    CHECK(cfg.acquire.bald_passes == 4);
    CHECK(cfg.ece_bins == 15);

    json defaults = tiny_config_json();
    defaults.erase("train");
    ExperimentConfig cfg2 = parse_config_json(defaults);
    CHECK(cfg2.train.epochs == 200);
    CHECK(cfg2.train.lr_decay_epoch == 160);
    CHECK(cfg2.train.lr_decay_factor == 0.1);
    CHECK(cfg2.acquire.pca_variance_fraction == 0.95);
}

TEST_CASE("config parsing: unknown keys are rejected at every level") {
    json bad = tiny_config_json();
    bad["surprise"] = 1;
    CHECK_THROWS_WITH_AS(parse_config_json(bad), doctest::Contains("surprise"), ConfigError);

    bad = tiny_config_json();
    bad["train"]["warmup"] = 5;
    CHECK_THROWS_WITH_AS(parse_config_json(bad), doctest::Contains("warmup"), ConfigError);

    bad = tiny_config_json();
    bad["dataset"]["synthetic"]["skew"] = 2.0;
    CHECK_THROWS_WITH_AS(parse_config_json(bad), doctest::Contains("skew"), ConfigError);
}

TEST_CASE("config parsing: structural errors") {
    json bad = tiny_config_json();
    bad.erase("dataset");
    CHECK_THROWS_WITH_AS(parse_config_json(bad), doctest::Contains("dataset"), ConfigError);

    // omitted loop fields fall back to the stock experiment scale
    json defaults = tiny_config_json();
    defaults.erase("cycles");
    defaults.erase("acquisition_size");
    defaults.erase("subset_size");
    ExperimentConfig cfg = parse_config_json(defaults);
    CHECK(cfg.cycles == 10);
    CHECK(cfg.acquisition_size == 1000);
    CHECK(cfg.subset_size == 10000);

    bad = tiny_config_json();
    bad["strategies"] = json::array();
    CHECK_THROWS_AS(parse_config_json(bad), ConfigError);

    bad = tiny_config_json();
    bad["strategies"] = {"random", "psychic"};
    CHECK_THROWS_WITH_AS(parse_config_json(bad), doctest::Contains("psychic"), ConfigError);

    bad = tiny_config_json();
    bad["dataset"] = {{"csv", "a.csv"}, {"synthetic", bad["dataset"]["synthetic"]}};
    CHECK_THROWS_AS(parse_config_json(bad), ConfigError);

    bad = tiny_config_json();
    bad["cycles"] = "ten";
    CHECK_THROWS_AS(parse_config_json(bad), ConfigError);
}

TEST_CASE("execute_run writes results, summary, and manifest; reruns are byte-identical modulo timing") {
    fs::path dir = fresh_dir("albench_run_a");
    ExperimentConfig cfg = parse_config_json(tiny_config_json());
    cfg.output_dir = dir.string();
    RunOutputs out = execute_run(cfg);

    std::string csv = read_file(out.results_csv);
    // header + strategies(2) * trials(1) * cycles(2)
    CHECK(count_lines(csv) == 1 + 2 * 1 * 2);
    CHECK(!fs::exists(dir / ".partial"));

    fs::path dir2 = fresh_dir("albench_run_b");
    cfg.output_dir = dir2.string();
    RunOutputs out2 = execute_run(cfg);
    CHECK(strip_timing_column(read_file(out2.results_csv)) == strip_timing_column(csv));

    // manifest round trip: its embedded config re-executes to the same bytes
    json manifest = json::parse(read_file(out.manifest_json));
    CHECK(manifest.at("format") == "albench-run-manifest");
    CHECK(manifest.at("trial_seeds").size() == 1);
    ExperimentConfig recovered = parse_config_json(manifest.at("config"));
    fs::path dir3 = fresh_dir("albench_run_c");
    recovered.output_dir = dir3.string();
    RunOutputs out3 = execute_run(recovered);
    CHECK(strip_timing_column(read_file(out3.results_csv)) == strip_timing_column(csv));

    fs::remove_all(dir);
    fs::remove_all(dir2);
    fs::remove_all(dir3);
}

TEST_CASE("execute_run: row arithmetic for a 4-strategy, 5-trial, 10-cycle experiment") {
    json j = tiny_config_json();
    j["strategies"] = {"entropy", "scal", "dfm", "random"};
    j["trials"] = 5;
    j["cycles"] = 10;
    j["acquisition_size"] = 4;
    j["subset_size"] = 20;
    j["dataset"]["synthetic"]["counts"] = 60;
    j["train"] = {{"epochs", 2}, {"lr_decay_epoch", 2}, {"batch_size", 32}};
    fs::path dir = fresh_dir("albench_run_rows");
    ExperimentConfig cfg = parse_config_json(j);
    cfg.output_dir = dir.string();
    RunOutputs out = execute_run(cfg);
    CHECK(count_lines(read_file(out.results_csv)) == 1 + 4 * 5 * 10);

    // plot data: 40 rows per figure family (4 strategies x 10 cycles)
    CHECK(cmd_emit_plotdata(dir.string(), std::nullopt) == 0);
    for (const char* family : {"plot_accuracy.csv", "plot_bias.csv", "plot_ece.csv"}) {
        std::string text = read_file((dir / family).string());
        CHECK(count_lines(text) == 1 + 40);
    }

    // the emitted means match the summary
    json summary = json::parse(read_file(out.summary_json));
    std::string acc_csv = read_file((dir / "plot_accuracy.csv").string());
    std::istringstream in(acc_csv);
    std::string line;
    std::getline(in, line);  // header
    std::getline(in, line);  // first data row: dfm cycle 0 (alphabetical)
    std::istringstream fields(line);
    std::string figure, strategy, cycle, labeled, mean, stddev;
    std::getline(fields, figure, ',');
    std::getline(fields, strategy, ',');
    std::getline(fields, cycle, ',');
    std::getline(fields, labeled, ',');
    std::getline(fields, mean, ',');
    std::getline(fields, stddev, ',');
    double want = summary["strategies"][strategy][0]["test_accuracy"]["mean"].get<double>();
    CHECK(std::stod(mean) == doctest::Approx(want).epsilon(1e-12));

    fs::remove_all(dir);
}

TEST_CASE("cmd_run exit codes: 1 for config problems, 2 for runtime failures") {
    fs::path dir = fresh_dir("albench_exit");
    CHECK(cmd_run((dir / "missing.json").string(), {}) == 1);

    json bad = tiny_config_json();
    bad["bogus_key"] = true;
    std::string bad_path = write_config(bad, dir, "bad.json");
    CHECK(cmd_run(bad_path, {}) == 1);

    json broken = tiny_config_json();
    broken["dataset"] = {{"csv", (dir / "nope.csv").string()}};
    std::string broken_path = write_config(broken, dir, "broken.json");
    Overrides ov;
    ov.out = (dir / "out").string();
    CHECK(cmd_run(broken_path, ov) == 2);

    std::string good_path = write_config(tiny_config_json(), dir, "good.json");
    Overrides ov2;
    ov2.out = (dir / "out2").string();
    CHECK(cmd_run(good_path, ov2) == 0);
    CHECK(fs::exists(dir / "out2" / "results.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cmd_emit_plotdata: missing results directory reports the path") {
    fs::path dir = fresh_dir("albench_empty_results");
    CHECK(cmd_emit_plotdata((dir / "void").string(), std::nullopt) == 2);
    fs::remove_all(dir);
}

TEST_CASE("cmd_generate_data writes loadable CSVs") {
    fs::path dir = fresh_dir("albench_gen");
    std::string path = write_config(tiny_config_json(), dir);
    Overrides ov;
    ov.out = (dir / "data").string();
    CHECK(cmd_generate_data(path, ov) == 0);
    FeatureDataset train_ds = load_dataset_csv((dir / "data" / "train.csv").string());
    CHECK(train_ds.size() == 120);
    CHECK(train_ds.num_classes == 2);
    FeatureDataset direct = generate_synthetic(parse_config_json(tiny_config_json()).dataset.synthetic.value());
    CHECK(train_ds.features == direct.features);
    fs::remove_all(dir);
}

TEST_CASE("cmd_benchmark_query: entropy is its own unit") {
    json j = tiny_config_json();
    j["strategies"] = {"entropy", "dfm", "random"};
    j["acquisition_size"] = 4;  // candidate set of 40 from a 120-sample pool
    j["benchmark"] = {{"repetitions", 2}};
    j["train"] = {{"epochs", 2}, {"lr_decay_epoch", 2}, {"batch_size", 32}};
    fs::path dir = fresh_dir("albench_bench");
    std::string path = write_config(j, dir);
    Overrides ov;
    ov.out = (dir / "out").string();
    REQUIRE(cmd_benchmark_query(path, ov) == 0);
    json rows = json::parse(read_file((dir / "out" / "benchmark.json").string()));
    bool saw_entropy = false;
    for (const auto& row : rows["rows"]) {
        if (row["strategy"] == "entropy") {
            saw_entropy = true;
            CHECK(row["relative"].get<double>() == 1.0);
        }
        CHECK(row["mean_query_ns"].get<double>() > 0.0);
    }
    CHECK(saw_entropy);
    fs::remove_all(dir);
}

TEST_CASE("cmd_eval_robustness requires shift and OOD specs") {
    fs::path dir = fresh_dir("albench_robust");
    std::string no_ood = write_config(tiny_config_json(), dir, "no_ood.json");
    CHECK(cmd_eval_robustness(no_ood, {}) == 1);

    json j = tiny_config_json();
    j["shift"] = {{"kind", "additive-noise"}, {"magnitude", 0.5}};
    j["ood_dataset"] = {{"synthetic", {{"means", {{30.0, 30.0}}}, {"stddevs", 0.5}, {"counts", 25}, {"seed", 9}}}};
    std::string path = write_config(j, dir, "ood.json");
    Overrides ov;
    ov.out = (dir / "out").string();
    REQUIRE(cmd_eval_robustness(path, ov) == 0);
    json rows = json::parse(read_file((dir / "out" / "robustness.json").string()));
    CHECK(rows["rows"].size() == 2);
    for (const auto& row : rows["rows"]) {
        CHECK(row["ood_auroc"].get<double>() >= 0.0);
        CHECK(row["ood_auroc"].get<double>() <= 1.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("shift magnitude zero reproduces clean metrics through the harness") {
    json j = tiny_config_json();
    j["shift"] = {{"kind", "additive-noise"}, {"magnitude", 0.0}};
    fs::path dir = fresh_dir("albench_shift0");
    ExperimentConfig cfg = parse_config_json(j);
    cfg.output_dir = dir.string();
    RunOutputs out = execute_run(cfg);
    // shifted metrics must equal the clean ones exactly
    std::string csv = read_file(out.results_csv);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::istringstream fs_line(line);
        std::string field;
        while (std::getline(fs_line, field, ',')) fields.push_back(field);
        // columns: 4 = test_accuracy, 5 = ece; counts at 8..9; shifted at 10..11
        CHECK(fields[10] == fields[4]);
        CHECK(fields[11] == fields[5]);
    }
    fs::remove_all(dir);
}
