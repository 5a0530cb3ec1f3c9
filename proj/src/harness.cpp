#include "albench/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace albench::harness {

namespace fs = std::filesystem;
using nlohmann::json;

uint64_t fnv1a_hash(const std::string& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

void check_keys(const json& obj, const std::string& context, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(context + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
T get_required(const json& obj, const std::string& context, const char* key) {
    if (!obj.contains(key)) throw ConfigError(context + ": missing required key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(context + ": key '" + std::string(key) + "' has the wrong type");
    }
}

template <typename T>
T get_optional(const json& obj, const std::string& context, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(context + ": key '" + std::string(key) + "' has the wrong type");
    }
}

SyntheticSpec parse_synthetic(const json& j) {
    check_keys(j, "synthetic", {"means", "stddevs", "counts", "seed"});
    SyntheticSpec spec;
    auto means = get_required<std::vector<std::vector<double>>>(j, "synthetic", "means");
    if (means.empty() || means[0].empty()) throw ConfigError("synthetic: means must be a non-empty K x d array");
    spec.means = Matrix(static_cast<int>(means.size()), static_cast<int>(means[0].size()));
    for (size_t k = 0; k < means.size(); ++k) {
        if (means[k].size() != means[0].size()) throw ConfigError("synthetic: ragged means array");
        for (size_t d = 0; d < means[k].size(); ++d) spec.means(static_cast<int>(k), static_cast<int>(d)) = means[k][d];
    }
    const int num_classes = spec.means.rows;
    if (!j.contains("stddevs")) throw ConfigError("synthetic: missing required key 'stddevs'");
    if (j.at("stddevs").is_number()) {
        spec.stddevs.assign(num_classes, j.at("stddevs").get<double>());
    } else {
        spec.stddevs = get_required<std::vector<double>>(j, "synthetic", "stddevs");
    }
    if (!j.contains("counts")) throw ConfigError("synthetic: missing required key 'counts'");
    if (j.at("counts").is_number()) {
        spec.counts.assign(num_classes, j.at("counts").get<int>());
    } else {
        spec.counts = get_required<std::vector<int>>(j, "synthetic", "counts");
    }
    spec.seed = get_optional<uint64_t>(j, "synthetic", "seed", 0);
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("synthetic: ") + e.what());
    }
    return spec;
}

DatasetSource parse_source(const json& j, const std::string& context) {
    check_keys(j, context, {"csv", "synthetic"});
    DatasetSource src;
    if (j.contains("csv")) src.csv = get_required<std::string>(j, context, "csv");
    if (j.contains("synthetic")) src.synthetic = parse_synthetic(j.at("synthetic"));
    if (src.csv.has_value() == src.synthetic.has_value())
        throw ConfigError(context + ": exactly one of 'csv' or 'synthetic' is required");
    return src;
}

ShiftSpec parse_shift(const json& j) {
    check_keys(j, "shift", {"kind", "magnitude"});
    ShiftSpec spec;
    std::string kind = get_required<std::string>(j, "shift", "kind");
    if (kind == "additive-noise")
        spec.kind = ShiftKind::additive_noise;
    else if (kind == "mean-translation")
        spec.kind = ShiftKind::mean_translation;
    else
        throw ConfigError("shift: kind must be 'additive-noise' or 'mean-translation'");
    spec.magnitude = get_required<double>(j, "shift", "magnitude");
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("shift: ") + e.what());
    }
    return spec;
}

}  // namespace

ExperimentConfig parse_config_json(const json& j) {
    check_keys(j, "config",
               {"name", "seed", "threads", "output_dir", "strategies", "trials", "cycles", "acquisition_size",
                "subset_size", "stratified_seed_set", "dataset", "test_dataset", "ood_dataset", "shift", "model",
                "train", "acquisition", "metrics", "benchmark"});
    ExperimentConfig cfg;
    cfg.raw = j;
    cfg.name = get_optional<std::string>(j, "config", "name", "");
    cfg.seed = get_optional<uint64_t>(j, "config", "seed", 0);
    cfg.threads = get_optional<int>(j, "config", "threads", 0);
    cfg.output_dir = get_optional<std::string>(j, "config", "output_dir", "results");
    cfg.trials = get_optional<int>(j, "config", "trials", 5);
    cfg.cycles = get_optional<int>(j, "config", "cycles", 10);
    cfg.acquisition_size = get_optional<int>(j, "config", "acquisition_size", 1000);
    cfg.subset_size = get_optional<int>(j, "config", "subset_size", 10000);
    cfg.stratified_seed_set = get_optional<bool>(j, "config", "stratified_seed_set", false);

    auto names = get_required<std::vector<std::string>>(j, "config", "strategies");
    if (names.empty()) throw ConfigError("config: strategies must be non-empty");
    for (const auto& n : names) {
        try {
            cfg.strategies.push_back(parse_strategy(n));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

    if (!j.contains("dataset")) throw ConfigError("config: missing required key 'dataset'");
    cfg.dataset = parse_source(j.at("dataset"), "dataset");
    if (!j.contains("test_dataset")) throw ConfigError("config: missing required key 'test_dataset'");
    cfg.test_dataset = parse_source(j.at("test_dataset"), "test_dataset");
    if (j.contains("ood_dataset")) cfg.ood_dataset = parse_source(j.at("ood_dataset"), "ood_dataset");
    if (j.contains("shift")) cfg.shift = parse_shift(j.at("shift"));

    if (j.contains("model")) {
        const json& jm = j.at("model");
        check_keys(jm, "model", {"hidden", "embedding_dim", "dropout", "activation"});
        cfg.model.hidden = get_optional<std::vector<int>>(jm, "model", "hidden", cfg.model.hidden);
        cfg.model.embedding_dim = get_optional<int>(jm, "model", "embedding_dim", cfg.model.embedding_dim);
        cfg.model.dropout = get_optional<double>(jm, "model", "dropout", cfg.model.dropout);
        std::string act = get_optional<std::string>(jm, "model", "activation", "relu");
        if (act == "relu")
            cfg.model.activation = Activation::relu;
        else if (act == "tanh")
            cfg.model.activation = Activation::tanh_act;
        else
            throw ConfigError("model: activation must be 'relu' or 'tanh'");
    }

    if (j.contains("train")) {
        const json& jt = j.at("train");
        check_keys(jt, "train",
                   {"learning_rate", "momentum", "weight_decay", "epochs", "lr_decay_epoch", "lr_decay_factor",
                    "batch_size", "temperature", "jitter_sigma"});
        cfg.train.learning_rate = get_optional<double>(jt, "train", "learning_rate", cfg.train.learning_rate);
        cfg.train.momentum = get_optional<double>(jt, "train", "momentum", cfg.train.momentum);
        cfg.train.weight_decay = get_optional<double>(jt, "train", "weight_decay", cfg.train.weight_decay);
        cfg.train.epochs = get_optional<int>(jt, "train", "epochs", cfg.train.epochs);
        cfg.train.lr_decay_epoch = get_optional<int>(jt, "train", "lr_decay_epoch", cfg.train.lr_decay_epoch);
        cfg.train.lr_decay_factor = get_optional<double>(jt, "train", "lr_decay_factor", cfg.train.lr_decay_factor);
        cfg.train.batch_size = get_optional<int>(jt, "train", "batch_size", cfg.train.batch_size);
        cfg.train.temperature = get_optional<double>(jt, "train", "temperature", cfg.train.temperature);
        cfg.train.jitter_sigma = get_optional<double>(jt, "train", "jitter_sigma", cfg.train.jitter_sigma);
    }

    if (j.contains("acquisition")) {
        const json& ja = j.at("acquisition");
        check_keys(ja, "acquisition", {"bald_passes", "pca_variance_fraction", "balanced_selection"});
        cfg.acquire.bald_passes = get_optional<int>(ja, "acquisition", "bald_passes", cfg.acquire.bald_passes);
        cfg.acquire.pca_variance_fraction =
            get_optional<double>(ja, "acquisition", "pca_variance_fraction", cfg.acquire.pca_variance_fraction);
        cfg.acquire.balanced_selection =
            get_optional<bool>(ja, "acquisition", "balanced_selection", cfg.acquire.balanced_selection);
    }

    if (j.contains("metrics")) {
        const json& jm = j.at("metrics");
        check_keys(jm, "metrics", {"ece_bins"});
        cfg.ece_bins = get_optional<int>(jm, "metrics", "ece_bins", cfg.ece_bins);
    }

    if (j.contains("benchmark")) {
        const json& jb = j.at("benchmark");
        check_keys(jb, "benchmark", {"repetitions"});
        cfg.benchmark_repetitions = get_optional<int>(jb, "benchmark", "repetitions", cfg.benchmark_repetitions);
    }

    if (cfg.trials < 1) throw ConfigError("config: trials must be >= 1");
    if (cfg.cycles < 1) throw ConfigError("config: cycles must be >= 1");
    if (cfg.acquisition_size < 1) throw ConfigError("config: acquisition_size must be >= 1");
    if (cfg.subset_size < 1) throw ConfigError("config: subset_size must be >= 1");
    if (cfg.ece_bins < 1) throw ConfigError("config: metrics.ece_bins must be >= 1");
    if (cfg.benchmark_repetitions < 1) throw ConfigError("config: benchmark.repetitions must be >= 1");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return parse_config_json(j);
}

FeatureDataset load_source(const DatasetSource& source) {
    if (source.csv.has_value()) return load_dataset_csv(*source.csv);
    return generate_synthetic(*source.synthetic);
}

namespace {

LoopConfig loop_config_of(const ExperimentConfig& cfg) {
    LoopConfig lc;
    lc.acquisition_size = cfg.acquisition_size;
    lc.cycles = cfg.cycles;
    lc.subset_size = cfg.subset_size;
    lc.model = cfg.model;
    lc.train = cfg.train;
    lc.acquire = cfg.acquire;
    lc.ece_bins = cfg.ece_bins;
    lc.stratified_seed_set = cfg.stratified_seed_set;
    return lc;
}

EvalData build_eval_data(const ExperimentConfig& cfg) {
    EvalData eval;
    eval.test = load_source(cfg.test_dataset);
    if (cfg.shift.has_value()) {
        Rng shift_rng(Rng::mix(cfg.seed, 0x5417F));
        eval.shifted = apply_shift(eval.test, *cfg.shift, shift_rng);
    }
    if (cfg.ood_dataset.has_value()) eval.ood = load_source(*cfg.ood_dataset);
    return eval;
}

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

int current_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

long long unix_ms_now() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

json stat_json(const SummaryStat& s) { return json{{"mean", s.mean}, {"stddev", s.stddev}}; }

json summary_json_of(const ExperimentConfig& cfg, const ExperimentResult& result, int num_classes) {
    json out;
    out["num_classes"] = num_classes;
    out["trials"] = cfg.trials;
    json strategies = json::object();
    for (const auto& [name, trials] : result.trials) {
        json cycles = json::array();
        for (const CycleSummary& s : summarize_trials(trials)) {
            json c;
            c["cycle"] = s.cycle;
            c["labeled_size"] = s.labeled_size;
            c["test_accuracy"] = stat_json(s.test_accuracy);
            c["ece"] = stat_json(s.ece);
            c["brier"] = stat_json(s.brier);
            c["sampling_bias"] = stat_json(s.sampling_bias);
            c["query_time_ns"] = stat_json(s.query_time_ns);
            if (s.shifted_accuracy) c["shifted_accuracy"] = stat_json(*s.shifted_accuracy);
            if (s.shifted_ece) c["shifted_ece"] = stat_json(*s.shifted_ece);
            if (s.ood_auroc) c["ood_auroc"] = stat_json(*s.ood_auroc);
            cycles.push_back(std::move(c));
        }
        strategies[name] = std::move(cycles);
    }
    out["strategies"] = std::move(strategies);
    return out;
}

}  // namespace

std::string results_csv_text(const ExperimentConfig& cfg, const ExperimentResult& result, int num_classes) {
    std::string csv = "strategy,trial,cycle,labeled_size,test_accuracy,ece,brier,sampling_bias";
    for (int k = 0; k < num_classes; ++k) csv += ",count_c" + std::to_string(k);
    csv += ",shifted_accuracy,shifted_ece,ood_auroc,truncated,query_time_ns\n";
    for (StrategyKind kind : cfg.strategies) {
        const std::string name = strategy_name(kind);
        const auto& trials = result.trials.at(name);
        for (size_t t = 0; t < trials.size(); ++t) {
            for (const CycleRecord& r : trials[t].records) {
                csv += name;
                csv += ',' + std::to_string(t);
                csv += ',' + std::to_string(r.cycle);
                csv += ',' + std::to_string(r.labeled_size);
                csv += ',' + format_double(r.test_accuracy);
                csv += ',' + format_double(r.ece);
                csv += ',' + format_double(r.brier);
                csv += ',' + format_double(r.sampling_bias);
                for (long long c : r.class_counts) csv += ',' + std::to_string(c);
                csv += ',';
                if (r.shifted_accuracy) csv += format_double(*r.shifted_accuracy);
                csv += ',';
                if (r.shifted_ece) csv += format_double(*r.shifted_ece);
                csv += ',';
                if (r.ood_auroc) csv += format_double(*r.ood_auroc);
                csv += ',' + std::to_string(trials[t].truncated ? 1 : 0);
                csv += ',' + std::to_string(r.query_time_ns);
                csv += '\n';
            }
        }
    }
    return csv;
}

RunOutputs execute_run(const ExperimentConfig& cfg) {
    apply_threads(cfg.threads);
    const long long started = unix_ms_now();

    FeatureDataset pool = load_source(cfg.dataset);
    EvalData eval = build_eval_data(cfg);
    if (pool.dim() != eval.test.dim()) throw ConfigError("config: pool and test dataset dimensions differ");

    fs::create_directories(cfg.output_dir);
    const std::string partial_marker = (fs::path(cfg.output_dir) / ".partial").string();
    write_text_file(partial_marker, "");

    LoopConfig lc = loop_config_of(cfg);
    ExperimentResult result = run_experiment(cfg.strategies, lc, pool, eval, cfg.trials, cfg.seed);

    RunOutputs outputs;
    outputs.results_csv = (fs::path(cfg.output_dir) / "results.csv").string();
    outputs.summary_json = (fs::path(cfg.output_dir) / "summary.json").string();
    outputs.manifest_json = (fs::path(cfg.output_dir) / "manifest.json").string();

    write_text_file(outputs.results_csv, results_csv_text(cfg, result, pool.num_classes));
    write_text_file(outputs.summary_json, summary_json_of(cfg, result, pool.num_classes).dump(2) + "\n");

    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(cfg.raw.dump())));
    json manifest;
    manifest["format"] = "albench-run-manifest";
    manifest["version"] = 1;
    manifest["albench_version"] = kVersion;
    manifest["config"] = cfg.raw;
    manifest["config_hash"] = std::string("fnv1a64:") + hash_hex;
    manifest["base_seed"] = cfg.seed;
    manifest["trial_seeds"] = result.trial_seeds;
    manifest["threads"] = current_threads();
    manifest["started_unix_ms"] = started;
    manifest["finished_unix_ms"] = unix_ms_now();
    manifest["outputs"] = {{"results_csv", "results.csv"}, {"summary_json", "summary.json"}};
    write_text_file(outputs.manifest_json, manifest.dump(2) + "\n");

    fs::remove(partial_marker);
    return outputs;
}

int cmd_run(const std::string& config_path, const Overrides& overrides) {
    try {
        ExperimentConfig cfg = parse_config_file(config_path);
        if (overrides.out) cfg.output_dir = *overrides.out;
        if (overrides.seed) cfg.seed = *overrides.seed;
        if (overrides.threads) cfg.threads = *overrides.threads;
        if (overrides.trials) cfg.trials = *overrides.trials;
        RunOutputs outputs = execute_run(cfg);
        std::cout << "wrote " << outputs.results_csv << "\n";
        std::cout << "wrote " << outputs.summary_json << "\n";
        std::cout << "wrote " << outputs.manifest_json << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

namespace {

struct BenchmarkRow {
    std::string strategy;
    double mean_ns = 0.0;
    double relative = 0.0;
};

std::vector<BenchmarkRow> run_query_benchmark(const ExperimentConfig& cfg) {
    FeatureDataset pool = load_source(cfg.dataset);
    const int m = cfg.acquisition_size;
    const int subset = 10 * m;  // 10x-oversized candidate set
    if (pool.size() < m + subset)
        throw ConfigError("benchmark: dataset needs at least acquisition_size * 11 samples");

    Rng rng(Rng::mix(cfg.seed, 0xBE7C));
    PoolState state = PoolState::fresh(pool.size());
    std::vector<int> labeled = draw_query_subset(state, m, rng);
    state.acquire(labeled);
    std::vector<int> candidates = draw_query_subset(state, subset, rng);

    Matrix labeled_x = pool.features.select_rows(labeled);
    std::vector<int> labeled_y(labeled.size());
    for (size_t i = 0; i < labeled.size(); ++i) labeled_y[i] = pool.labels[labeled[i]];
    Matrix candidate_x = pool.features.select_rows(candidates);

    // One fixed trained model per loss kind.
    auto make_model = [&](LossKind kind) {
        MlpConfig mcfg = cfg.model;
        mcfg.input_dim = pool.dim();
        mcfg.num_classes = pool.num_classes;
        TrainConfig tcfg = cfg.train;
        tcfg.loss = kind;
        tcfg.seed = Rng::mix(cfg.seed, 0x7A17);
        Mlp model = Mlp::init(mcfg, kind, Rng::mix(cfg.seed, 0x131));
        train(model, labeled_x, labeled_y, tcfg);
        return model;
    };
    Mlp ce_model = make_model(LossKind::cross_entropy);
    std::optional<Mlp> scal_model;
    bool need_scal = std::find(cfg.strategies.begin(), cfg.strategies.end(), StrategyKind::scal) !=
                     cfg.strategies.end();
    if (need_scal) scal_model = make_model(LossKind::supervised_contrastive);

    auto measure = [&](StrategyKind kind) {
        const Mlp& model = (kind == StrategyKind::scal && scal_model) ? *scal_model : ce_model;
        AcquireOptions opts = cfg.acquire;
        double total = 0.0;
        // Warm-up iteration is discarded.
        for (int rep = -1; rep < cfg.benchmark_repetitions; ++rep) {
            opts.mc_seed = Rng::mix(cfg.seed, 0x9100 + static_cast<uint64_t>(rep + 1));
            Rng rep_rng(Rng::mix(cfg.seed, 0xA200 + static_cast<uint64_t>(rep + 1)));
            AcquisitionResult acq =
                acquire(kind, model, candidate_x, labeled_x, labeled_y, pool.num_classes, m, rep_rng, opts);
            if (rep >= 0) total += static_cast<double>(acq.query_time_ns);
        }
        return total / cfg.benchmark_repetitions;
    };

    const double entropy_ns = measure(StrategyKind::entropy);
    std::vector<BenchmarkRow> rows;
    for (StrategyKind kind : cfg.strategies) {
        BenchmarkRow row;
        row.strategy = strategy_name(kind);
        row.mean_ns = kind == StrategyKind::entropy ? entropy_ns : measure(kind);
        row.relative = row.mean_ns / entropy_ns;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

int cmd_benchmark_query(const std::string& config_path, const Overrides& overrides) {
    try {
        ExperimentConfig cfg = parse_config_file(config_path);
        if (overrides.out) cfg.output_dir = *overrides.out;
        if (overrides.seed) cfg.seed = *overrides.seed;
        if (overrides.threads) cfg.threads = *overrides.threads;
        apply_threads(cfg.threads);

        std::vector<BenchmarkRow> rows = run_query_benchmark(cfg);

        fs::create_directories(cfg.output_dir);
        std::string csv = "strategy,mean_query_ns,relative_to_entropy\n";
        json jrows = json::array();
        std::cout << "query time (threads=" << current_threads() << ", repetitions=" << cfg.benchmark_repetitions
                  << ", relative to entropy)\n";
        for (const BenchmarkRow& r : rows) {
            csv += r.strategy + ',' + format_double(r.mean_ns) + ',' + format_double(r.relative) + '\n';
            jrows.push_back({{"strategy", r.strategy}, {"mean_query_ns", r.mean_ns}, {"relative", r.relative}});
            std::printf("  %-12s %12.3f ms   %8.3f\n", r.strategy.c_str(), r.mean_ns / 1e6, r.relative);
        }
        json out{{"threads", current_threads()}, {"repetitions", cfg.benchmark_repetitions}, {"rows", jrows}};
        write_text_file((fs::path(cfg.output_dir) / "benchmark.csv").string(), csv);
        write_text_file((fs::path(cfg.output_dir) / "benchmark.json").string(), out.dump(2) + "\n");
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_eval_robustness(const std::string& config_path, const Overrides& overrides) {
    try {
        ExperimentConfig cfg = parse_config_file(config_path);
        if (overrides.out) cfg.output_dir = *overrides.out;
        if (overrides.seed) cfg.seed = *overrides.seed;
        if (overrides.threads) cfg.threads = *overrides.threads;
        apply_threads(cfg.threads);
        if (!cfg.ood_dataset.has_value()) throw ConfigError("eval-robustness: config has no 'ood_dataset'");
        if (!cfg.shift.has_value()) throw ConfigError("eval-robustness: config has no 'shift'");

        FeatureDataset pool = load_source(cfg.dataset);
        EvalData eval = build_eval_data(cfg);
        LoopConfig lc = loop_config_of(cfg);

        fs::create_directories(cfg.output_dir);
        json jrows = json::array();
        std::string csv = "strategy,clean_accuracy,clean_ece,shifted_accuracy,shifted_ece,ood_auroc\n";
        std::cout << "robustness (single trial, final cycle)\n";
        for (StrategyKind kind : cfg.strategies) {
            lc.strategy = kind;
            TrialResult trial = run_trial(lc, pool, eval, cfg.seed);
            const CycleRecord& last = trial.records.back();
            csv += strategy_name(kind) + ',' + format_double(last.test_accuracy) + ',' + format_double(last.ece) +
                   ',' + format_double(last.shifted_accuracy.value()) + ',' + format_double(last.shifted_ece.value()) +
                   ',' + format_double(last.ood_auroc.value()) + '\n';
            jrows.push_back({{"strategy", strategy_name(kind)},
                             {"clean_accuracy", last.test_accuracy},
                             {"clean_ece", last.ece},
                             {"shifted_accuracy", *last.shifted_accuracy},
                             {"shifted_ece", *last.shifted_ece},
                             {"ood_auroc", *last.ood_auroc}});
            std::printf("  %-12s acc %.4f  ece %.4f  shift-acc %.4f  shift-ece %.4f  ood-auroc %.4f\n",
                        strategy_name(kind).c_str(), last.test_accuracy, last.ece, *last.shifted_accuracy,
                        *last.shifted_ece, *last.ood_auroc);
        }
        write_text_file((fs::path(cfg.output_dir) / "robustness.csv").string(), csv);
        write_text_file((fs::path(cfg.output_dir) / "robustness.json").string(),
                        json{{"rows", jrows}}.dump(2) + "\n");
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

namespace {

void emit_family(const json& summary, const std::string& figure, const char* mean_key, const std::string& path) {
    std::string csv = "figure,strategy,cycle,labeled_count,mean,stddev\n";
    for (auto it = summary.at("strategies").begin(); it != summary.at("strategies").end(); ++it) {
        for (const json& c : it.value()) {
            if (!c.contains(mean_key)) continue;
            csv += figure + ',' + it.key() + ',' + std::to_string(c.at("cycle").get<int>()) + ',' +
                   std::to_string(c.at("labeled_size").get<int>()) + ',' +
                   format_double(c.at(mean_key).at("mean").get<double>()) + ',' +
                   format_double(c.at(mean_key).at("stddev").get<double>()) + '\n';
        }
    }
    write_text_file(path, csv);
}

}  // namespace

int cmd_emit_plotdata(const std::string& results_dir, const std::optional<std::string>& out_dir) {
    try {
        const fs::path summary_path = fs::path(results_dir) / "summary.json";
        std::ifstream in(summary_path);
        if (!in) throw std::runtime_error("no results found: cannot open " + summary_path.string());
        json summary;
        try {
            summary = json::parse(in);
        } catch (const json::exception& e) {
            throw std::runtime_error("corrupt summary " + summary_path.string() + ": " + e.what());
        }
        const fs::path out = out_dir ? fs::path(*out_dir) : fs::path(results_dir);
        fs::create_directories(out);
        emit_family(summary, "accuracy-vs-labels", "test_accuracy", (out / "plot_accuracy.csv").string());
        emit_family(summary, "bias-vs-labels", "sampling_bias", (out / "plot_bias.csv").string());
        emit_family(summary, "ece-vs-labels", "ece", (out / "plot_ece.csv").string());

        // Robustness family: one block per metric actually present.
        std::string csv = "figure,strategy,cycle,labeled_count,mean,stddev\n";
        const struct {
            const char* figure;
            const char* key;
        } kRobustness[] = {{"ood-auroc", "ood_auroc"},
                           {"shifted-accuracy", "shifted_accuracy"},
                           {"shifted-ece", "shifted_ece"}};
        for (const auto& fam : kRobustness) {
            for (auto it = summary.at("strategies").begin(); it != summary.at("strategies").end(); ++it) {
                for (const json& c : it.value()) {
                    if (!c.contains(fam.key)) continue;
                    csv += std::string(fam.figure) + ',' + it.key() + ',' + std::to_string(c.at("cycle").get<int>()) +
                           ',' + std::to_string(c.at("labeled_size").get<int>()) + ',' +
                           format_double(c.at(fam.key).at("mean").get<double>()) + ',' +
                           format_double(c.at(fam.key).at("stddev").get<double>()) + '\n';
                }
            }
        }
        write_text_file((out / "plot_robustness.csv").string(), csv);
        std::cout << "wrote plot data to " << out.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_generate_data(const std::string& config_path, const Overrides& overrides) {
    try {
        ExperimentConfig cfg = parse_config_file(config_path);
        if (overrides.out) cfg.output_dir = *overrides.out;
        if (overrides.seed) cfg.seed = *overrides.seed;
        if (!cfg.dataset.synthetic.has_value())
            throw ConfigError("generate-data: 'dataset' must be a synthetic spec");
        fs::create_directories(cfg.output_dir);
        auto emit = [&](const DatasetSource& src, const char* name) {
            if (!src.synthetic.has_value()) throw ConfigError(std::string("generate-data: '") + name +
                                                              "' must be a synthetic spec");
            FeatureDataset ds = generate_synthetic(*src.synthetic);
            std::string path = (fs::path(cfg.output_dir) / (std::string(name) + ".csv")).string();
            save_dataset_csv(ds, path);
            std::cout << "wrote " << path << " (" << ds.size() << " samples, dim " << ds.dim() << ", " << ds.num_classes
                      << " classes)\n";
        };
        emit(cfg.dataset, "train");
        emit(cfg.test_dataset, "test");
        if (cfg.ood_dataset.has_value()) emit(*cfg.ood_dataset, "ood");
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace albench::harness
