#include <doctest.h>

#include <cmath>
#include <set>

#include "albench/loop.hpp"

using namespace albench;

namespace {

FeatureDataset blobs(int per_class, double separation, uint64_t seed, int num_classes = 3) {
    SyntheticSpec spec;
    spec.means = Matrix(num_classes, 3);
    for (int k = 0; k < num_classes; ++k) spec.means(k, k % 3) = separation;
    spec.stddevs.assign(num_classes, 0.6);
    spec.counts.assign(num_classes, per_class);
    spec.seed = seed;
    return generate_synthetic(spec);
}

LoopConfig quick_config(StrategyKind kind) {
    LoopConfig cfg;
    cfg.acquisition_size = 9;
    cfg.cycles = 3;
    cfg.subset_size = 30;
    cfg.strategy = kind;
    cfg.model.hidden = {8};
    cfg.model.embedding_dim = 4;
    cfg.model.dropout = 0.1;
    cfg.train.epochs = 4;
    cfg.train.lr_decay_epoch = 4;
    cfg.train.batch_size = 16;
    cfg.acquire.bald_passes = 4;
    return cfg;
}

bool records_equal(const CycleRecord& a, const CycleRecord& b) {
    return a.cycle == b.cycle && a.labeled_size == b.labeled_size && a.test_accuracy == b.test_accuracy &&
           a.ece == b.ece && a.brier == b.brier && a.sampling_bias == b.sampling_bias &&
           a.class_counts == b.class_counts && a.shifted_accuracy == b.shifted_accuracy &&
           a.shifted_ece == b.shifted_ece && a.ood_auroc == b.ood_auroc;
}

}  // namespace

TEST_CASE("run_trial: one cycle yields one record of size M") {
    FeatureDataset pool = blobs(30, 4.0, 1);
    EvalData eval{blobs(10, 4.0, 2), std::nullopt, std::nullopt};
    LoopConfig cfg = quick_config(StrategyKind::random);
    cfg.cycles = 1;
    TrialResult res = run_trial(cfg, pool, eval, 7);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].labeled_size == 9);
    CHECK(!res.truncated);
}

TEST_CASE("run_trial: labeled sizes grow by M each cycle") {
    FeatureDataset pool = blobs(30, 4.0, 3);
    EvalData eval{blobs(10, 4.0, 4), std::nullopt, std::nullopt};
    for (StrategyKind kind : {StrategyKind::entropy, StrategyKind::scal, StrategyKind::dfm}) {
        LoopConfig cfg = quick_config(kind);
        TrialResult res = run_trial(cfg, pool, eval, 11);
        REQUIRE(res.records.size() == 3);
        for (int c = 0; c < 3; ++c) {
            CHECK(res.records[c].cycle == c);
            CHECK(res.records[c].labeled_size == 9 * (c + 1));
            long long sum = 0;
            for (long long v : res.records[c].class_counts) sum += v;
            CHECK(sum == res.records[c].labeled_size);
            CHECK(res.records[c].sampling_bias >= 0.0);
            CHECK(res.records[c].sampling_bias <= 1.0);
            CHECK(res.records[c].test_accuracy >= 0.0);
            CHECK(res.records[c].test_accuracy <= 1.0);
        }
        CHECK(!res.truncated);
    }
}

TEST_CASE("run_trial: identical config and seed give identical records") {
    FeatureDataset pool = blobs(30, 4.0, 5);
    EvalData eval{blobs(10, 4.0, 6), std::nullopt, std::nullopt};
    LoopConfig cfg = quick_config(StrategyKind::entropy);
    TrialResult a = run_trial(cfg, pool, eval, 21);
    TrialResult b = run_trial(cfg, pool, eval, 21);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) CHECK(records_equal(a.records[i], b.records[i]));

    TrialResult c = run_trial(cfg, pool, eval, 22);
    bool all_same = true;
    for (size_t i = 0; i < std::min(a.records.size(), c.records.size()); ++i)
        all_same = all_same && records_equal(a.records[i], c.records[i]);
    CHECK(!all_same);
}

TEST_CASE("run_trial: pool exhaustion truncates and flags the run") {
    FeatureDataset pool = blobs(5, 4.0, 7);  // 15 samples total
    EvalData eval{blobs(10, 4.0, 8), std::nullopt, std::nullopt};
    LoopConfig cfg = quick_config(StrategyKind::random);
    cfg.acquisition_size = 6;
    cfg.cycles = 5;  // needs 30 samples, only 15 exist
    TrialResult res = run_trial(cfg, pool, eval, 9);
    CHECK(res.truncated);
    CHECK(res.records.size() < 5);
    CHECK(res.records.back().labeled_size <= 15);
}

TEST_CASE("run_trial: optional shifted and OOD metrics are populated") {
    FeatureDataset pool = blobs(30, 5.0, 10);
    EvalData eval;
    eval.test = blobs(10, 5.0, 11);
    Rng shift_rng(1);
    eval.shifted = apply_shift(eval.test, ShiftSpec{ShiftKind::additive_noise, 0.5}, shift_rng);
    SyntheticSpec far;
    far.means = Matrix(1, 3, 40.0);
    far.stddevs = {0.5};
    far.counts = {30};
    far.seed = 12;
    eval.ood = generate_synthetic(far);

    LoopConfig cfg = quick_config(StrategyKind::dfm);
    TrialResult res = run_trial(cfg, pool, eval, 13);
    for (const CycleRecord& r : res.records) {
        REQUIRE(r.shifted_accuracy.has_value());
        REQUIRE(r.shifted_ece.has_value());
        REQUIRE(r.ood_auroc.has_value());
        CHECK(*r.ood_auroc >= 0.0);
        CHECK(*r.ood_auroc <= 1.0);
    }
}

TEST_CASE("run_trial: final state exposes the trained model and labeled set") {
    FeatureDataset pool = blobs(20, 4.0, 14);
    EvalData eval{blobs(10, 4.0, 15), std::nullopt, std::nullopt};
    LoopConfig cfg = quick_config(StrategyKind::entropy);
    FinalState state;
    TrialResult res = run_trial(cfg, pool, eval, 16, &state);
    CHECK(state.labeled.size() == static_cast<size_t>(res.records.back().labeled_size));
    CHECK(std::set<int>(state.labeled.begin(), state.labeled.end()).size() == state.labeled.size());
    auto out = state.model.forward(eval.test.features);
    CHECK(out.logits.rows == eval.test.size());
}

TEST_CASE("run_trial: stratified seed set balances the first cycle") {
    // heavily imbalanced pool: uniform seeding would mirror the imbalance
    SyntheticSpec spec;
    spec.means = Matrix(3, 3);
    for (int k = 0; k < 3; ++k) spec.means(k, k) = 4.0;
    spec.stddevs = {0.6, 0.6, 0.6};
    spec.counts = {20, 60, 180};
    spec.seed = 30;
    FeatureDataset pool = generate_synthetic(spec);
    EvalData eval{blobs(10, 4.0, 31), std::nullopt, std::nullopt};

    LoopConfig cfg = quick_config(StrategyKind::random);
    cfg.cycles = 1;
    cfg.stratified_seed_set = true;
    TrialResult res = run_trial(cfg, pool, eval, 33);
    const auto& counts = res.records[0].class_counts;
    long long lo = *std::min_element(counts.begin(), counts.end());
    long long hi = *std::max_element(counts.begin(), counts.end());
    CHECK(hi - lo <= 1);
    CHECK(res.records[0].sampling_bias <= 0.01);

    cfg.stratified_seed_set = false;
    TrialResult uniform = run_trial(cfg, pool, eval, 33);
    CHECK(uniform.records[0].sampling_bias > 0.05);  // mirrors the pool imbalance
}

TEST_CASE("run_experiment: seeds, stddev degeneracy, and mean recomputation") {
    FeatureDataset pool = blobs(25, 4.0, 17);
    EvalData eval{blobs(10, 4.0, 18), std::nullopt, std::nullopt};
    LoopConfig cfg = quick_config(StrategyKind::random);
    std::vector<StrategyKind> kinds = {StrategyKind::random, StrategyKind::entropy};

    ExperimentResult res = run_experiment(kinds, cfg, pool, eval, 3, 100);
    CHECK(res.trial_seeds == std::vector<uint64_t>{100, 101, 102});
    REQUIRE(res.trials.at("random").size() == 3);

    // the shared trial seed makes the seed labeled set identical across strategies
    CHECK(res.trials.at("random")[0].records[0].class_counts ==
          res.trials.at("entropy")[0].records[0].class_counts);

    auto summary = summarize_trials(res.trials.at("random"));
    REQUIRE(summary.size() == 3);
    double mean0 = 0.0;
    for (const TrialResult& t : res.trials.at("random")) mean0 += t.records[0].test_accuracy;
    mean0 /= 3.0;
    CHECK(summary[0].test_accuracy.mean == doctest::Approx(mean0).epsilon(1e-12));

    ExperimentResult single = run_experiment(kinds, cfg, pool, eval, 1, 5);
    auto s1 = summarize_trials(single.trials.at("entropy"));
    for (const auto& c : s1) {
        CHECK(c.test_accuracy.stddev == 0.0);
        CHECK(c.sampling_bias.stddev == 0.0);
    }
}
