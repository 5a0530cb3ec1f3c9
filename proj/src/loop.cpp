#include "albench/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace albench {

LossKind loss_kind_for(StrategyKind kind) {
    return kind == StrategyKind::scal ? LossKind::supervised_contrastive : LossKind::cross_entropy;
}

namespace {

// Stream tags for the per-trial RNG family.
enum : uint64_t { kSeedSet = 1, kSubset = 2, kModelInit = 3, kTrain = 4, kAcquire = 5, kMc = 6, kOod = 7 };

uint64_t stream(uint64_t trial_seed, uint64_t tag, uint64_t cycle) {
    return Rng::mix(Rng::mix(trial_seed, tag), cycle);
}

std::vector<int> draw_seed_set(const FeatureDataset& data, int m, bool stratified, Rng& rng) {
    const int n = data.size();
    m = std::min(m, n);
    if (!stratified) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < m; ++i) {
            int j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(m);
        return idx;
    }
    // Stratified: shuffle within each class, then take classes round-robin.
    std::vector<std::vector<int>> per_class(data.num_classes);
    for (int i = 0; i < n; ++i) per_class[data.labels[i]].push_back(i);
    for (auto& bucket : per_class) {
        for (int i = static_cast<int>(bucket.size()) - 1; i > 0; --i) {
            int j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i + 1)));
            std::swap(bucket[i], bucket[j]);
        }
    }
    std::vector<int> out;
    size_t level = 0;
    while (static_cast<int>(out.size()) < m) {
        bool any = false;
        for (auto& bucket : per_class) {
            if (level < bucket.size() && static_cast<int>(out.size()) < m) {
                out.push_back(bucket[level]);
                any = true;
            }
        }
        if (!any) break;
        ++level;
    }
    return out;
}

Mlp train_fresh_model(const LoopConfig& config, const FeatureDataset& data, std::span<const int> labeled,
                      uint64_t trial_seed, int cycle) {
    Matrix x = data.features.select_rows(labeled);
    std::vector<int> y(labeled.size());
    for (size_t i = 0; i < labeled.size(); ++i) y[i] = data.labels[labeled[i]];

    MlpConfig mcfg = config.model;
    mcfg.input_dim = data.dim();
    mcfg.num_classes = data.num_classes;
    TrainConfig tcfg = config.train;
    tcfg.loss = loss_kind_for(config.strategy);
    tcfg.seed = stream(trial_seed, kTrain, cycle);

    Mlp model = Mlp::init(mcfg, tcfg.loss, stream(trial_seed, kModelInit, cycle));
    train(model, x, y, tcfg);
    return model;
}

void evaluate_cycle(const LoopConfig& config, const FeatureDataset& data, const EvalData& eval, const Mlp& model,
                    const PoolState& pool, uint64_t trial_seed, int cycle, CycleRecord& rec) {
    auto fwd = model.forward(eval.test.features);
    Matrix probs = softmax(fwd.logits);
    std::vector<int> pred(probs.rows);
    std::vector<double> conf(probs.rows);
    std::vector<uint8_t> correct(probs.rows);
    for (int i = 0; i < probs.rows; ++i) {
        auto row = probs.row(i);
        int best = 0;
        for (int c = 1; c < probs.cols; ++c)
            if (row[c] > row[best]) best = c;
        pred[i] = best;
        conf[i] = row[best];
        correct[i] = pred[i] == eval.test.labels[i] ? 1 : 0;
    }
    rec.test_accuracy = accuracy(pred, eval.test.labels);
    rec.ece = ece(conf, correct, config.ece_bins);
    rec.brier = brier(probs, eval.test.labels);

    std::vector<int> labeled_labels(pool.labeled.size());
    for (size_t i = 0; i < pool.labeled.size(); ++i) labeled_labels[i] = data.labels[pool.labeled[i]];
    LabelHistogram hist = LabelHistogram::from_labels(labeled_labels, data.num_classes);
    rec.sampling_bias = sampling_bias(hist);
    rec.class_counts = hist.counts;
    rec.labeled_size = static_cast<int>(pool.labeled.size());

    if (eval.shifted.has_value()) {
        auto sfwd = model.forward(eval.shifted->features);
        Matrix sprobs = softmax(sfwd.logits);
        std::vector<int> spred(sprobs.rows);
        std::vector<double> sconf(sprobs.rows);
        std::vector<uint8_t> scorrect(sprobs.rows);
        for (int i = 0; i < sprobs.rows; ++i) {
            auto row = sprobs.row(i);
            int best = 0;
            for (int c = 1; c < sprobs.cols; ++c)
                if (row[c] > row[best]) best = c;
            spred[i] = best;
            sconf[i] = row[best];
            scorrect[i] = spred[i] == eval.shifted->labels[i] ? 1 : 0;
        }
        rec.shifted_accuracy = accuracy(spred, eval.shifted->labels);
        rec.shifted_ece = ece(sconf, scorrect, config.ece_bins);
    }

    if (eval.ood.has_value()) {
        Matrix labeled_x = data.features.select_rows(pool.labeled);
        AcquireOptions opts = config.acquire;
        opts.mc_seed = stream(trial_seed, kMc, 1000 + cycle);
        Rng ood_rng(stream(trial_seed, kOod, cycle));
        auto in_scores = strategy_ood_scores(config.strategy, model, eval.test.features, labeled_x, labeled_labels,
                                             opts, ood_rng);
        auto out_scores =
            strategy_ood_scores(config.strategy, model, eval.ood->features, labeled_x, labeled_labels, opts, ood_rng);
        rec.ood_auroc = auroc(in_scores, out_scores);
    }
}

}  // namespace

TrialResult run_trial(const LoopConfig& config, const FeatureDataset& pool_data, const EvalData& eval,
                      uint64_t trial_seed, FinalState* final_state) {
    pool_data.validate();
    eval.test.validate();
    if (config.acquisition_size < 1) throw std::invalid_argument("loop: acquisition size must be >= 1");
    if (config.cycles < 1) throw std::invalid_argument("loop: cycles must be >= 1");
    if (config.subset_size < 1) throw std::invalid_argument("loop: subset size must be >= 1");
    if (pool_data.size() < config.acquisition_size) throw std::invalid_argument("loop: pool smaller than one batch");

    const int m = config.acquisition_size;
    TrialResult result;
    PoolState pool = PoolState::fresh(pool_data.size());

    // Cycle 0: random seed labeling (the labels an annotator would provide
    // first), then the first model.
    Rng seed_rng(stream(trial_seed, kSeedSet, 0));
    auto t0 = std::chrono::steady_clock::now();
    std::vector<int> seed_set = draw_seed_set(pool_data, m, config.stratified_seed_set, seed_rng);
    auto t1 = std::chrono::steady_clock::now();
    pool.acquire(seed_set);
    pool.check_invariants(pool_data.size());

    Mlp model = train_fresh_model(config, pool_data, pool.labeled, trial_seed, 0);
    CycleRecord rec;
    rec.cycle = 0;
    rec.query_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    evaluate_cycle(config, pool_data, eval, model, pool, trial_seed, 0, rec);
    result.records.push_back(std::move(rec));

    for (int cycle = 1; cycle < config.cycles; ++cycle) {
        if (pool.unlabeled.empty()) {
            result.truncated = true;
            break;
        }
        Rng subset_rng(stream(trial_seed, kSubset, cycle));
        std::vector<int> subset = draw_query_subset(pool, config.subset_size, subset_rng);

        Matrix candidates = pool_data.features.select_rows(subset);
        Matrix labeled_x = pool_data.features.select_rows(pool.labeled);
        std::vector<int> labeled_y(pool.labeled.size());
        for (size_t i = 0; i < pool.labeled.size(); ++i) labeled_y[i] = pool_data.labels[pool.labeled[i]];

        AcquireOptions opts = config.acquire;
        opts.mc_seed = stream(trial_seed, kMc, cycle);
        Rng acquire_rng(stream(trial_seed, kAcquire, cycle));
        AcquisitionResult acq =
            acquire(config.strategy, model, candidates, labeled_x, labeled_y, pool_data.num_classes, m, acquire_rng,
                    opts);

        std::vector<int> chosen(acq.selected.size());
        for (size_t i = 0; i < acq.selected.size(); ++i) chosen[i] = subset[acq.selected[i]];
        if (static_cast<int>(chosen.size()) < m) result.truncated = true;

        pool.cycle = cycle;
        pool.acquire(chosen);
        pool.check_invariants(pool_data.size());

        model = train_fresh_model(config, pool_data, pool.labeled, trial_seed, cycle);
        CycleRecord r;
        r.cycle = cycle;
        r.query_time_ns = acq.query_time_ns;
        evaluate_cycle(config, pool_data, eval, model, pool, trial_seed, cycle, r);
        result.records.push_back(std::move(r));
    }

    if (final_state != nullptr) {
        final_state->model = std::move(model);
        final_state->labeled = pool.labeled;
    }
    return result;
}

ExperimentResult run_experiment(std::span<const StrategyKind> strategies, const LoopConfig& base_config,
                                const FeatureDataset& pool_data, const EvalData& eval, int trials,
                                uint64_t base_seed) {
    if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
    ExperimentResult out;
    for (int t = 0; t < trials; ++t) out.trial_seeds.push_back(base_seed + static_cast<uint64_t>(t));
    for (StrategyKind kind : strategies) {
        LoopConfig config = base_config;
        config.strategy = kind;
        std::vector<TrialResult>& results = out.trials[strategy_name(kind)];
        for (int t = 0; t < trials; ++t) results.push_back(run_trial(config, pool_data, eval, out.trial_seeds[t]));
    }
    return out;
}

namespace {

SummaryStat stat_of(const std::vector<double>& values) {
    SummaryStat s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / (values.size() - 1));
    }
    return s;
}

}  // namespace

std::vector<CycleSummary> summarize_trials(const std::vector<TrialResult>& trials) {
    size_t cycles = 0;
    for (const auto& t : trials) cycles = std::max(cycles, t.records.size());
    std::vector<CycleSummary> out;
    for (size_t c = 0; c < cycles; ++c) {
        CycleSummary s;
        std::vector<double> acc, ece_v, brier_v, bias_v, qt, sacc, sece, oodv;
        for (const auto& t : trials) {
            if (c >= t.records.size()) continue;
            const CycleRecord& r = t.records[c];
            s.cycle = r.cycle;
            s.labeled_size = r.labeled_size;
            acc.push_back(r.test_accuracy);
            ece_v.push_back(r.ece);
            brier_v.push_back(r.brier);
            bias_v.push_back(r.sampling_bias);
            qt.push_back(static_cast<double>(r.query_time_ns));
            if (r.shifted_accuracy) sacc.push_back(*r.shifted_accuracy);
            if (r.shifted_ece) sece.push_back(*r.shifted_ece);
            if (r.ood_auroc) oodv.push_back(*r.ood_auroc);
        }
        s.test_accuracy = stat_of(acc);
        s.ece = stat_of(ece_v);
        s.brier = stat_of(brier_v);
        s.sampling_bias = stat_of(bias_v);
        s.query_time_ns = stat_of(qt);
        if (!sacc.empty()) s.shifted_accuracy = stat_of(sacc);
        if (!sece.empty()) s.shifted_ece = stat_of(sece);
        if (!oodv.empty()) s.ood_auroc = stat_of(oodv);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace albench
