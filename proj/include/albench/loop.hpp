#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "albench/dataset.hpp"
#include "albench/metrics.hpp"
#include "albench/nn.hpp"
#include "albench/strategies.hpp"

namespace albench {

struct EvalData {
    FeatureDataset test;
    std::optional<FeatureDataset> shifted;  // test distribution, degraded
    std::optional<FeatureDataset> ood;
};

struct LoopConfig {
    int acquisition_size = 1000;  // M
    int cycles = 10;
    int subset_size = 10000;  // candidate pool drawn per cycle
    StrategyKind strategy = StrategyKind::random;
    MlpConfig model;
    TrainConfig train;
    AcquireOptions acquire;
    int ece_bins = kDefaultEceBins;
    bool stratified_seed_set = false;  // initial labeled set is uniform by default
};

struct CycleRecord {
    int cycle = 0;
    int labeled_size = 0;
    double test_accuracy = 0.0;
    double ece = 0.0;
    double brier = 0.0;
    double sampling_bias = 0.0;
    std::vector<long long> class_counts;  // true labels of the labeled set
    long long query_time_ns = 0;
    std::optional<double> shifted_accuracy;
    std::optional<double> shifted_ece;
    std::optional<double> ood_auroc;
};

struct TrialResult {
    std::vector<CycleRecord> records;
    bool truncated = false;  // pool ran out before the requested cycles
};

// Final state of a trial, for robustness evaluations on the trained model.
struct FinalState {
    Mlp model;
    std::vector<int> labeled;
};

// One active-learning run: seed labeling, then train / subset / score /
// acquire / reveal cycles, retraining from scratch every cycle.
TrialResult run_trial(const LoopConfig& config, const FeatureDataset& pool_data, const EvalData& eval,
                      uint64_t trial_seed, FinalState* final_state = nullptr);

struct ExperimentResult {
    // strategy name -> one TrialResult per trial
    std::map<std::string, std::vector<TrialResult>> trials;
    std::vector<uint64_t> trial_seeds;
};

// Runs every strategy for `trials` trials; trial t uses seed base_seed + t,
// so the seed labeled set is shared across strategies within a trial.
// SCAL trains with the supervised contrastive loss, everything else with
// cross-entropy.
ExperimentResult run_experiment(std::span<const StrategyKind> strategies, const LoopConfig& base_config,
                                const FeatureDataset& pool_data, const EvalData& eval, int trials,
                                uint64_t base_seed);

struct SummaryStat {
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev; 0 when trials == 1
};

struct CycleSummary {
    int cycle = 0;
    int labeled_size = 0;
    SummaryStat test_accuracy, ece, brier, sampling_bias, query_time_ns;
    std::optional<SummaryStat> shifted_accuracy, shifted_ece, ood_auroc;
};

std::vector<CycleSummary> summarize_trials(const std::vector<TrialResult>& trials);

LossKind loss_kind_for(StrategyKind kind);

}  // namespace albench
