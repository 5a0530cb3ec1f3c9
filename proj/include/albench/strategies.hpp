#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "albench/linalg.hpp"
#include "albench/matrix.hpp"
#include "albench/nn.hpp"
#include "albench/rng.hpp"

namespace albench {

enum class StrategyKind { random, entropy, bald, coreset, featuresim, scal, dfm };

StrategyKind parse_strategy(const std::string& name);
std::string strategy_name(StrategyKind kind);

// Per-class buckets of L2-normalized labeled-sample embeddings.
struct FeatureBank {
    std::map<int, Matrix> by_class;
    static FeatureBank build(const Matrix& embeddings, std::span<const int> labels);
    const Matrix* bucket(int k) const;
};

// Shannon entropy per probability row; rows must sum to 1 within 1e-4.
std::vector<double> score_entropy(const Matrix& probs);

// Mutual information between prediction and dropout masks (BALD).
std::vector<double> score_bald(const std::vector<Matrix>& mc_probs);

// Greedy k-center: repeatedly pick the candidate farthest from the labeled
// points plus everything selected so far. Ties break to the lowest index.
std::vector<int> select_coreset_kcenter(const Matrix& candidate_embeddings, const Matrix& labeled_embeddings, int m);

// Max cosine similarity between z and the bank rows of its predicted class.
// Lower = more informative. A missing class bucket scores -1 and bumps
// *missing_class_count.
double score_feature_similarity(const FeatureBank& bank, std::span<const double> z, int predicted_class,
                                int* missing_class_count = nullptr);

// Feature reconstruction error against the predicted class's PCA subspace.
// Higher = more informative. A missing class entry scores +inf.
double score_dfm(const ClassConditionalPCA& pca, std::span<const double> z, int predicted_class,
                 int* missing_class_count = nullptr);

enum class SelectDirection { lowest_first, highest_first };

// Top-m by score with lowest-index tie-breaking.
std::vector<int> select_top(std::span<const double> scores, int m, SelectDirection direction);

// Per-predicted-class quotas of floor(M/K), remainder going to the classes
// with the most candidates left; per-class deficits are refilled globally by
// best remaining rank. Returns exactly min(m, n) indices.
std::vector<int> select_balanced_per_class(std::span<const double> scores, std::span<const int> predicted_classes,
                                           int m, int num_classes, SelectDirection direction);

struct AcquireOptions {
    int bald_passes = kDefaultMcPasses;
    double pca_variance_fraction = 0.95;
    bool balanced_selection = true;  // per-class quotas for scal/featuresim/dfm
    uint64_t mc_seed = 0;
};

struct AcquisitionResult {
    std::vector<int> selected;              // positions within the offered candidate set
    std::vector<double> scores;             // per candidate
    std::vector<long long> per_class_counts;  // predicted class of each selected candidate
    long long query_time_ns = 0;            // scoring + selection only
    int missing_class_warnings = 0;
};

// Scores the offered candidates with the given strategy and selects
// min(m, candidates) of them. Candidate labels are never an input: the
// strategy sees features of the candidates plus the labeled set only.
AcquisitionResult acquire(StrategyKind kind, const Mlp& model, const Matrix& candidate_features,
                          const Matrix& labeled_features, std::span<const int> labeled_labels, int num_classes,
                          int m, Rng& rng, const AcquireOptions& options);

// Per-sample strategy scores oriented so that higher = more out-of-
// distribution; used for the OOD AUROC evaluation.
std::vector<double> strategy_ood_scores(StrategyKind kind, const Mlp& model, const Matrix& features,
                                        const Matrix& labeled_features, std::span<const int> labeled_labels,
                                        const AcquireOptions& options, Rng& rng);

}  // namespace albench
