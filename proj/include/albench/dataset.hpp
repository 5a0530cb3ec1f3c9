#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "albench/matrix.hpp"
#include "albench/rng.hpp"

namespace albench {

// Feature rows plus integer class labels; the universe pools are drawn from.
struct FeatureDataset {
    Matrix features;          // N x d
    std::vector<int> labels;  // values in [0, num_classes)
    int num_classes = 0;

    int size() const { return features.rows; }
    int dim() const { return features.cols; }
    void validate() const;
    std::vector<long long> label_histogram() const;
};

// Gaussian mixture generator spec: one isotropic blob per class.
struct SyntheticSpec {
    Matrix means;                 // K x d
    std::vector<double> stddevs;  // per class, > 0
    std::vector<int> counts;      // per class, >= 1
    uint64_t seed = 0;

    int num_classes() const { return means.rows; }
    int dim() const { return means.cols; }
    void validate() const;
};

enum class ShiftKind { additive_noise, mean_translation };

struct ShiftSpec {
    ShiftKind kind = ShiftKind::additive_noise;
    double magnitude = 0.0;
    void validate() const;
};

// Disjoint labeled/unlabeled index sets over one dataset.
struct PoolState {
    std::vector<int> labeled;    // insertion order = acquisition order
    std::vector<int> unlabeled;  // original dataset order
    int cycle = 0;

    static PoolState fresh(int n);
    // Moves the given indices from unlabeled to labeled, preserving order.
    // Throws if any index is not currently unlabeled.
    void acquire(std::span<const int> indices);
    void check_invariants(int n) const;
};

FeatureDataset generate_synthetic(const SyntheticSpec& spec);

// CSV format: header "label,f0,...,f{d-1}", one sample per line.
FeatureDataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const FeatureDataset& ds, const std::string& path);

// min(size, |unlabeled|) distinct indices, uniform without replacement.
std::vector<int> draw_query_subset(const PoolState& pool, int size, Rng& rng);

FeatureDataset apply_shift(const FeatureDataset& ds, const ShiftSpec& shift, Rng& rng);

}  // namespace albench
