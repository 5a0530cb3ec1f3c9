#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "albench/matrix.hpp"

namespace albench {

struct LabelHistogram {
    std::vector<long long> counts;
    long long total = 0;

    static LabelHistogram from_counts(std::vector<long long> counts);
    static LabelHistogram from_labels(std::span<const int> labels, int num_classes);
};

// 1 - H(counts)/H(balanced), in [0, 1]. 0 = perfectly balanced,
// 1 = all samples in one class. Natural log; the ratio makes the base moot.
// Single-class histograms (K = 1) are defined as 0.
double sampling_bias(const LabelHistogram& hist);

struct CalibrationBins {
    int num_bins = 0;
    std::vector<long long> count;
    std::vector<double> confidence_sum;
    std::vector<long long> correct_sum;
    long long total = 0;
};

CalibrationBins make_calibration_bins(std::span<const double> confidences, std::span<const uint8_t> correct,
                                      int num_bins);
double ece_from_bins(const CalibrationBins& bins);

// Expected calibration error over S equal-width confidence bins.
double ece(std::span<const double> confidences, std::span<const uint8_t> correct, int num_bins);

// Mean over samples of sum_k (p_k - onehot_k)^2.
double brier(const Matrix& probs, std::span<const int> labels);

// Mann-Whitney AUROC; ties count half. Higher score = positive class.
double auroc(std::span<const double> negative_scores, std::span<const double> positive_scores);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

constexpr int kDefaultEceBins = 15;

}  // namespace albench
