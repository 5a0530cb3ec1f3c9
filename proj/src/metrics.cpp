#include "albench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace albench {

LabelHistogram LabelHistogram::from_counts(std::vector<long long> counts) {
    LabelHistogram h;
    h.counts = std::move(counts);
    for (long long c : h.counts) {
        if (c < 0) throw std::invalid_argument("label histogram: negative count");
        h.total += c;
    }
    return h;
}

LabelHistogram LabelHistogram::from_labels(std::span<const int> labels, int num_classes) {
    std::vector<long long> counts(num_classes, 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw std::invalid_argument("label histogram: label out of range");
        ++counts[y];
    }
    return from_counts(std::move(counts));
}

double sampling_bias(const LabelHistogram& hist) {
    if (hist.total < 1) throw std::invalid_argument("sampling_bias: empty histogram");
    const int k = static_cast<int>(hist.counts.size());
    if (k <= 1) return 0.0;
    bool uniform = true;
    for (long long c : hist.counts) uniform = uniform && c == hist.counts[0];
    if (uniform) return 0.0;  // H equals the balanced entropy exactly
    double h = 0.0;
    for (long long c : hist.counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(hist.total);
        h -= p * std::log(p);
    }
    return std::clamp(1.0 - h / std::log(static_cast<double>(k)), 0.0, 1.0);
}

CalibrationBins make_calibration_bins(std::span<const double> confidences, std::span<const uint8_t> correct,
                                      int num_bins) {
    if (confidences.size() != correct.size()) throw std::invalid_argument("calibration bins: length mismatch");
    if (confidences.empty()) throw std::invalid_argument("calibration bins: no samples");
    if (num_bins < 1) throw std::invalid_argument("calibration bins: need at least one bin");
    CalibrationBins bins;
    bins.num_bins = num_bins;
    bins.count.assign(num_bins, 0);
    bins.confidence_sum.assign(num_bins, 0.0);
    bins.correct_sum.assign(num_bins, 0);
    for (size_t i = 0; i < confidences.size(); ++i) {
        double c = confidences[i];
        if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("calibration bins: confidence outside [0,1]");
        int b = std::min(num_bins - 1, static_cast<int>(c * num_bins));
        ++bins.count[b];
        bins.confidence_sum[b] += c;
        bins.correct_sum[b] += correct[i] ? 1 : 0;
    }
    bins.total = static_cast<long long>(confidences.size());
    return bins;
}

double ece_from_bins(const CalibrationBins& bins) {
    double e = 0.0;
    for (int b = 0; b < bins.num_bins; ++b) {
        if (bins.count[b] == 0) continue;
        double acc = static_cast<double>(bins.correct_sum[b]) / bins.count[b];
        double conf = bins.confidence_sum[b] / bins.count[b];
        e += (static_cast<double>(bins.count[b]) / bins.total) * std::abs(acc - conf);
    }
    return e;
}

double ece(std::span<const double> confidences, std::span<const uint8_t> correct, int num_bins) {
    return ece_from_bins(make_calibration_bins(confidences, correct, num_bins));
}

double brier(const Matrix& probs, std::span<const int> labels) {
    if (probs.rows != static_cast<int>(labels.size())) throw std::invalid_argument("brier: length mismatch");
    if (probs.rows == 0) throw std::invalid_argument("brier: no samples");
    double total = 0.0;
    for (int i = 0; i < probs.rows; ++i) {
        auto row = probs.row(i);
        double s = 0.0;
        for (int k = 0; k < probs.cols; ++k) {
            double diff = row[k] - (labels[i] == k ? 1.0 : 0.0);
            s += diff * diff;
        }
        total += s;
    }
    return total / probs.rows;
}

double auroc(std::span<const double> negative_scores, std::span<const double> positive_scores) {
    if (negative_scores.empty() || positive_scores.empty())
        throw std::invalid_argument("auroc: both score lists must be non-empty");
    const size_t n0 = negative_scores.size();
    const size_t n1 = positive_scores.size();
    struct Item {
        double score;
        bool positive;
    };
    std::vector<Item> items;
    items.reserve(n0 + n1);
    for (double s : negative_scores) items.push_back({s, false});
    for (double s : positive_scores) items.push_back({s, true});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

    // Midranks for ties, then the rank-sum form of the Mann-Whitney U.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < items.size()) {
        size_t j = i;
        while (j < items.size() && items[j].score == items[i].score) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
        for (size_t t = i; t < j; ++t)
            if (items[t].positive) rank_sum_pos += midrank;
        i = j;
    }
    double u = rank_sum_pos - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("accuracy: no samples");
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace albench
