#include "albench/strategies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "albench/kernels.hpp"

namespace albench {

StrategyKind parse_strategy(const std::string& name) {
    if (name == "random") return StrategyKind::random;
    if (name == "entropy") return StrategyKind::entropy;
    if (name == "bald") return StrategyKind::bald;
    if (name == "coreset") return StrategyKind::coreset;
    if (name == "featuresim") return StrategyKind::featuresim;
    if (name == "scal") return StrategyKind::scal;
    if (name == "dfm") return StrategyKind::dfm;
    throw std::invalid_argument("unknown strategy: " + name);
}

std::string strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::random: return "random";
        case StrategyKind::entropy: return "entropy";
        case StrategyKind::bald: return "bald";
        case StrategyKind::coreset: return "coreset";
        case StrategyKind::featuresim: return "featuresim";
        case StrategyKind::scal: return "scal";
        case StrategyKind::dfm: return "dfm";
    }
    return "?";
}

FeatureBank FeatureBank::build(const Matrix& embeddings, std::span<const int> labels) {
    if (embeddings.rows != static_cast<int>(labels.size()))
        throw std::invalid_argument("feature bank: label count mismatch");
    std::map<int, std::vector<int>> idx;
    for (int i = 0; i < embeddings.rows; ++i) idx[labels[i]].push_back(i);
    FeatureBank bank;
    for (auto& [k, rows] : idx) {
        Matrix bucket = embeddings.select_rows(rows);
        for (int i = 0; i < bucket.rows; ++i) {
            auto row = bucket.row(i);
            double inv = 1.0 / std::sqrt(std::max(squared_norm(row), 1e-24));
            for (double& v : row) v *= inv;
        }
        bank.by_class.emplace(k, std::move(bucket));
    }
    return bank;
}

const Matrix* FeatureBank::bucket(int k) const {
    auto it = by_class.find(k);
    return it == by_class.end() ? nullptr : &it->second;
}

std::vector<double> score_entropy(const Matrix& probs) {
    for (int i = 0; i < probs.rows; ++i) {
        double s = 0.0;
        for (double v : probs.row(i)) s += v;
        if (std::abs(s - 1.0) > 1e-4)
            throw std::invalid_argument("score_entropy: row " + std::to_string(i) + " is not a distribution");
    }
    return kernels::entropy_rows(probs);
}

std::vector<double> score_bald(const std::vector<Matrix>& mc_probs) {
    if (mc_probs.size() < 2) throw std::invalid_argument("score_bald: need at least 2 passes");
    return kernels::bald_scores(mc_probs);
}

std::vector<int> select_coreset_kcenter(const Matrix& candidate_embeddings, const Matrix& labeled_embeddings, int m) {
    if (labeled_embeddings.rows < 1) throw std::invalid_argument("coreset: labeled set is empty");
    if (m > candidate_embeddings.rows) throw std::invalid_argument("coreset: m exceeds candidate count");
    std::vector<double> min_sq = kernels::min_sq_dists(candidate_embeddings, labeled_embeddings);
    std::vector<int> selected;
    selected.reserve(m);
    std::vector<char> taken(candidate_embeddings.rows, 0);
    for (int step = 0; step < m; ++step) {
        int best = -1;
        double best_d = -1.0;
        for (int i = 0; i < candidate_embeddings.rows; ++i) {
            if (taken[i]) continue;
            if (min_sq[i] > best_d) {  // strict >: ties go to the lowest index
                best_d = min_sq[i];
                best = i;
            }
        }
        selected.push_back(best);
        taken[best] = 1;
        auto center = candidate_embeddings.row(best);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < candidate_embeddings.rows; ++i) {
            if (taken[i]) continue;
            auto c = candidate_embeddings.row(i);
            double d = 0.0;
            for (size_t k = 0; k < c.size(); ++k) {
                double t = c[k] - center[k];
                d += t * t;
            }
            min_sq[i] = std::min(min_sq[i], d);
        }
    }
    return selected;
}

double score_feature_similarity(const FeatureBank& bank, std::span<const double> z, int predicted_class,
                                int* missing_class_count) {
    const Matrix* bucket = bank.bucket(predicted_class);
    if (bucket == nullptr) {
        if (missing_class_count != nullptr) ++*missing_class_count;
        return -1.0;  // no reference features: maximally informative
    }
    double inv = 1.0 / std::sqrt(std::max(squared_norm(z), 1e-24));
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < bucket->rows; ++i) {
        double s = dot(bucket->row(i), z) * inv;
        best = std::max(best, s);
    }
    return best;
}

double score_dfm(const ClassConditionalPCA& pca, std::span<const double> z, int predicted_class,
                 int* missing_class_count) {
    const PcaEntry* entry = pca.entry(predicted_class);
    if (entry == nullptr) {
        if (missing_class_count != nullptr) ++*missing_class_count;
        return std::numeric_limits<double>::infinity();
    }
    return fre(*entry, z);
}

namespace {

// Candidate order by score with the requested direction, lowest index first
// among equals.
std::vector<int> ranked_order(std::span<const double> scores, SelectDirection direction) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    if (direction == SelectDirection::lowest_first) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (scores[a] != scores[b]) return scores[a] < scores[b];
            return a < b;
        });
    } else {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
    }
    return order;
}

}  // namespace

std::vector<int> select_top(std::span<const double> scores, int m, SelectDirection direction) {
    std::vector<int> order = ranked_order(scores, direction);
    order.resize(std::min<size_t>(order.size(), static_cast<size_t>(std::max(m, 0))));
    return order;
}

std::vector<int> select_balanced_per_class(std::span<const double> scores, std::span<const int> predicted_classes,
                                           int m, int num_classes, SelectDirection direction) {
    const int n = static_cast<int>(scores.size());
    if (static_cast<int>(predicted_classes.size()) != n)
        throw std::invalid_argument("balanced selection: class list length mismatch");
    if (num_classes < 1) throw std::invalid_argument("balanced selection: num_classes must be >= 1");
    m = std::min(m, n);
    if (m <= 0) return {};

    std::vector<int> order = ranked_order(scores, direction);
    std::vector<std::vector<int>> per_class(num_classes);  // ranked candidates per predicted class
    for (int i : order) {
        int c = predicted_classes[i];
        if (c < 0 || c >= num_classes) throw std::invalid_argument("balanced selection: predicted class out of range");
        per_class[c].push_back(i);
    }

    std::vector<int> quota(num_classes, m / num_classes);
    int remainder = m % num_classes;
    if (remainder > 0) {
        // Hand the leftover slots to the classes with the most spare candidates.
        std::vector<int> cls(num_classes);
        std::iota(cls.begin(), cls.end(), 0);
        std::sort(cls.begin(), cls.end(), [&](int a, int b) {
            int spare_a = static_cast<int>(per_class[a].size()) - quota[a];
            int spare_b = static_cast<int>(per_class[b].size()) - quota[b];
            if (spare_a != spare_b) return spare_a > spare_b;
            return a < b;
        });
        for (int i = 0; i < remainder; ++i) ++quota[cls[i]];
    }

    std::vector<char> chosen(n, 0);
    std::vector<int> selected;
    selected.reserve(m);
    for (int c = 0; c < num_classes; ++c) {
        int take = std::min<int>(quota[c], static_cast<int>(per_class[c].size()));
        for (int i = 0; i < take; ++i) {
            selected.push_back(per_class[c][i]);
            chosen[per_class[c][i]] = 1;
        }
    }
    // Deficits (classes with too few candidates) fill up globally by rank.
    for (int i : order) {
        if (static_cast<int>(selected.size()) >= m) break;
        if (!chosen[i]) {
            selected.push_back(i);
            chosen[i] = 1;
        }
    }
    return selected;
}

namespace {

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(logits.rows);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < logits.rows; ++i) {
        auto row = logits.row(i);
        int best = 0;
        for (int c = 1; c < logits.cols; ++c)
            if (row[c] > row[best]) best = c;
        out[i] = best;
    }
    return out;
}

std::vector<int> sample_without_replacement(int n, int m, Rng& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < m; ++i) {
        int j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
}

}  // namespace

AcquisitionResult acquire(StrategyKind kind, const Mlp& model, const Matrix& candidate_features,
                          const Matrix& labeled_features, std::span<const int> labeled_labels, int num_classes,
                          int m, Rng& rng, const AcquireOptions& options) {
    const int n = candidate_features.rows;
    if (n < 1) throw std::invalid_argument("acquire: candidate set is empty");
    m = std::min(m, n);
    if (m < 1) throw std::invalid_argument("acquire: m must be >= 1");

    AcquisitionResult result;
    std::vector<int> predicted;

    const auto t0 = std::chrono::steady_clock::now();
    switch (kind) {
        case StrategyKind::random: {
            result.selected = sample_without_replacement(n, m, rng);
            result.scores.assign(n, 0.0);
            break;
        }
        case StrategyKind::entropy: {
            auto fwd = model.forward(candidate_features);
            result.scores = score_entropy(softmax(fwd.logits));
            result.selected = select_top(result.scores, m, SelectDirection::highest_first);
            predicted = argmax_rows(fwd.logits);
            break;
        }
        case StrategyKind::bald: {
            auto passes = mc_dropout_probs(model, candidate_features, options.bald_passes, options.mc_seed);
            result.scores = score_bald(passes);
            result.selected = select_top(result.scores, m, SelectDirection::highest_first);
            auto fwd = model.forward(candidate_features);
            predicted = argmax_rows(fwd.logits);
            break;
        }
        case StrategyKind::coreset: {
            auto cand = model.forward(candidate_features);
            auto labeled = model.forward(labeled_features);
            result.selected = select_coreset_kcenter(cand.embeddings, labeled.embeddings, m);
            result.scores = pairwise_min_distances(cand.embeddings, labeled.embeddings);
            predicted = argmax_rows(cand.logits);
            break;
        }
        case StrategyKind::featuresim:
        case StrategyKind::scal: {
            auto cand = model.forward(candidate_features);
            auto labeled = model.forward(labeled_features);
            FeatureBank bank = FeatureBank::build(labeled.embeddings, labeled_labels);
            predicted = argmax_rows(cand.logits);
            result.scores.resize(n);
            int warnings = 0;
#pragma omp parallel for schedule(static) reduction(+ : warnings)
            for (int i = 0; i < n; ++i) {
                int w = 0;
                result.scores[i] = score_feature_similarity(bank, cand.embeddings.row(i), predicted[i], &w);
                warnings += w;
            }
            result.missing_class_warnings = warnings;
            result.selected = options.balanced_selection
                                  ? select_balanced_per_class(result.scores, predicted, m, num_classes,
                                                              SelectDirection::lowest_first)
                                  : select_top(result.scores, m, SelectDirection::lowest_first);
            break;
        }
        case StrategyKind::dfm: {
            auto cand = model.forward(candidate_features);
            auto labeled = model.forward(labeled_features);
            ClassConditionalPCA pca =
                ClassConditionalPCA::fit(labeled.embeddings, labeled_labels, options.pca_variance_fraction);
            predicted = argmax_rows(cand.logits);
            result.scores.resize(n);
            int warnings = 0;
#pragma omp parallel for schedule(static) reduction(+ : warnings)
            for (int i = 0; i < n; ++i) {
                int w = 0;
                result.scores[i] = score_dfm(pca, cand.embeddings.row(i), predicted[i], &w);
                warnings += w;
            }
            result.missing_class_warnings = warnings;
            result.selected = options.balanced_selection
                                  ? select_balanced_per_class(result.scores, predicted, m, num_classes,
                                                              SelectDirection::highest_first)
                                  : select_top(result.scores, m, SelectDirection::highest_first);
            break;
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    result.query_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();

    if (predicted.empty()) predicted = argmax_rows(model.forward(candidate_features).logits);
    result.per_class_counts.assign(num_classes, 0);
    for (int i : result.selected) {
        if (predicted[i] >= 0 && predicted[i] < num_classes) ++result.per_class_counts[predicted[i]];
    }
    return result;
}

std::vector<double> strategy_ood_scores(StrategyKind kind, const Mlp& model, const Matrix& features,
                                        const Matrix& labeled_features, std::span<const int> labeled_labels,
                                        const AcquireOptions& options, Rng& rng) {
    switch (kind) {
        case StrategyKind::random: {
            std::vector<double> s(features.rows);
            for (double& v : s) v = rng.next_double();
            return s;
        }
        case StrategyKind::entropy: {
            auto fwd = model.forward(features);
            return score_entropy(softmax(fwd.logits));
        }
        case StrategyKind::bald: {
            auto passes = mc_dropout_probs(model, features, options.bald_passes, options.mc_seed);
            return score_bald(passes);
        }
        case StrategyKind::coreset: {
            auto test = model.forward(features);
            auto labeled = model.forward(labeled_features);
            return pairwise_min_distances(test.embeddings, labeled.embeddings);
        }
        case StrategyKind::featuresim:
        case StrategyKind::scal: {
            auto test = model.forward(features);
            auto labeled = model.forward(labeled_features);
            FeatureBank bank = FeatureBank::build(labeled.embeddings, labeled_labels);
            auto predicted = argmax_rows(test.logits);
            std::vector<double> s(features.rows);
#pragma omp parallel for schedule(static)
            for (int i = 0; i < features.rows; ++i)
                s[i] = -score_feature_similarity(bank, test.embeddings.row(i), predicted[i]);
            return s;
        }
        case StrategyKind::dfm: {
            auto test = model.forward(features);
            auto labeled = model.forward(labeled_features);
            ClassConditionalPCA pca =
                ClassConditionalPCA::fit(labeled.embeddings, labeled_labels, options.pca_variance_fraction);
            auto predicted = argmax_rows(test.logits);
            std::vector<double> s(features.rows);
#pragma omp parallel for schedule(static)
            for (int i = 0; i < features.rows; ++i) s[i] = score_dfm(pca, test.embeddings.row(i), predicted[i]);
            return s;
        }
    }
    throw std::logic_error("strategy_ood_scores: unhandled strategy");
}

}  // namespace albench
