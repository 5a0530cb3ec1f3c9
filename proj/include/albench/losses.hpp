#pragma once

#include <span>
#include <vector>

#include "albench/matrix.hpp"
#include "albench/rng.hpp"

namespace albench {

struct LossGrad {
    double loss = 0.0;
    Matrix grad;  // same shape as the input it differentiates
};

// Mean negative log softmax probability of the true class.
// grad is with respect to the logits: (softmax - onehot) / n.
LossGrad cross_entropy_with_grad(const Matrix& logits, std::span<const int> labels);
double cross_entropy(const Matrix& logits, std::span<const int> labels);

// Two-view batch for the supervised contrastive loss. Row i and row i+n are
// the two views of source sample i.
struct ContrastiveBatch {
    Matrix embeddings;  // 2n x e
    std::vector<int> labels;
    double temperature = 0.1;
};

struct SupconResult {
    double loss = 0.0;
    Matrix grad;  // d loss / d embeddings
    int counted_anchors = 0;
};

// Eq-style supervised contrastive loss: for each anchor, positives are all
// other items with the same label, the denominator runs over everything but
// the anchor. Anchors without positives are skipped; the result is the mean
// over counted anchors (0 if none).
SupconResult supcon_loss(const ContrastiveBatch& batch);

// [X; X + sigma*noise] stacked row-wise, with labels duplicated to match.
Matrix make_two_view_inputs(const Matrix& x, double jitter_sigma, Rng& rng);
std::vector<int> duplicate_labels(std::span<const int> labels);

}  // namespace albench
