#include "albench/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace albench {

LossGrad cross_entropy_with_grad(const Matrix& logits, std::span<const int> labels) {
    const int n = logits.rows;
    const int k = logits.cols;
    if (n != static_cast<int>(labels.size())) throw std::invalid_argument("cross_entropy: length mismatch");
    if (n == 0) throw std::invalid_argument("cross_entropy: empty batch");
    LossGrad out;
    out.grad = Matrix(n, k);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw std::invalid_argument("cross_entropy: label out of range");
        auto row = logits.row(i);
        double m = row[0];
        for (int c = 1; c < k; ++c) m = std::max(m, row[c]);
        double sum = 0.0;
        for (int c = 0; c < k; ++c) sum += std::exp(row[c] - m);
        double lse = m + std::log(sum);
        total += lse - row[labels[i]];
        auto grow = out.grad.row(i);
        for (int c = 0; c < k; ++c) {
            double p = std::exp(row[c] - lse);
            grow[c] = (p - (labels[i] == c ? 1.0 : 0.0)) / n;
        }
    }
    out.loss = total / n;
    return out;
}

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
    return cross_entropy_with_grad(logits, labels).loss;
}

SupconResult supcon_loss(const ContrastiveBatch& batch) {
    const Matrix& z = batch.embeddings;
    const int n = z.rows;
    if (n < 2) throw std::invalid_argument("supcon_loss: need at least 2 views in the batch");
    if (n != static_cast<int>(batch.labels.size())) throw std::invalid_argument("supcon_loss: label count mismatch");
    if (!(batch.temperature > 0.0)) throw std::invalid_argument("supcon_loss: temperature must be > 0");
    const double inv_t = 1.0 / batch.temperature;

    // Similarity logits s_ij = z_i . z_j / T.
    Matrix sim(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sim(i, j) = dot(z.row(i), z.row(j)) * inv_t;

    SupconResult out;
    Matrix g(n, n);  // d loss / d sim
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        int num_pos = 0;
        for (int j = 0; j < n; ++j)
            if (j != i && batch.labels[j] == batch.labels[i]) ++num_pos;
        if (num_pos == 0) continue;
        ++out.counted_anchors;

        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
            if (j != i) m = std::max(m, sim(i, j));
        double denom = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) denom += std::exp(sim(i, j) - m);
        double log_denom = m + std::log(denom);

        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (batch.labels[j] == batch.labels[i]) {
                total += (log_denom - sim(i, j)) / num_pos;
                g(i, j) -= 1.0 / num_pos;
            }
            g(i, j) += std::exp(sim(i, j) - log_denom);
        }
    }

    out.grad = Matrix(n, z.cols);
    if (out.counted_anchors == 0) {
        out.loss = 0.0;
        return out;
    }
    out.loss = total / out.counted_anchors;

    // grad_z = (G + G^T) Z / (T * counted)
    const double scale = inv_t / out.counted_anchors;
    for (int i = 0; i < n; ++i) {
        auto grow = out.grad.row(i);
        for (int j = 0; j < n; ++j) {
            double w = (g(i, j) + g(j, i)) * scale;
            if (w == 0.0) continue;
            auto zj = z.row(j);
            for (int c = 0; c < z.cols; ++c) grow[c] += w * zj[c];
        }
    }
    return out;
}

Matrix make_two_view_inputs(const Matrix& x, double jitter_sigma, Rng& rng) {
    if (jitter_sigma < 0.0) throw std::invalid_argument("two-view batch: jitter sigma must be >= 0");
    Matrix out(2 * x.rows, x.cols);
    std::copy(x.data.begin(), x.data.end(), out.data.begin());
    for (int i = 0; i < x.rows; ++i) {
        auto src = x.row(i);
        auto dst = out.row(x.rows + i);
        for (int j = 0; j < x.cols; ++j)
            dst[j] = src[j] + (jitter_sigma > 0.0 ? jitter_sigma * rng.next_gaussian() : 0.0);
    }
    return out;
}

std::vector<int> duplicate_labels(std::span<const int> labels) {
    std::vector<int> out(labels.begin(), labels.end());
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

}  // namespace albench
