#include "albench/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace albench::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

inline void matmul_nt_row(const Matrix& a, const Matrix& b, const double* bias, Matrix& out, int i) {
    const double* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
    double* orow = out.data.data() + static_cast<size_t>(i) * out.cols;
    for (int j = 0; j < b.rows; ++j) {
        const double* brow = b.data.data() + static_cast<size_t>(j) * b.cols;
        double s = bias ? bias[j] : 0.0;
        for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
        orow[j] = s;
    }
}

inline void softmax_row(const Matrix& logits, Matrix& probs, int i) {
    auto in = logits.row(i);
    auto out = probs.row(i);
    double m = in[0];
    for (size_t k = 1; k < in.size(); ++k) m = std::max(m, in[k]);
    double sum = 0.0;
    for (size_t k = 0; k < in.size(); ++k) {
        out[k] = std::exp(in[k] - m);
        sum += out[k];
    }
    for (size_t k = 0; k < in.size(); ++k) out[k] /= sum;
}

inline double entropy_row(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

inline double bald_sample(const std::vector<Matrix>& passes, int i, int k, std::vector<double>& mean_buf) {
    const int p = static_cast<int>(passes.size());
    std::fill(mean_buf.begin(), mean_buf.end(), 0.0);
    double mean_entropy = 0.0;
    for (int t = 0; t < p; ++t) {
        auto row = passes[t].row(i);
        mean_entropy += entropy_row(row);
        for (int c = 0; c < k; ++c) mean_buf[c] += row[c];
    }
    for (int c = 0; c < k; ++c) mean_buf[c] /= p;
    mean_entropy /= p;
    return entropy_row(std::span<const double>(mean_buf.data(), k)) - mean_entropy;
}

inline double min_sq_dist_one(const Matrix& candidates, const Matrix& centers, int i) {
    auto c = candidates.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < centers.rows; ++j) {
        auto z = centers.row(j);
        double d = 0.0;
        for (size_t k = 0; k < c.size(); ++k) {
            double t = c[k] - z[k];
            d += t * t;
        }
        best = std::min(best, d);
    }
    return best;
}

inline double cov_entry(const Matrix& x, std::span<const double> mean, int a, int b) {
    double s = 0.0;
    for (int r = 0; r < x.rows; ++r) {
        auto row = x.row(r);
        s += (row[a] - mean[a]) * (row[b] - mean[b]);
    }
    return s / (x.rows - 1);
}

void check_matmul_shapes(const Matrix& a, const Matrix& b, const Matrix& out) {
    if (a.cols != b.cols || out.rows != a.rows || out.cols != b.rows)
        throw std::invalid_argument("matmul_nt: shape mismatch");
}

}  // namespace

void matmul_nt(const Matrix& a, const Matrix& b, const double* bias, Matrix& out) {
    check_matmul_shapes(a, b, out);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) matmul_nt_row(a, b, bias, out, i);
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
    probs = Matrix(logits.rows, logits.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < logits.rows; ++i) softmax_row(logits, probs, i);
}

std::vector<double> entropy_rows(const Matrix& probs) {
    std::vector<double> out(probs.rows);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < probs.rows; ++i) out[i] = entropy_row(probs.row(i));
    return out;
}

std::vector<double> bald_scores(const std::vector<Matrix>& passes) {
    if (passes.empty()) return {};
    const int n = passes[0].rows;
    const int k = passes[0].cols;
    std::vector<double> out(n);
#pragma omp parallel
    {
        std::vector<double> mean_buf(k);
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) out[i] = bald_sample(passes, i, k, mean_buf);
    }
    return out;
}

std::vector<double> min_sq_dists(const Matrix& candidates, const Matrix& centers) {
    std::vector<double> out(candidates.rows);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < candidates.rows; ++i) out[i] = min_sq_dist_one(candidates, centers, i);
    return out;
}

void covariance(const Matrix& x, std::span<const double> mean, Matrix& cov) {
    const int d = x.cols;
    cov = Matrix(d, d);
    // Upper triangle as a flat loop so OpenMP can split it evenly.
    const int entries = d * (d + 1) / 2;
#pragma omp parallel for schedule(static)
    for (int e = 0; e < entries; ++e) {
        int a = 0;
        int rem = e;
        while (rem >= d - a) {
            rem -= d - a;
            ++a;
        }
        int b = a + rem;
        double v = cov_entry(x, mean, a, b);
        cov(a, b) = v;
        cov(b, a) = v;
    }
}

namespace serial {

void matmul_nt(const Matrix& a, const Matrix& b, const double* bias, Matrix& out) {
    check_matmul_shapes(a, b, out);
    for (int i = 0; i < a.rows; ++i) matmul_nt_row(a, b, bias, out, i);
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
    probs = Matrix(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) softmax_row(logits, probs, i);
}

std::vector<double> entropy_rows(const Matrix& probs) {
    std::vector<double> out(probs.rows);
    for (int i = 0; i < probs.rows; ++i) out[i] = entropy_row(probs.row(i));
    return out;
}

std::vector<double> bald_scores(const std::vector<Matrix>& passes) {
    if (passes.empty()) return {};
    const int n = passes[0].rows;
    const int k = passes[0].cols;
    std::vector<double> out(n);
    std::vector<double> mean_buf(k);
    for (int i = 0; i < n; ++i) out[i] = bald_sample(passes, i, k, mean_buf);
    return out;
}

std::vector<double> min_sq_dists(const Matrix& candidates, const Matrix& centers) {
    std::vector<double> out(candidates.rows);
    for (int i = 0; i < candidates.rows; ++i) out[i] = min_sq_dist_one(candidates, centers, i);
    return out;
}

void covariance(const Matrix& x, std::span<const double> mean, Matrix& cov) {
    const int d = x.cols;
    cov = Matrix(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            double v = cov_entry(x, mean, a, b);
            cov(a, b) = v;
            cov(b, a) = v;
        }
}

}  // namespace serial

}  // namespace albench::kernels
