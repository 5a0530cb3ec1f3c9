#include "albench/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "albench/kernels.hpp"

namespace albench {

Eigh jacobi_eigh(Matrix a) {
    if (a.rows != a.cols || a.rows < 1) throw std::invalid_argument("jacobi_eigh: matrix must be square");
    const int d = a.rows;
    Matrix v(d, d);
    for (int i = 0; i < d; ++i) v(i, i) = 1.0;

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };
    double scale = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) scale = std::max(scale, std::abs(a(i, j)));
    const double tol = std::max(scale, 1.0) * 1e-15 * d;

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) <= tol / (d * d)) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < d; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

    Eigh out;
    out.values.resize(d);
    out.vectors = Matrix(d, d);
    for (int r = 0; r < d; ++r) {
        out.values[r] = a(order[r], order[r]);
        for (int k = 0; k < d; ++k) out.vectors(r, k) = v(k, order[r]);
    }
    return out;
}

PcaEntry pca_fit(const Matrix& x, double variance_fraction) {
    if (x.rows < 2) throw std::invalid_argument("pca_fit: need at least 2 samples");
    if (!(variance_fraction > 0.0 && variance_fraction <= 1.0))
        throw std::invalid_argument("pca_fit: variance_fraction must be in (0, 1]");
    const int n = x.rows;
    const int d = x.cols;

    PcaEntry entry;
    entry.mean.assign(d, 0.0);
    for (int i = 0; i < n; ++i) {
        auto row = x.row(i);
        for (int j = 0; j < d; ++j) entry.mean[j] += row[j];
    }
    for (int j = 0; j < d; ++j) entry.mean[j] /= n;

    Matrix cov;
    kernels::covariance(x, entry.mean, cov);

    double mean_sq = 0.0;
    for (int i = 0; i < n; ++i) mean_sq += squared_norm(x.row(i));
    mean_sq /= n;

    Eigh eig = jacobi_eigh(cov);
    double total = 0.0;
    for (double& lambda : eig.values) {
        lambda = std::max(lambda, 0.0);
        total += lambda;
    }

    if (total <= 1e-20 * std::max(1.0, mean_sq)) {
        // All rows (numerically) identical: arbitrary unit basis, flagged.
        entry.zero_variance = true;
        entry.components = Matrix(1, d);
        entry.components(0, 0) = 1.0;
        entry.eigenvalues = {0.0};
        return entry;
    }

    int q = 0;
    double cum = 0.0;
    for (int i = 0; i < d; ++i) {
        cum += eig.values[i];
        ++q;
        if (cum >= variance_fraction * total) break;
    }
    q = std::max(1, std::min(q, d - 1));
    if (d == 1) q = 1;

    entry.components = Matrix(q, d);
    entry.eigenvalues.assign(eig.values.begin(), eig.values.begin() + q);
    for (int r = 0; r < q; ++r)
        for (int k = 0; k < d; ++k) entry.components(r, k) = eig.vectors(r, k);
    return entry;
}

double fre(const PcaEntry& entry, std::span<const double> z) {
    const int d = entry.dim();
    if (static_cast<int>(z.size()) != d) throw std::invalid_argument("fre: dimension mismatch");
    std::vector<double> centered(d);
    for (int j = 0; j < d; ++j) centered[j] = z[j] - entry.mean[j];
    const int q = entry.rank();
    std::vector<double> coeffs(q);
    for (int r = 0; r < q; ++r) coeffs[r] = dot(entry.components.row(r), centered);
    double sq = 0.0;
    for (int j = 0; j < d; ++j) {
        double recon = 0.0;
        for (int r = 0; r < q; ++r) recon += coeffs[r] * entry.components(r, j);
        double resid = centered[j] - recon;
        sq += resid * resid;
    }
    return std::sqrt(sq);
}

ClassConditionalPCA ClassConditionalPCA::fit(const Matrix& features, std::span<const int> labels,
                                             double variance_fraction) {
    if (features.rows != static_cast<int>(labels.size()))
        throw std::invalid_argument("class-conditional pca: label count mismatch");
    ClassConditionalPCA out;
    out.variance_fraction = variance_fraction;
    std::map<int, std::vector<int>> by_class;
    for (int i = 0; i < features.rows; ++i) by_class[labels[i]].push_back(i);
    for (auto& [k, idx] : by_class) {
        if (idx.size() < 2) continue;
        out.classes.emplace(k, pca_fit(features.select_rows(idx), variance_fraction));
    }
    return out;
}

const PcaEntry* ClassConditionalPCA::entry(int k) const {
    auto it = classes.find(k);
    return it == classes.end() ? nullptr : &it->second;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double na = std::sqrt(squared_norm(a));
    double nb = std::sqrt(squared_norm(b));
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
    return dot(a, b) / (na * nb);
}

std::vector<double> pairwise_min_distances(const Matrix& candidates, const Matrix& centers) {
    if (centers.rows < 1) throw std::invalid_argument("pairwise_min_distances: centers must be non-empty");
    if (candidates.cols != centers.cols) throw std::invalid_argument("pairwise_min_distances: dimension mismatch");
    std::vector<double> out = kernels::min_sq_dists(candidates, centers);
    for (double& v : out) v = std::sqrt(v);
    return out;
}

}  // namespace albench
