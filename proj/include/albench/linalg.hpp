#pragma once

#include <map>
#include <span>
#include <vector>

#include "albench/matrix.hpp"

namespace albench {

// Symmetric eigendecomposition, eigenvalues descending, eigenvectors as rows.
struct Eigh {
    std::vector<double> values;
    Matrix vectors;  // d x d, row i is the eigenvector for values[i]
};
Eigh jacobi_eigh(Matrix sym);

// One class's PCA transform: mean, top-q principal directions (rows), and
// the retained eigenvalues. zero_variance flags degenerate training data.
struct PcaEntry {
    std::vector<double> mean;
    Matrix components;  // q x d, orthonormal rows
    std::vector<double> eigenvalues;
    bool zero_variance = false;

    int dim() const { return components.cols; }
    int rank() const { return components.rows; }
};

// Fits mean + principal subspace keeping the smallest q with cumulative
// explained variance >= variance_fraction, capped at d-1 so the
// reconstruction error cannot be identically zero.
PcaEntry pca_fit(const Matrix& x, double variance_fraction);

// Residual norm of z after projecting (z - mean) onto the subspace.
double fre(const PcaEntry& entry, std::span<const double> z);

struct ClassConditionalPCA {
    std::map<int, PcaEntry> classes;
    double variance_fraction = 0.95;

    // Classes with fewer than 2 samples get no entry.
    static ClassConditionalPCA fit(const Matrix& features, std::span<const int> labels, double variance_fraction);
    const PcaEntry* entry(int k) const;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Euclidean distance from each candidate to its nearest center.
std::vector<double> pairwise_min_distances(const Matrix& candidates, const Matrix& centers);

}  // namespace albench
