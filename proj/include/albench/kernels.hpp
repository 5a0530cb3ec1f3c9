#pragma once

#include <span>
#include <vector>

#include "albench/matrix.hpp"

namespace albench::kernels {

// Hot inner loops, parallelized with OpenMP across independent output
// elements. Each output element is computed in a fixed serial order, so
// results are bit-identical to the serial reference for any thread count.
// The `serial` namespace keeps the plain-loop reference implementations
// used by the equivalence tests and the kernel benchmark.

// out = A * B^T (+ bias per output column). A is n x k, B is m x k.
void matmul_nt(const Matrix& a, const Matrix& b, const double* bias, Matrix& out);

// Row-wise stable softmax.
void softmax_rows(const Matrix& logits, Matrix& probs);

// Shannon entropy of each row in nats, 0*log(0) treated as 0.
std::vector<double> entropy_rows(const Matrix& probs);

// BALD mutual information per sample: H(mean_p) - mean_p(H).
// Each pass is an n x k probability matrix.
std::vector<double> bald_scores(const std::vector<Matrix>& passes);

// Squared Euclidean distance from each candidate row to its nearest center.
std::vector<double> min_sq_dists(const Matrix& candidates, const Matrix& centers);

// Sample covariance (1/(n-1) normalization) of X given its column mean.
void covariance(const Matrix& x, std::span<const double> mean, Matrix& cov);

int max_threads();

namespace serial {
void matmul_nt(const Matrix& a, const Matrix& b, const double* bias, Matrix& out);
void softmax_rows(const Matrix& logits, Matrix& probs);
std::vector<double> entropy_rows(const Matrix& probs);
std::vector<double> bald_scores(const std::vector<Matrix>& passes);
std::vector<double> min_sq_dists(const Matrix& candidates, const Matrix& centers);
void covariance(const Matrix& x, std::span<const double> mean, Matrix& cov);
}  // namespace serial

}  // namespace albench::kernels
