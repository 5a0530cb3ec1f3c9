// Compares the serial reference kernels against the OpenMP variants and
// prints throughput plus speedup for each. The parallel kernels assign whole
// output elements to threads, so both paths must produce identical bits;
// this also re-checks that here on the benchmark inputs.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "albench/kernels.hpp"
#include "albench/matrix.hpp"
#include "albench/rng.hpp"

using namespace albench;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.next_gaussian();
    return m;
}

Matrix random_prob_rows(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        auto row = m.row(i);
        double sum = 0.0;
        for (double& v : row) {
            v = rng.next_double() + 1e-3;
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
    return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-22s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   bitwise %s\n", name.c_str(), serial_ms,
                parallel_ms, serial_ms / parallel_ms, identical ? "equal" : "DIFFERENT");
}

}  // namespace

int main() {
    Rng rng(20240917);
    const int reps = 5;
    std::printf("threads: %d\n", kernels::max_threads());

    {
        Matrix a = random_matrix(4000, 64, rng);
        Matrix b = random_matrix(128, 64, rng);
        std::vector<double> bias(128, 0.1);
        Matrix out_s(a.rows, b.rows), out_p(a.rows, b.rows);
        double ts = time_ms([&] { kernels::serial::matmul_nt(a, b, bias.data(), out_s); }, reps);
        double tp = time_ms([&] { kernels::matmul_nt(a, b, bias.data(), out_p); }, reps);
        report("matmul_nt 4000x64x128", ts, tp, out_s == out_p);
    }
    {
        Matrix logits = random_matrix(20000, 10, rng);
        Matrix out_s, out_p;
        double ts = time_ms([&] { kernels::serial::softmax_rows(logits, out_s); }, reps);
        double tp = time_ms([&] { kernels::softmax_rows(logits, out_p); }, reps);
        report("softmax_rows 20000x10", ts, tp, out_s == out_p);
    }
    {
        Matrix probs = random_prob_rows(20000, 10, rng);
        std::vector<double> s, p;
        double ts = time_ms([&] { s = kernels::serial::entropy_rows(probs); }, reps);
        double tp = time_ms([&] { p = kernels::entropy_rows(probs); }, reps);
        report("entropy_rows 20000x10", ts, tp, s == p);
    }
    {
        std::vector<Matrix> passes;
        for (int t = 0; t < 50; ++t) passes.push_back(random_prob_rows(2000, 10, rng));
        std::vector<double> s, p;
        double ts = time_ms([&] { s = kernels::serial::bald_scores(passes); }, reps);
        double tp = time_ms([&] { p = kernels::bald_scores(passes); }, reps);
        report("bald_scores 50x2000x10", ts, tp, s == p);
    }
    {
        Matrix cand = random_matrix(5000, 32, rng);
        Matrix centers = random_matrix(500, 32, rng);
        std::vector<double> s, p;
        double ts = time_ms([&] { s = kernels::serial::min_sq_dists(cand, centers); }, reps);
        double tp = time_ms([&] { p = kernels::min_sq_dists(cand, centers); }, reps);
        report("min_sq_dists 5000x500", ts, tp, s == p);
    }
    {
        Matrix x = random_matrix(5000, 48, rng);
        std::vector<double> mean(48, 0.0);
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < x.cols; ++j) mean[j] += x(i, j) / x.rows;
        Matrix cov_s, cov_p;
        double ts = time_ms([&] { kernels::serial::covariance(x, mean, cov_s); }, reps);
        double tp = time_ms([&] { kernels::covariance(x, mean, cov_p); }, reps);
        report("covariance 5000x48", ts, tp, cov_s == cov_p);
    }
    return 0;
}
