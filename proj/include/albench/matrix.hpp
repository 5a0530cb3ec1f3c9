#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace albench {

// Dense row-major matrix of doubles. Small and dumb on purpose; all heavy
// loops live in kernels.cpp.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[static_cast<size_t>(r) * cols + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[static_cast<size_t>(r) * cols + c];
    }

    std::span<double> row(int r) {
        assert(r >= 0 && r < rows);
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }
    std::span<const double> row(int r) const {
        assert(r >= 0 && r < rows);
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }

    bool empty() const { return rows == 0 || cols == 0; }

    bool operator==(const Matrix& other) const = default;

    // Gather a sub-matrix by row index.
    Matrix select_rows(std::span<const int> idx) const {
        Matrix out(static_cast<int>(idx.size()), cols);
        for (size_t i = 0; i < idx.size(); ++i) {
            auto src = row(idx[i]);
            std::copy(src.begin(), src.end(), out.row(static_cast<int>(i)).begin());
        }
        return out;
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace albench
