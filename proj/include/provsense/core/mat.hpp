#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "provsense/errors.hpp"
#include "provsense/simd/kernels.hpp"

namespace provsense {

// Dense row-major matrix of doubles.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    bool all_finite() const {
        for (double v : a)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// out = A * B
inline Mat matmul(const Mat& A, const Mat& B) {
    if (A.cols != B.rows) throw ShapeMismatch("matmul shape mismatch");
    Mat out(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* arow = A.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < A.cols; ++k) {
            if (arow[k] != 0.0) simd::axpy(arow[k], B.row(k), orow, B.cols);
        }
    }
    return out;
}

// out = A^T * B  (A is m x n, B is m x p, out n x p)
inline Mat matmul_at_b(const Mat& A, const Mat& B) {
    if (A.rows != B.rows) throw ShapeMismatch("matmul_at_b shape mismatch");
    Mat out(A.cols, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* arow = A.row(i);
        const double* brow = B.row(i);
        for (std::size_t k = 0; k < A.cols; ++k) {
            if (arow[k] != 0.0) simd::axpy(arow[k], brow, out.row(k), B.cols);
        }
    }
    return out;
}

// out = A * B^T  (A is m x n, B is p x n, out m x p)
inline Mat matmul_a_bt(const Mat& A, const Mat& B) {
    if (A.cols != B.cols) throw ShapeMismatch("matmul_a_bt shape mismatch");
    Mat out(A.rows, B.rows);
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = 0; j < B.rows; ++j) {
            out.at(i, j) = simd::dot(A.row(i), B.row(j), A.cols);
        }
    }
    return out;
}

// In-place per-column z-scoring. Skip-gram vectors on small corpora share a
// large common direction that makes rows nearly collinear; removing the
// column mean and scale restores class separability for the models downstream.
// Constant columns become zero. Optionally reports the per-column mean and
// standard deviation so they can be reapplied to later data (deployment
// normalization must use training statistics, not the incoming batch's).
inline void standardize_columns(Mat& m, std::vector<double>* mean_out = nullptr,
                                std::vector<double>* sd_out = nullptr) {
    if (mean_out) mean_out->assign(m.cols, 0.0);
    if (sd_out) sd_out->assign(m.cols, 0.0);
    if (m.rows == 0) return;
    for (std::size_t j = 0; j < m.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) mean += m.at(i, j);
        mean /= static_cast<double>(m.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            double d = m.at(i, j) - mean;
            var += d * d;
        }
        double sd = std::sqrt(var / static_cast<double>(m.rows));
        double inv = sd > 1e-12 ? 1.0 / sd : 0.0;
        for (std::size_t i = 0; i < m.rows; ++i)
            m.at(i, j) = (m.at(i, j) - mean) * inv;
        if (mean_out) (*mean_out)[j] = mean;
        if (sd_out) (*sd_out)[j] = sd;
    }
}

// Applies a previously computed column standardization.
inline void apply_standardization(Mat& m, const std::vector<double>& mean,
                                  const std::vector<double>& sd) {
    for (std::size_t j = 0; j < m.cols; ++j) {
        double inv = sd[j] > 1e-12 ? 1.0 / sd[j] : 0.0;
        for (std::size_t i = 0; i < m.rows; ++i)
            m.at(i, j) = (m.at(i, j) - mean[j]) * inv;
    }
}

// In-place row softmax.
inline void softmax_rows(Mat& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* r = m.row(i);
        double mx = r[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, r[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            r[j] = std::exp(r[j] - mx);
            z += r[j];
        }
        for (std::size_t j = 0; j < m.cols; ++j) r[j] /= z;
    }
}

}  // namespace provsense
