#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "provsense/core/mat.hpp"
#include "provsense/errors.hpp"

namespace provsense {

// Row-compressed sparse matrix. Column indices within a row are sorted,
// which makes products bitwise deterministic.
struct Csr {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::size_t> offsets;  // size n_rows + 1
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;

    Csr() = default;
    explicit Csr(std::size_t rows, std::size_t columns)
        : n_rows(rows), n_cols(columns), offsets(rows + 1, 0) {}

    std::size_t nnz() const { return cols.size(); }

    // y = this * x
    void matvec(const double* x, double* y) const {
        for (std::size_t i = 0; i < n_rows; ++i) {
            double acc = 0.0;
            for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
                acc += vals[k] * x[cols[k]];
            }
            y[i] = acc;
        }
    }

    // out = this * X for dense row-major X.
    Mat matmul(const Mat& x) const {
        if (x.rows != n_cols) throw ShapeMismatch("csr matmul shape mismatch");
        Mat out(n_rows, x.cols);
        for (std::size_t i = 0; i < n_rows; ++i) {
            double* orow = out.row(i);
            for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
                simd::axpy(vals[k], x.row(cols[k]), orow, x.cols);
            }
        }
        return out;
    }

    double row_sum(std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) s += vals[k];
        return s;
    }
};

// Builds a CSR from (row, col, val) triplets; duplicates are summed.
Csr csr_from_triplets(std::size_t rows, std::size_t columns,
                      std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> trips);

}  // namespace provsense
