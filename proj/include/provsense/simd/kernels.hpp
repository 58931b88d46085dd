#pragma once

#include <cstddef>
#include <optional>

// Dense double-precision kernels behind the numeric hot loops (CG solves,
// skip-gram updates, GNN matmuls, label propagation). A scalar reference
// implementation always exists; an AVX2+FMA variant is selected at runtime
// when the CPU supports it. force_backend() pins one variant for
// equivalence tests.

namespace provsense::simd {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
void force_backend(std::optional<Backend> b);
bool avx2_available();

// a . b
double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// x *= alpha
void scale(double alpha, double* x, std::size_t n);

// out = alpha * x + beta * y
void blend(double alpha, const double* x, double beta, const double* y,
           double* out, std::size_t n);

double sum(const double* x, std::size_t n);

// x = max(x, 0)
void relu(double* x, std::size_t n);

}  // namespace provsense::simd
