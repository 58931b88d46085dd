#include "provsense/simd/kernels.hpp"

#include <algorithm>

#if defined(__x86_64__) || defined(_M_X64)
#define PROVSENSE_X86 1
#include <immintrin.h>
#else
#define PROVSENSE_X86 0
#endif

namespace provsense::simd {

namespace {

std::optional<Backend> g_forced;

// ---- scalar reference kernels ----

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void blend_scalar(double alpha, const double* x, double beta, const double* y,
                  double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void relu_scalar(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

#if PROVSENSE_X86

// ---- AVX2 variants ----

__attribute__((target("avx2,fma")))
double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    double r = lane[0] + lane[1] + lane[2] + lane[3];
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

__attribute__((target("avx2,fma")))
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2")))
void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

__attribute__((target("avx2,fma")))
void blend_avx2(double alpha, const double* x, double beta, const double* y,
                double* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vb = _mm256_set1_pd(beta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        r = _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), r);
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

__attribute__((target("avx2")))
double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    double r = lane[0] + lane[1] + lane[2] + lane[3];
    for (; i < n; ++i) r += x[i];
    return r;
}

__attribute__((target("avx2")))
void relu_avx2(double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

#endif  // PROVSENSE_X86

}  // namespace

bool avx2_available() {
#if PROVSENSE_X86
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() {
    if (g_forced) return *g_forced;
    static const Backend detected =
        avx2_available() ? Backend::Avx2 : Backend::Scalar;
    return detected;
}

void force_backend(std::optional<Backend> b) { g_forced = b; }

double dot(const double* a, const double* b, std::size_t n) {
#if PROVSENSE_X86
    if (active_backend() == Backend::Avx2) return dot_avx2(a, b, n);
#endif
    return dot_scalar(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#if PROVSENSE_X86
    if (active_backend() == Backend::Avx2) return axpy_avx2(alpha, x, y, n);
#endif
    axpy_scalar(alpha, x, y, n);
}

void scale(double alpha, double* x, std::size_t n) {
#if PROVSENSE_X86
    if (active_backend() == Backend::Avx2) return scale_avx2(alpha, x, n);
#endif
    scale_scalar(alpha, x, n);
}

void blend(double alpha, const double* x, double beta, const double* y,
           double* out, std::size_t n) {
#if PROVSENSE_X86
    if (active_backend() == Backend::Avx2)
        return blend_avx2(alpha, x, beta, y, out, n);
#endif
    blend_scalar(alpha, x, beta, y, out, n);
}

double sum(const double* x, std::size_t n) {
#if PROVSENSE_X86
    if (active_backend() == Backend::Avx2) return sum_avx2(x, n);
#endif
    return sum_scalar(x, n);
}

void relu(double* x, std::size_t n) {
#if PROVSENSE_X86
    if (active_backend() == Backend::Avx2) return relu_avx2(x, n);
#endif
    relu_scalar(x, n);
}

}  // namespace provsense::simd
