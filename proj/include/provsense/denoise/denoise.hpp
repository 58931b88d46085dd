#pragma once

#include <cstddef>

#include "provsense/core/csr.hpp"
#include "provsense/core/mat.hpp"

namespace provsense {

struct DenoiseConfig {
    double gamma = 1.0;
    double cg_tol = 1e-6;
    std::size_t cg_max_iter = 1000;
};

// Solves (I + gamma L) x = x0 column by column with Jacobi-preconditioned
// conjugate gradient. Reads L only; never forms a dense inverse.
Mat denoise_signals(const Csr& laplacian, const Mat& x0, const DenoiseConfig& cfg);

}  // namespace provsense
