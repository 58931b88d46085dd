#include "provsense/denoise/denoise.hpp"

#include <cmath>
#include <vector>

#include "provsense/errors.hpp"
#include "provsense/simd/kernels.hpp"

namespace provsense {

namespace {

// y = (I + gamma L) x
void apply_operator(const Csr& lap, double gamma, const std::vector<double>& x,
                    std::vector<double>& y) {
    lap.matvec(x.data(), y.data());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + gamma * y[i];
}

}  // namespace

Mat denoise_signals(const Csr& lap, const Mat& x0, const DenoiseConfig& cfg) {
    if (lap.n_rows != lap.n_cols || lap.n_rows != x0.rows)
        throw ShapeMismatch("laplacian does not match signal rows");
    if (cfg.gamma < 0.0) throw InvalidConfig("gamma must be >= 0");
    if (cfg.cg_tol <= 0.0) throw InvalidConfig("cg_tol must be > 0");
    if (!x0.all_finite()) throw NonFinite("raw signals contain non-finite values");

    const std::size_t n = x0.rows;
    Mat out(n, x0.cols);
    if (cfg.gamma == 0.0) {
        out = x0;
        return out;
    }

    // Jacobi preconditioner: diag(I + gamma L).
    std::vector<double> inv_diag(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t k = lap.offsets[i]; k < lap.offsets[i + 1]; ++k) {
            if (lap.cols[k] == i) d = lap.vals[k];
        }
        inv_diag[i] = 1.0 / (1.0 + cfg.gamma * d);
    }

    std::vector<double> x(n), r(n), z(n), p(n), ap(n), b(n);
    for (std::size_t c = 0; c < x0.cols; ++c) {
        for (std::size_t i = 0; i < n; ++i) b[i] = x0.at(i, c);
        double bnorm = std::sqrt(simd::dot(b.data(), b.data(), n));
        if (bnorm == 0.0) {
            for (std::size_t i = 0; i < n; ++i) out.at(i, c) = 0.0;
            continue;
        }

        // x = 0 start, r = b.
        std::fill(x.begin(), x.end(), 0.0);
        r = b;
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = simd::dot(r.data(), z.data(), n);
        double rnorm = bnorm;
        bool converged = false;

        for (std::size_t it = 0; it < cfg.cg_max_iter && !converged; ++it) {
            apply_operator(lap, cfg.gamma, p, ap);
            double pap = simd::dot(p.data(), ap.data(), n);
            if (pap <= 0.0) break;  // operator is SPD; only roundoff gets here
            double alpha = rz / pap;
            simd::axpy(alpha, p.data(), x.data(), n);
            simd::axpy(-alpha, ap.data(), r.data(), n);
            rnorm = std::sqrt(simd::dot(r.data(), r.data(), n));
            if (rnorm <= cfg.cg_tol * bnorm) {
                converged = true;
                break;
            }
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            double rz_next = simd::dot(r.data(), z.data(), n);
            simd::blend(1.0, z.data(), rz_next / rz, p.data(), p.data(), n);
            rz = rz_next;
        }
        if (!converged && rnorm > cfg.cg_tol * bnorm)
            throw NoConvergence(c, rnorm / bnorm);
        for (std::size_t i = 0; i < n; ++i) out.at(i, c) = x[i];
    }
    return out;
}

}  // namespace provsense
