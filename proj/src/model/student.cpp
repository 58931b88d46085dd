#include "provsense/model/student.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "provsense/core/binio.hpp"
#include "provsense/errors.hpp"

namespace provsense {

namespace {

constexpr std::uint32_t kStudentMagic = 0x44535350;  // "PSSD"
constexpr std::uint32_t kVersion = 1;
constexpr double kNormEps = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Mat m(rows, cols);
    for (double& v : m.a) v = dist(rng);
    return m;
}

// Row-wise neighbor average; isolated nodes keep their own row.
Mat neighbor_average(const Mat& f, const Csr& u) {
    Mat out(f.rows, f.cols);
    for (std::size_t v = 0; v < f.rows; ++v) {
        std::size_t deg = u.offsets[v + 1] - u.offsets[v];
        if (deg == 0) {
            std::copy(f.row(v), f.row(v) + f.cols, out.row(v));
            continue;
        }
        // Sum first, divide once: constant rows stay exact fixed points
        // (0.5k / k is correctly rounded to 0.5; k copies of 1/k are not).
        for (std::size_t k = u.offsets[v]; k < u.offsets[v + 1]; ++k)
            simd::axpy(1.0, f.row(u.cols[k]), out.row(v), f.cols);
        double* orow = out.row(v);
        for (std::size_t j = 0; j < f.cols; ++j)
            orow[j] /= static_cast<double>(deg);
    }
    return out;
}

}  // namespace

double StudentParams::alpha() const { return sigmoid(alpha_logit); }
double StudentParams::beta(std::size_t v) const { return sigmoid(beta_logits[v]); }

Mat ft_forward(const StudentParams& p, const Mat& x,
               const std::vector<std::uint8_t>* drop_hidden, double dropout) {
    if (x.cols != p.w1.rows) throw ShapeMismatch("student input dim mismatch");
    Mat h = matmul(x, p.w1);
    for (std::size_t v = 0; v < h.rows; ++v)
        simd::axpy(1.0, p.b1.data(), h.row(v), h.cols);
    simd::relu(h.a.data(), h.a.size());
    if (drop_hidden && dropout > 0.0) {
        const double inv_keep = 1.0 / (1.0 - dropout);
        for (std::size_t i = 0; i < h.a.size(); ++i)
            h.a[i] = (*drop_hidden)[i] ? h.a[i] * inv_keep : 0.0;
    }
    Mat z = matmul(h, p.w2);
    for (std::size_t v = 0; v < z.rows; ++v)
        simd::axpy(1.0, p.b2.data(), z.row(v), z.cols);
    softmax_rows(z);
    return z;
}

Mat init_labels(const LabelSplit& split, std::size_t n, std::size_t c) {
    Mat f(n, c);
    const double uniform = 1.0 / static_cast<double>(c);
    for (std::size_t v = 0; v < n; ++v) {
        if (v < split.n() && split.train_mask[v]) {
            f.at(v, static_cast<std::size_t>(split.label[v])) = 1.0;
        } else {
            for (std::size_t j = 0; j < c; ++j) f.at(v, j) = uniform;
        }
    }
    return f;
}

Mat prl_step(const Mat& f, const Csr& u, double alpha) {
    if (f.rows != u.n_rows) throw ShapeMismatch("prl_step shape mismatch");
    Mat avg = neighbor_average(f, u);
    Mat out(f.rows, f.cols);
    simd::blend(1.0 - alpha, f.a.data(), alpha, avg.a.data(), out.a.data(), out.a.size());
    return out;
}

Mat student_forward(const StudentParams& p, const Csr& u, const Mat& x,
                    const LabelSplit& split) {
    Mat f = init_labels(split, x.rows, kNumClasses);
    const double a = p.alpha();
    for (std::size_t k = 0; k < p.k_steps; ++k) f = prl_step(f, u, a);
    Mat fft = ft_forward(p, x);
    Mat out(x.rows, kNumClasses);
    for (std::size_t v = 0; v < x.rows; ++v) {
        double b = p.beta(v);
        simd::blend(b, fft.row(v), 1.0 - b, f.row(v), out.row(v), kNumClasses);
    }
    return out;
}

StudentGrad student_objective_grad(const StudentParams& p, const Csr& u,
                                   const Mat& x, const LabelSplit& split,
                                   const Mat& teacher_soft,
                                   const std::vector<std::uint8_t>* drop_hidden,
                                   double dropout) {
    const std::size_t n = x.rows;
    const std::size_t C = kNumClasses;
    if (teacher_soft.rows != n || teacher_soft.cols != C)
        throw ShapeMismatch("teacher soft labels shape mismatch");

    const double a = p.alpha();

    // Propagation with a forward-mode tangent for d f_PRL / d alpha.
    Mat f = init_labels(split, n, C);
    Mat t(n, C);
    for (std::size_t k = 0; k < p.k_steps; ++k) {
        Mat fa = neighbor_average(f, u);
        Mat ta = neighbor_average(t, u);
        Mat fn(n, C), tn(n, C);
        simd::blend(1.0 - a, f.a.data(), a, fa.a.data(), fn.a.data(), fn.a.size());
        // t' = (1-a) t + a P t + (P f - f)
        simd::blend(1.0 - a, t.a.data(), a, ta.a.data(), tn.a.data(), tn.a.size());
        simd::axpy(1.0, fa.a.data(), tn.a.data(), tn.a.size());
        simd::axpy(-1.0, f.a.data(), tn.a.data(), tn.a.size());
        f = std::move(fn);
        t = std::move(tn);
    }

    // FT forward with cached intermediates.
    Mat hpre = matmul(x, p.w1);
    for (std::size_t v = 0; v < n; ++v) simd::axpy(1.0, p.b1.data(), hpre.row(v), hpre.cols);
    Mat h = hpre;
    simd::relu(h.a.data(), h.a.size());
    Mat hd = h;
    if (drop_hidden && dropout > 0.0) {
        const double inv_keep = 1.0 / (1.0 - dropout);
        for (std::size_t i = 0; i < hd.a.size(); ++i)
            hd.a[i] = (*drop_hidden)[i] ? hd.a[i] * inv_keep : 0.0;
    }
    Mat fft = matmul(hd, p.w2);
    for (std::size_t v = 0; v < n; ++v) simd::axpy(1.0, p.b2.data(), fft.row(v), fft.cols);
    softmax_rows(fft);

    StudentGrad g;
    g.gw1 = Mat(p.w1.rows, p.w1.cols);
    g.gw2 = Mat(p.w2.rows, p.w2.cols);
    g.gb1.assign(p.b1.size(), 0.0);
    g.gb2.assign(p.b2.size(), 0.0);
    g.gbeta.assign(n, 0.0);
    g.galpha = 0.0;
    g.objective = 0.0;

    Mat dfft(n, C);  // upstream gradient into the FT probabilities
    double galpha_raw = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        const double b = p.beta(v);
        double r[kNumClasses];
        double norm2 = kNormEps;
        for (std::size_t c = 0; c < C; ++c) {
            r[c] = b * fft.at(v, c) + (1.0 - b) * f.at(v, c) - teacher_soft.at(v, c);
            norm2 += r[c] * r[c];
        }
        if (!split.test_mask[v]) continue;
        const double norm = std::sqrt(norm2);
        g.objective += norm;
        double dot_ft = 0.0, dot_t = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            double gc = r[c] / norm;
            dfft.at(v, c) = b * gc;
            dot_ft += gc * (fft.at(v, c) - f.at(v, c));
            dot_t += gc * t.at(v, c);
        }
        g.gbeta[v] = dot_ft * b * (1.0 - b);  // sigmoid chain rule
        galpha_raw += (1.0 - b) * dot_t;
    }
    g.galpha = galpha_raw * a * (1.0 - a);

    // Softmax backward into logits.
    Mat dy(n, C);
    for (std::size_t v = 0; v < n; ++v) {
        double dot = 0.0;
        for (std::size_t c = 0; c < C; ++c) dot += fft.at(v, c) * dfft.at(v, c);
        for (std::size_t c = 0; c < C; ++c)
            dy.at(v, c) = fft.at(v, c) * (dfft.at(v, c) - dot);
    }

    g.gw2 = matmul_at_b(hd, dy);
    for (std::size_t v = 0; v < n; ++v)
        simd::axpy(1.0, dy.row(v), g.gb2.data(), C);

    Mat dhd = matmul_a_bt(dy, p.w2);
    if (drop_hidden && dropout > 0.0) {
        const double inv_keep = 1.0 / (1.0 - dropout);
        for (std::size_t i = 0; i < dhd.a.size(); ++i)
            dhd.a[i] = (*drop_hidden)[i] ? dhd.a[i] * inv_keep : 0.0;
    }
    for (std::size_t i = 0; i < dhd.a.size(); ++i)
        if (hpre.a[i] <= 0.0) dhd.a[i] = 0.0;
    g.gw1 = matmul_at_b(x, dhd);
    for (std::size_t v = 0; v < n; ++v)
        simd::axpy(1.0, dhd.row(v), g.gb1.data(), g.gb1.size());
    return g;
}

namespace {

struct Adam {
    std::vector<double> m, v;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t t = 0;

    explicit Adam(std::size_t size) : m(size, 0.0), v(size, 0.0) {}

    void step(double* params, const double* grad, std::size_t size, double lr) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < size; ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

}  // namespace

DistillResult distill(const Mat& teacher_soft, const Csr& u, const Mat& x,
                      const LabelSplit& split, const StudentHyper& hyper,
                      std::uint64_t seed, bool ft_only, bool prl_only) {
    if (ft_only && prl_only) throw InvalidConfig("cannot disable both FT and PRL");
    const std::size_t n = x.rows;
    std::mt19937_64 rng(seed);

    StudentParams p;
    p.w1 = glorot(x.cols, hyper.hidden, rng);
    p.w2 = glorot(hyper.hidden, kNumClasses, rng);
    p.b1.assign(hyper.hidden, 0.0);
    p.b2.assign(kNumClasses, 0.0);
    p.k_steps = hyper.k_steps;
    p.alpha_logit = 0.0;
    // Pinned far into the sigmoid tails for the ablations.
    p.beta_logits.assign(n, ft_only ? 40.0 : prl_only ? -40.0 : 0.0);
    const bool train_beta = !ft_only && !prl_only;
    // With beta pinned high the propagation branch is inert and alpha has no
    // effect on the output, so leave it frozen in that ablation.
    const bool train_alpha = !ft_only;

    Adam opt_w1(p.w1.a.size()), opt_w2(p.w2.a.size());
    Adam opt_b1(p.b1.size()), opt_b2(p.b2.size());
    Adam opt_beta(n), opt_alpha(1);

    std::bernoulli_distribution keep(1.0 - hyper.dropout);
    std::vector<std::uint8_t> mask;

    DistillResult result;
    StudentParams best = p;
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        const std::vector<std::uint8_t>* mh = nullptr;
        if (hyper.dropout > 0.0) {
            mask.resize(n * hyper.hidden);
            for (auto& b : mask) b = keep(rng);
            mh = &mask;
        }
        StudentGrad g =
            student_objective_grad(p, u, x, split, teacher_soft, mh, hyper.dropout);
        if (!std::isfinite(g.objective)) throw NonFinite("distillation diverged");
        result.objective_per_epoch.push_back(g.objective);

        // Eval-mode objective decides the best checkpoint.
        StudentGrad eval = g;
        if (mh) eval = student_objective_grad(p, u, x, split, teacher_soft);
        if (eval.objective < best_obj - 1e-12) {
            best_obj = eval.objective;
            best = p;
            since_best = 0;
        } else if (++since_best >= hyper.patience) {
            break;
        }

        // Coupled L2 decay on the MLP weights.
        simd::axpy(hyper.weight_decay, p.w1.a.data(), g.gw1.a.data(), g.gw1.a.size());
        simd::axpy(hyper.weight_decay, p.w2.a.data(), g.gw2.a.data(), g.gw2.a.size());

        opt_w1.step(p.w1.a.data(), g.gw1.a.data(), p.w1.a.size(), hyper.lr);
        opt_w2.step(p.w2.a.data(), g.gw2.a.data(), p.w2.a.size(), hyper.lr);
        opt_b1.step(p.b1.data(), g.gb1.data(), p.b1.size(), hyper.lr);
        opt_b2.step(p.b2.data(), g.gb2.data(), p.b2.size(), hyper.lr);
        if (train_beta)
            opt_beta.step(p.beta_logits.data(), g.gbeta.data(), n, hyper.lr);
        if (train_alpha)
            opt_alpha.step(&p.alpha_logit, &g.galpha, 1, hyper.lr);
    }

    result.params = std::move(best);
    return result;
}

void StudentParams::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    binio::put_u32(os, kStudentMagic);
    binio::put_u32(os, kVersion);
    binio::put_u64(os, w1.rows);
    binio::put_u64(os, w1.cols);
    binio::put_u64(os, w2.cols);
    binio::put_u64(os, k_steps);
    binio::put_f64(os, alpha_logit);
    binio::put_f64s(os, w1.a);
    binio::put_f64s(os, w2.a);
    binio::put_f64s(os, b1);
    binio::put_f64s(os, b2);
    binio::put_u64(os, beta_logits.size());
    binio::put_f64s(os, beta_logits);
    binio::put_u64(os, feat_mean.size());
    binio::put_f64s(os, feat_mean);
    binio::put_f64s(os, feat_sd);
}

StudentParams StudentParams::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    binio::check_magic(is, kStudentMagic, "student");
    if (binio::get_u32(is) != kVersion) throw DataError("unsupported student version");
    StudentParams p;
    std::uint64_t d = binio::get_u64(is);
    std::uint64_t h = binio::get_u64(is);
    std::uint64_t c = binio::get_u64(is);
    p.k_steps = binio::get_u64(is);
    p.alpha_logit = binio::get_f64(is);
    p.w1 = Mat(d, h);
    binio::get_f64s(is, p.w1.a, d * h);
    p.w2 = Mat(h, c);
    binio::get_f64s(is, p.w2.a, h * c);
    binio::get_f64s(is, p.b1, h);
    binio::get_f64s(is, p.b2, c);
    std::uint64_t n = binio::get_u64(is);
    binio::get_f64s(is, p.beta_logits, n);
    std::uint64_t nf = binio::get_u64(is);
    binio::get_f64s(is, p.feat_mean, nf);
    binio::get_f64s(is, p.feat_sd, nf);
    return p;
}

}  // namespace provsense
