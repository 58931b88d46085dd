#include "provsense/model/teacher.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "provsense/core/binio.hpp"
#include "provsense/errors.hpp"

namespace provsense {

namespace {

constexpr std::uint32_t kTeacherMagic = 0x43545350;  // "PSTC"
constexpr std::uint32_t kVersion = 1;

Mat glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Mat m(rows, cols);
    for (double& v : m.a) v = dist(rng);
    return m;
}

// Inverted dropout: kept entries scaled by 1/(1-p).
Mat apply_dropout(const Mat& x, const std::vector<std::uint8_t>* mask, double p) {
    if (mask == nullptr || p <= 0.0) return x;
    Mat out = x;
    const double inv_keep = 1.0 / (1.0 - p);
    for (std::size_t i = 0; i < out.a.size(); ++i)
        out.a[i] = (*mask)[i] ? out.a[i] * inv_keep : 0.0;
    return out;
}

}  // namespace

std::size_t LabelSplit::train_count() const {
    return static_cast<std::size_t>(
        std::count(train_mask.begin(), train_mask.end(), std::uint8_t{1}));
}

LabelSplit make_split(std::size_t n, const std::vector<std::size_t>& malicious,
                      std::size_t labeled, std::uint64_t seed) {
    LabelSplit s;
    s.label.assign(n, 0);
    for (std::size_t v : malicious) s.label[v] = 1;
    s.train_mask.assign(n, 0);
    s.test_mask.assign(n, 0);

    labeled = std::min(labeled, n);

    // Proportionally stratified sampling: the train set carries each class at
    // its population rate (at least one node per present class). Uniform
    // sampling leaves zero or one malicious example in most seeds at
    // realistic contamination rates, which is not a usable training signal.
    std::vector<std::size_t> pool0, pool1;
    for (std::size_t v = 0; v < n; ++v) (s.label[v] ? pool1 : pool0).push_back(v);
    std::mt19937_64 rng(seed);
    std::shuffle(pool0.begin(), pool0.end(), rng);
    std::shuffle(pool1.begin(), pool1.end(), rng);

    double frac1 = static_cast<double>(pool1.size()) / static_cast<double>(n);
    std::size_t want1 = static_cast<std::size_t>(
        std::lround(frac1 * static_cast<double>(labeled)));
    if (labeled > 0 && !pool1.empty()) want1 = std::max<std::size_t>(want1, 1);
    want1 = std::min({want1, pool1.size(), labeled});
    std::size_t want0 = std::min(labeled - want1, pool0.size());

    std::vector<std::size_t> train(pool1.begin(), pool1.begin() + want1);
    train.insert(train.end(), pool0.begin(), pool0.begin() + want0);
    if (labeled > 0 && (want0 == 0 || want1 == 0))
        throw DegenerateSplit("training set covers a single class");

    for (std::size_t v : train) s.train_mask[v] = 1;
    for (std::size_t v = 0; v < n; ++v)
        if (!s.train_mask[v]) s.test_mask[v] = 1;
    return s;
}

Mat teacher_forward(const TeacherParams& p, const Csr& a_hat, const Mat& x) {
    if (x.cols != p.w0.rows) throw ShapeMismatch("teacher input dim mismatch");
    Mat z;
    if (p.variant == TeacherVariant::GCN) {
        Mat h = matmul(a_hat.matmul(x), p.w0);
        simd::relu(h.a.data(), h.a.size());
        z = matmul(a_hat.matmul(h), p.w1);
    } else {
        z = matmul(a_hat.matmul(a_hat.matmul(x)), p.w0);
    }
    if (!z.all_finite()) throw NonFinite("teacher forward produced non-finite values");
    softmax_rows(z);
    return z;
}

TeacherGrad teacher_loss_grad(const TeacherParams& p, const Csr& a_hat, const Mat& x,
                              const LabelSplit& split,
                              const std::vector<std::uint8_t>* drop_in,
                              const std::vector<std::uint8_t>* drop_hidden) {
    const double wd = p.hyper.weight_decay;
    const double dp = p.hyper.dropout;
    const std::size_t n = x.rows;

    // Class-balanced cross entropy: each class contributes equally to the
    // loss regardless of its training frequency. Malicious nodes are a few
    // percent of any realistic trace; unweighted CE collapses to the
    // majority class there.
    std::array<double, kNumClasses> class_count{};
    for (std::size_t v = 0; v < n; ++v)
        if (split.train_mask[v]) class_count[split.label[v]] += 1.0;
    std::array<double, kNumClasses> node_weight{};
    for (std::size_t c = 0; c < kNumClasses; ++c)
        node_weight[c] = class_count[c] > 0.0
            ? 1.0 / (static_cast<double>(kNumClasses) * class_count[c]) : 0.0;

    TeacherGrad out;
    Mat z, dz;
    Mat ax;  // A * (dropped) X
    if (p.variant == TeacherVariant::GCN) {
        Mat xd = apply_dropout(x, drop_in, dp);
        ax = a_hat.matmul(xd);
        Mat s = matmul(ax, p.w0);
        Mat h = s;
        simd::relu(h.a.data(), h.a.size());
        Mat hd = apply_dropout(h, drop_hidden, dp);
        Mat ah = a_hat.matmul(hd);
        z = matmul(ah, p.w1);
        softmax_rows(z);

        dz = Mat(n, kNumClasses);
        double loss = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (!split.train_mask[v]) continue;
            int y = split.label[v];
            double wv = node_weight[y];
            loss -= wv * std::log(std::max(z.at(v, y), 1e-300));
            for (std::size_t c = 0; c < kNumClasses; ++c)
                dz.at(v, c) = (z.at(v, c) - (static_cast<int>(c) == y ? 1.0 : 0.0)) * wv;
        }
        out.loss = loss;

        out.gw1 = matmul_at_b(ah, dz);
        Mat dhd = matmul_a_bt(a_hat.matmul(dz), p.w1);  // A dz W1^T
        // Undo dropout and relu.
        if (drop_hidden && dp > 0.0) {
            const double inv_keep = 1.0 / (1.0 - dp);
            for (std::size_t i = 0; i < dhd.a.size(); ++i)
                dhd.a[i] = (*drop_hidden)[i] ? dhd.a[i] * inv_keep : 0.0;
        }
        for (std::size_t i = 0; i < dhd.a.size(); ++i)
            if (s.a[i] <= 0.0) dhd.a[i] = 0.0;
        out.gw0 = matmul_at_b(ax, dhd);
    } else {
        Mat xd = apply_dropout(x, drop_in, dp);
        ax = a_hat.matmul(a_hat.matmul(xd));
        z = matmul(ax, p.w0);
        softmax_rows(z);

        dz = Mat(n, kNumClasses);
        double loss = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (!split.train_mask[v]) continue;
            int y = split.label[v];
            double wv = node_weight[y];
            loss -= wv * std::log(std::max(z.at(v, y), 1e-300));
            for (std::size_t c = 0; c < kNumClasses; ++c)
                dz.at(v, c) = (z.at(v, c) - (static_cast<int>(c) == y ? 1.0 : 0.0)) * wv;
        }
        out.loss = loss;
        out.gw0 = matmul_at_b(ax, dz);
        out.gw1 = Mat(p.w1.rows, p.w1.cols);
    }

    // L2 weight decay.
    double reg = 0.0;
    for (std::size_t i = 0; i < p.w0.a.size(); ++i) {
        reg += p.w0.a[i] * p.w0.a[i];
        out.gw0.a[i] += wd * p.w0.a[i];
    }
    for (std::size_t i = 0; i < p.w1.a.size(); ++i) {
        reg += p.w1.a[i] * p.w1.a[i];
        out.gw1.a[i] += wd * p.w1.a[i];
    }
    out.loss += 0.5 * wd * reg;
    return out;
}

TeacherResult train_teacher(TeacherVariant variant, const Csr& a_hat, const Mat& x,
                            const LabelSplit& split, const TeacherHyper& hyper,
                            std::uint64_t seed) {
    if (split.train_count() == 0) throw DegenerateSplit("empty training set");
    bool has0 = false, has1 = false;
    for (std::size_t v = 0; v < split.n(); ++v) {
        if (!split.train_mask[v]) continue;
        (split.label[v] == 1 ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw DegenerateSplit("training set covers a single class");

    std::mt19937_64 rng(seed);
    TeacherParams p;
    p.variant = variant;
    p.hyper = hyper;
    const std::size_t d = x.cols;
    if (variant == TeacherVariant::GCN) {
        p.w0 = glorot(d, hyper.hidden, rng);
        p.w1 = glorot(hyper.hidden, kNumClasses, rng);
    } else {
        p.w0 = glorot(d, kNumClasses, rng);
        p.w1 = Mat(0, 0);
        p.hyper.dropout = 0.0;  // SGC variant trains without dropout
    }

    const bool use_dropout =
        variant == TeacherVariant::GCN && p.hyper.dropout > 0.0;
    std::vector<std::uint8_t> m_in, m_hidden;
    std::bernoulli_distribution keep(1.0 - p.hyper.dropout);

    TeacherResult result;
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        const std::vector<std::uint8_t>*mi = nullptr, *mh = nullptr;
        if (use_dropout) {
            m_in.resize(x.a.size());
            m_hidden.resize(x.rows * hyper.hidden);
            for (auto& b : m_in) b = keep(rng);
            for (auto& b : m_hidden) b = keep(rng);
            mi = &m_in;
            mh = &m_hidden;
        }
        TeacherGrad g = teacher_loss_grad(p, a_hat, x, split, mi, mh);
        if (!std::isfinite(g.loss)) throw NonFinite("teacher training diverged");
        result.loss_per_epoch.push_back(g.loss);
        simd::axpy(-hyper.lr, g.gw0.a.data(), p.w0.a.data(), p.w0.a.size());
        if (p.w1.a.size())
            simd::axpy(-hyper.lr, g.gw1.a.data(), p.w1.a.data(), p.w1.a.size());
    }

    result.soft_labels = teacher_forward(p, a_hat, x);
    result.params = std::move(p);
    return result;
}

void TeacherParams::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    binio::put_u32(os, kTeacherMagic);
    binio::put_u32(os, kVersion);
    binio::put_u32(os, variant == TeacherVariant::GCN ? 0 : 1);
    binio::put_u64(os, hyper.hidden);
    binio::put_f64(os, hyper.lr);
    binio::put_f64(os, hyper.dropout);
    binio::put_f64(os, hyper.weight_decay);
    binio::put_u64(os, hyper.epochs);
    binio::put_u64(os, w0.rows);
    binio::put_u64(os, w0.cols);
    binio::put_f64s(os, w0.a);
    binio::put_u64(os, w1.rows);
    binio::put_u64(os, w1.cols);
    binio::put_f64s(os, w1.a);
}

TeacherParams TeacherParams::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    binio::check_magic(is, kTeacherMagic, "teacher");
    if (binio::get_u32(is) != kVersion) throw DataError("unsupported teacher version");
    TeacherParams p;
    p.variant = binio::get_u32(is) == 0 ? TeacherVariant::GCN : TeacherVariant::SGC;
    p.hyper.hidden = binio::get_u64(is);
    p.hyper.lr = binio::get_f64(is);
    p.hyper.dropout = binio::get_f64(is);
    p.hyper.weight_decay = binio::get_f64(is);
    p.hyper.epochs = binio::get_u64(is);
    std::uint64_t r = binio::get_u64(is), c = binio::get_u64(is);
    p.w0 = Mat(r, c);
    binio::get_f64s(is, p.w0.a, r * c);
    r = binio::get_u64(is);
    c = binio::get_u64(is);
    p.w1 = Mat(r, c);
    binio::get_f64s(is, p.w1.a, r * c);
    return p;
}

void save_soft_labels(const std::string& path, const Mat& soft) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    os.precision(17);
    for (std::size_t v = 0; v < soft.rows; ++v) {
        for (std::size_t c = 0; c < soft.cols; ++c)
            os << (c ? " " : "") << soft.at(v, c);
        os << '\n';
    }
}

}  // namespace provsense
