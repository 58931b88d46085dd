#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "provsense/core/csr.hpp"
#include "provsense/core/mat.hpp"

namespace provsense {

constexpr std::size_t kNumClasses = 2;  // benign, malicious

struct LabelSplit {
    // 0 benign, 1 malicious; meaningful on masked nodes.
    std::vector<int> label;
    std::vector<std::uint8_t> train_mask;
    std::vector<std::uint8_t> test_mask;

    std::size_t n() const { return label.size(); }
    std::size_t train_count() const;
};

// Labels every node from the malicious index set, then marks `labeled`
// random nodes as training (stratified so both classes appear when
// possible); the rest become test nodes. Throws DegenerateSplit when the
// train set ends up single-class.
LabelSplit make_split(std::size_t n, const std::vector<std::size_t>& malicious,
                      std::size_t labeled, std::uint64_t seed);

enum class TeacherVariant { GCN, SGC };

struct TeacherHyper {
    std::size_t hidden = 64;
    double lr = 0.01;
    double dropout = 0.8;
    double weight_decay = 0.01;
    std::size_t epochs = 20000;
};

struct TeacherParams {
    TeacherVariant variant = TeacherVariant::GCN;
    Mat w0;  // GCN: d x h. SGC: d x C (w1 unused).
    Mat w1;  // GCN: h x C.
    TeacherHyper hyper;

    void save(const std::string& path) const;
    static TeacherParams load(const std::string& path);
};

// Eval-mode forward pass. GCN: softmax(A relu(A X W0) W1). SGC: softmax(A^2 X W0).
Mat teacher_forward(const TeacherParams& p, const Csr& a_hat, const Mat& x);

// Eval-mode cross-entropy loss over train-mask nodes plus L2 weight decay,
// with analytic gradients. Shared by training and the finite-difference test.
struct TeacherGrad {
    double loss;
    Mat gw0;
    Mat gw1;
};
TeacherGrad teacher_loss_grad(const TeacherParams& p, const Csr& a_hat, const Mat& x,
                              const LabelSplit& split,
                              const std::vector<std::uint8_t>* drop_in,
                              const std::vector<std::uint8_t>* drop_hidden);

struct TeacherResult {
    TeacherParams params;
    Mat soft_labels;  // n x C, eval mode
    std::vector<double> loss_per_epoch;
};

TeacherResult train_teacher(TeacherVariant variant, const Csr& a_hat, const Mat& x,
                            const LabelSplit& split, const TeacherHyper& hyper,
                            std::uint64_t seed);

void save_soft_labels(const std::string& path, const Mat& soft);

}  // namespace provsense
