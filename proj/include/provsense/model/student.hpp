#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "provsense/core/csr.hpp"
#include "provsense/core/mat.hpp"
#include "provsense/model/teacher.hpp"

namespace provsense {

struct StudentHyper {
    std::size_t hidden = 16;
    std::size_t k_steps = 5;
    double lr = 0.01;
    double weight_decay = 1e-3;
    double dropout = 0.2;
    std::size_t epochs = 2000;
    std::size_t patience = 100;
};

// Lightweight student: a two-layer MLP over node features blended per node
// with K steps of jump-back label propagation. alpha and the per-node betas
// live as logits so unconstrained optimization keeps them in (0, 1).
struct StudentParams {
    Mat w1, w2;               // d x h, h x C
    std::vector<double> b1;   // h
    std::vector<double> b2;   // C
    std::vector<double> beta_logits;  // per node
    double alpha_logit = 0.0;
    std::size_t k_steps = 5;
    // Column normalization statistics of the training signals; detection
    // standardizes incoming signals with these rather than its own batch.
    std::vector<double> feat_mean, feat_sd;

    double alpha() const;
    double beta(std::size_t v) const;

    void save(const std::string& path) const;
    static StudentParams load(const std::string& path);
};

// f_FT(v) = softmax(W2 relu(W1 x_v + b1) + b2), optionally with an inverted
// dropout mask on the hidden layer.
Mat ft_forward(const StudentParams& p, const Mat& x,
               const std::vector<std::uint8_t>* drop_hidden = nullptr,
               double dropout = 0.0);

// Labeled train nodes one-hot, everything else uniform.
Mat init_labels(const LabelSplit& split, std::size_t n, std::size_t c = kNumClasses);

// f'(v) = (1-alpha) f(v) + alpha * mean of neighbor rows; isolated nodes
// keep their row.
Mat prl_step(const Mat& f, const Csr& undirected, double alpha);

// init_labels -> K prl steps -> beta blend with ft_forward.
Mat student_forward(const StudentParams& p, const Csr& undirected, const Mat& x,
                    const LabelSplit& split);

// Sum over test nodes of || f_thr(v) - f_std(v) ||_2 and its gradient with
// respect to every student parameter (dropout off).
struct StudentGrad {
    double objective;
    Mat gw1, gw2;
    std::vector<double> gb1, gb2, gbeta;
    double galpha;
};
StudentGrad student_objective_grad(const StudentParams& p, const Csr& undirected,
                                   const Mat& x, const LabelSplit& split,
                                   const Mat& teacher_soft,
                                   const std::vector<std::uint8_t>* drop_hidden = nullptr,
                                   double dropout = 0.0);

struct DistillResult {
    StudentParams params;
    std::vector<double> objective_per_epoch;
};

// Adam on the distillation objective; returns the best parameters seen.
// Ablation switches: ft_only pins beta at 1, prl_only pins beta at 0.
DistillResult distill(const Mat& teacher_soft, const Csr& undirected, const Mat& x,
                      const LabelSplit& split, const StudentHyper& hyper,
                      std::uint64_t seed, bool ft_only = false, bool prl_only = false);

}  // namespace provsense
