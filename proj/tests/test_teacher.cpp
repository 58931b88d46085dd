#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "provsense/errors.hpp"
#include "provsense/graph/provgraph.hpp"
#include "provsense/ingest/scenario.hpp"
#include "provsense/model/teacher.hpp"

using namespace provsense;

namespace {

// 5-node path graph propagation operator and random signals.
struct SmallInstance {
    Csr a_hat;
    Mat x;
    LabelSplit split;
};

SmallInstance make_instance(std::uint64_t seed, std::size_t d = 3) {
    SmallInstance in;
    const std::size_t n = 5;
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> trips;
    auto edge = [&](std::uint32_t a, std::uint32_t b, double w) {
        trips.emplace_back(a, b, w);
        trips.emplace_back(b, a, w);
    };
    // Normalized-adjacency-like symmetric operator; exact normalization is
    // irrelevant for gradient checking.
    edge(0, 1, 0.5);
    edge(1, 2, 0.4);
    edge(2, 3, 0.5);
    edge(3, 4, 0.6);
    for (std::uint32_t i = 0; i < n; ++i) trips.emplace_back(i, i, 0.5);
    in.a_hat = csr_from_triplets(n, n, std::move(trips));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    in.x = Mat(n, d);
    for (double& v : in.x.a) v = dist(rng);

    in.split.label = {0, 1, 0, 1, 0};
    in.split.train_mask = {1, 1, 1, 0, 0};
    in.split.test_mask = {0, 0, 0, 1, 1};
    return in;
}

TeacherParams random_params(TeacherVariant variant, std::size_t d, std::size_t h,
                            std::uint64_t seed) {
    TeacherParams p;
    p.variant = variant;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 0.5);
    if (variant == TeacherVariant::GCN) {
        p.w0 = Mat(d, h);
        p.w1 = Mat(h, kNumClasses);
        for (double& v : p.w1.a) v = dist(rng);
    } else {
        p.w0 = Mat(d, kNumClasses);
    }
    for (double& v : p.w0.a) v = dist(rng);
    return p;
}

double loss_at(const TeacherParams& p, const SmallInstance& in) {
    return teacher_loss_grad(p, in.a_hat, in.x, in.split, nullptr, nullptr).loss;
}

void gradcheck(TeacherVariant variant) {
    SmallInstance in = make_instance(11);
    TeacherParams p = random_params(variant, in.x.cols, 4, 21);
    TeacherGrad g = teacher_loss_grad(p, in.a_hat, in.x, in.split, nullptr, nullptr);
    const double eps = 1e-5;
    auto check_mat = [&](Mat TeacherParams::*field, const Mat& grad) {
        for (std::size_t i = 0; i < grad.a.size(); ++i) {
            TeacherParams pp = p;
            (pp.*field).a[i] += eps;
            double up = loss_at(pp, in);
            (pp.*field).a[i] -= 2 * eps;
            double down = loss_at(pp, in);
            double fd = (up - down) / (2 * eps);
            double denom = std::max({1e-8, std::fabs(fd), std::fabs(grad.a[i])});
            CHECK(std::fabs(fd - grad.a[i]) / denom <= 1e-4);
        }
    };
    check_mat(&TeacherParams::w0, g.gw0);
    if (variant == TeacherVariant::GCN) check_mat(&TeacherParams::w1, g.gw1);
}

}  // namespace

TEST_CASE("zero weights give uniform soft labels") {
    SmallInstance in = make_instance(1);
    TeacherParams p;
    p.variant = TeacherVariant::GCN;
    p.w0 = Mat(in.x.cols, 4);
    p.w1 = Mat(4, kNumClasses);
    Mat soft = teacher_forward(p, in.a_hat, in.x);
    for (std::size_t v = 0; v < soft.rows; ++v) {
        CHECK(soft.at(v, 0) == doctest::Approx(0.5));
        CHECK(soft.at(v, 1) == doctest::Approx(0.5));
    }
}

TEST_CASE("sgc scalar closed form on an isolated node") {
    Csr a_hat = csr_from_triplets(1, 1, {{0, 0, 1.0}});
    Mat x(1, 1);
    x.at(0, 0) = 1.0;
    TeacherParams p;
    p.variant = TeacherVariant::SGC;
    p.w0 = Mat(1, kNumClasses);
    const double a = 0.8;
    p.w0.at(0, 1) = a;
    Mat soft = teacher_forward(p, a_hat, x);
    double z = std::exp(0.0) + std::exp(a);
    CHECK(soft.at(0, 0) == doctest::Approx(std::exp(0.0) / z));
    CHECK(soft.at(0, 1) == doctest::Approx(std::exp(a) / z));
}

TEST_CASE("soft label rows are normalized for random weights") {
    SmallInstance in = make_instance(2);
    for (TeacherVariant variant : {TeacherVariant::GCN, TeacherVariant::SGC}) {
        TeacherParams p = random_params(variant, in.x.cols, 4, 7);
        Mat soft = teacher_forward(p, in.a_hat, in.x);
        for (std::size_t v = 0; v < soft.rows; ++v) {
            double s = 0;
            for (std::size_t c = 0; c < soft.cols; ++c) {
                CHECK(soft.at(v, c) >= 0.0);
                s += soft.at(v, c);
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("gcn gradients match finite differences") { gradcheck(TeacherVariant::GCN); }

TEST_CASE("sgc gradients match finite differences") { gradcheck(TeacherVariant::SGC); }

TEST_CASE("training reduces the loss and is deterministic") {
    ScenarioConfig sc;
    sc.n_benign = 50;
    sc.seed = 3;
    Scenario s = generate_cadets_scenario(sc);
    ProvGraph g = ProvGraph::build(s.events);
    std::vector<std::size_t> mal;
    for (const auto& k : s.ground_truth)
        mal.push_back(static_cast<std::size_t>(g.index_of(k)));
    LabelSplit split = make_split(g.n(), mal, g.n() * 3 / 10, 3);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 1.0);
    Mat x(g.n(), 8);
    for (double& v : x.a) v = dist(rng);
    Csr a_hat = g.normalized_adjacency();

    TeacherHyper hp;
    hp.epochs = 60;
    TeacherResult a = train_teacher(TeacherVariant::GCN, a_hat, x, split, hp, 5);
    TeacherResult b = train_teacher(TeacherVariant::GCN, a_hat, x, split, hp, 5);
    REQUIRE(a.loss_per_epoch.size() == 60);
    CHECK(a.loss_per_epoch[50] < a.loss_per_epoch[0]);
    for (std::size_t i = 0; i < a.soft_labels.a.size(); ++i)
        CHECK(a.soft_labels.a[i] == b.soft_labels.a[i]);
}

TEST_CASE("trained teacher beats the majority-class predictor") {
    ScenarioConfig sc;
    sc.n_benign = 60;
    sc.seed = 1;
    Scenario s = generate_cadets_scenario(sc);
    ProvGraph g = ProvGraph::build(s.events);
    std::vector<std::size_t> mal;
    for (const auto& k : s.ground_truth)
        mal.push_back(static_cast<std::size_t>(g.index_of(k)));
    LabelSplit split = make_split(g.n(), mal, g.n() * 3 / 10, 1);

    // Class-separable signals stand in for embeddings to keep this test fast.
    std::mt19937_64 rng(9);
    std::normal_distribution<double> dist(0.0, 0.3);
    std::set<std::size_t> malset(mal.begin(), mal.end());
    Mat x(g.n(), 4);
    for (std::size_t v = 0; v < g.n(); ++v)
        for (std::size_t j = 0; j < 4; ++j)
            x.at(v, j) = dist(rng) + (malset.count(v) ? 1.0 : -1.0);

    TeacherHyper hp;
    hp.epochs = 400;
    hp.dropout = 0.2;
    TeacherResult tr =
        train_teacher(TeacherVariant::GCN, g.normalized_adjacency(), x, split, hp, 1);

    std::size_t correct = 0, test_total = 0, majority = 0;
    for (std::size_t v = 0; v < g.n(); ++v) {
        if (!split.test_mask[v]) continue;
        ++test_total;
        int truth = malset.count(v) ? 1 : 0;
        if (truth == 0) ++majority;  // benign dominates
        int pred = tr.soft_labels.at(v, 1) > 0.5 ? 1 : 0;
        if (pred == truth) ++correct;
    }
    REQUIRE(test_total > 0);
    CHECK(correct > majority);
}

TEST_CASE("single-class training sets are rejected") {
    // No malicious nodes at all: every draw is benign.
    CHECK_THROWS_AS(make_split(10, {}, 4, 0), DegenerateSplit);
}

TEST_CASE("teacher checkpoints round-trip") {
    TeacherParams p = random_params(TeacherVariant::GCN, 3, 4, 33);
    p.hyper.epochs = 123;
    std::string path = "/tmp/provsense_test_teacher.bin";
    p.save(path);
    TeacherParams q = TeacherParams::load(path);
    CHECK(q.variant == p.variant);
    CHECK(q.hyper.epochs == 123);
    REQUIRE(q.w0.a.size() == p.w0.a.size());
    for (std::size_t i = 0; i < p.w0.a.size(); ++i) CHECK(q.w0.a[i] == p.w0.a[i]);
    for (std::size_t i = 0; i < p.w1.a.size(); ++i) CHECK(q.w1.a[i] == p.w1.a[i]);
}
