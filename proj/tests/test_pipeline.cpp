#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "provsense/errors.hpp"
#include "provsense/ingest/scenario.hpp"
#include "provsense/pipeline/pipeline.hpp"

using namespace provsense;

namespace {

// Small, fast configuration: the unit tests exercise plumbing, not accuracy.
PipelineConfig small_config(std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.scenario_benign = 40;
    cfg.embed.dim = 8;
    cfg.embed.epochs = 2;
    cfg.teacher.epochs = 50;
    cfg.student.epochs = 50;
    return cfg;
}

}  // namespace

TEST_CASE("config serialization round-trips every field") {
    PipelineConfig cfg = small_config(9);
    cfg.denoise.gamma = 2.5;
    cfg.labeled_nodes = 17;
    cfg.tau = 0.42;
    cfg.teacher_variant = TeacherVariant::SGC;
    cfg.denoise_enabled = false;
    cfg.reconstruct.lambda = 3.0;
    PipelineConfig back = PipelineConfig::parse(cfg.serialize());
    CHECK(back.serialize() == cfg.serialize());
    CHECK(back.denoise.gamma == cfg.denoise.gamma);
    CHECK(back.labeled_nodes == cfg.labeled_nodes);
    CHECK(back.tau == cfg.tau);
    CHECK(back.teacher_variant == TeacherVariant::SGC);
    CHECK_FALSE(back.denoise_enabled);
    CHECK(back.reconstruct.lambda == 3.0);
}

TEST_CASE("config hash is stable and sensitive to changes") {
    PipelineConfig a = small_config(1);
    PipelineConfig b = small_config(1);
    CHECK(a.hash() == b.hash());
    b.denoise.gamma = 7.0;
    CHECK(a.hash() != b.hash());
}

TEST_CASE("disabling both student branches is rejected") {
    PipelineConfig cfg = small_config(1);
    cfg.ft_enabled = false;
    cfg.prl_enabled = false;
    CHECK_THROWS_AS(run_pipeline(cfg), InvalidConfig);
    CHECK_THROWS_AS(PipelineConfig::parse(cfg.serialize()), InvalidConfig);
}

TEST_CASE("pipeline runs are deterministic under a fixed config") {
    PipelineConfig cfg = small_config(4);
    PipelineResult a = run_pipeline(cfg);
    PipelineResult b = run_pipeline(cfg);
    REQUIRE(a.report.scores.size() == b.report.scores.size());
    for (std::size_t v = 0; v < a.report.scores.size(); ++v)
        CHECK(a.report.scores[v] == b.report.scores[v]);
    CHECK(a.report.flagged == b.report.flagged);
    CHECK(a.partition.assignment == b.partition.assignment);
}

TEST_CASE("denoise toggle bypasses the smoothing stage only") {
    PipelineConfig cfg = small_config(5);
    cfg.denoise_enabled = false;
    PipelineResult r = run_pipeline(cfg);
    REQUIRE(r.signals.a.size() == r.signals_raw.a.size());
    for (std::size_t i = 0; i < r.signals.a.size(); ++i)
        CHECK(r.signals.a[i] == r.signals_raw.a[i]);

    PipelineConfig on = small_config(5);
    PipelineResult rd = run_pipeline(on);
    bool any_diff = false;
    for (std::size_t i = 0; i < rd.signals.a.size(); ++i)
        if (rd.signals.a[i] != rd.signals_raw.a[i]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("pipeline result is internally consistent") {
    PipelineConfig cfg = small_config(6);
    PipelineResult r = run_pipeline(cfg);
    CHECK(r.graph.n() > 0);
    CHECK(r.report.scores.size() == r.graph.n());
    CHECK(r.malicious_nodes.size() == 7);  // scripted chain size
    CHECK(r.report.has_metrics);
    CHECK(r.student.feat_mean.size() == cfg.embed.dim);
    CHECK(r.student.feat_sd.size() == cfg.embed.dim);
    CHECK(r.partition.assignment.size() == r.graph.n());
    CHECK(!r.stage_seconds.empty());
}

TEST_CASE("detection mode reproduces training-run scores on the same events") {
    PipelineConfig cfg = small_config(7);
    PipelineResult r = run_pipeline(cfg);

    ScenarioConfig sc;
    sc.n_benign = cfg.scenario_benign;
    sc.seed = cfg.seed;
    Scenario s = generate_cadets_scenario(sc);

    ProvGraph g;
    DetectionReport d = detect_events(cfg, s.events, r.embedding, r.student,
                                      r.split, r.graph.node_keys(), &g);
    REQUIRE(g.n() == r.graph.n());
    for (std::size_t v = 0; v < g.n(); ++v) {
        std::int64_t orig = r.graph.index_of(g.key(v));
        REQUIRE(orig >= 0);
        CHECK(d.scores[v] ==
              doctest::Approx(r.report.scores[static_cast<std::size_t>(orig)])
                  .epsilon(1e-9));
    }
    CHECK(d.flagged.size() == r.report.flagged.size());
}

TEST_CASE("detection standardizes with training statistics for new nodes") {
    PipelineConfig cfg = small_config(8);
    PipelineResult r = run_pipeline(cfg);
    ScenarioConfig sc;
    sc.n_benign = cfg.scenario_benign;
    sc.seed = cfg.seed;
    Scenario s = generate_cadets_scenario(sc);
    Scenario pert = apply_mimicry(s, 50, cfg.seed + 1);
    ProvGraph g;
    DetectionReport d = detect_events(cfg, pert.events, r.embedding, r.student,
                                      r.split, r.graph.node_keys(), &g);
    CHECK(d.scores.size() == g.n());
    for (double v : d.scores) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("mimicry sweep emits one point per count") {
    PipelineConfig cfg = small_config(2);
    cfg.scenario_benign = 30;
    auto curve = mimicry_sweep(cfg, {0, 20, 40});
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].false_events == 0);
    CHECK(curve[2].false_events == 40);
    for (const MimicryPoint& pt : curve) {
        CHECK(pt.mean_malicious_score >= 0.0);
        CHECK(pt.mean_malicious_score <= 1.0);
    }
    CHECK_THROWS_AS(mimicry_sweep(cfg, {40, 0}), InvalidConfig);
}

TEST_CASE("artifacts and manifest land in the output directory") {
    namespace fs = std::filesystem;
    PipelineConfig cfg = small_config(3);
    cfg.out_dir = "/tmp/provsense_test_run";
    fs::remove_all(cfg.out_dir);
    run_pipeline(cfg);
    for (const char* name :
         {"events.jsonl", "events.labels", "graph.edges", "graph.nodes",
          "embedding.bin", "signals_raw.bin", "signals.bin", "teacher.bin",
          "teacher_soft.txt", "student.bin", "report.txt", "communities.txt",
          "paths.txt", "flagged.dot", "manifest.txt", "config.txt"}) {
        CHECK_MESSAGE(fs::exists(cfg.out_dir + "/" + name), name);
    }
    // The manifest records the config hash.
    std::ifstream is(cfg.out_dir + "/manifest.txt");
    std::string word, hash;
    is >> word >> hash;
    CHECK(word == "config_hash");
    CHECK(hash == cfg.hash());

    // The student checkpoint round-trips with its normalization stats.
    StudentParams p = StudentParams::load(cfg.out_dir + "/student.bin");
    CHECK(p.feat_mean.size() == cfg.embed.dim);
    CHECK(p.feat_sd.size() == cfg.embed.dim);
}
