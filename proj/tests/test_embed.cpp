#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "provsense/embed/embed.hpp"
#include "provsense/errors.hpp"
#include "provsense/graph/provgraph.hpp"
#include "provsense/ingest/scenario.hpp"

using namespace provsense;

namespace {

Event ev(const char* id, std::int64_t ts, const char* rel, const char* subj,
         const char* obj, EntityKind okind,
         std::map<std::string, std::string> attrs = {}) {
    Event e;
    e.event_id = id;
    e.ts = ts;
    e.relation = rel;
    e.subject_id = subj;
    e.object_id = obj;
    e.subject_kind = EntityKind::Process;
    e.object_kind = okind;
    e.attrs = std::move(attrs);
    return e;
}

double cosine(const double* a, const double* b, std::size_t n) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0 || bb == 0) return 0;
    return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("sentences follow kind, attributes, then edges in time order") {
    auto g = ProvGraph::build({ev("e1", 7, "read", "p1", "f1", EntityKind::File,
                                  {{"subject.name", "nginx"},
                                   {"object.path", "/tmp/vUgefal"}})});
    std::size_t p = static_cast<std::size_t>(g.index_of("p1"));
    std::size_t f = static_cast<std::size_t>(g.index_of("f1"));
    CHECK(build_sentence(g, p) ==
          Sentence{"process", "nginx", "read", "file"});
    // Path tokens split on '/' and lowercase; the file's own tokens come
    // before its incident edges.
    CHECK(build_sentence(g, f) ==
          Sentence{"file", "tmp", "vugefal", "read", "process"});
}

TEST_CASE("ip attributes tokenize per octet") {
    auto g = ProvGraph::build({ev("e1", 1, "connect", "p1", "n1", EntityKind::Netflow,
                                  {{"object.ip", "10.23.37.45"}})});
    std::size_t n = static_cast<std::size_t>(g.index_of("n1"));
    CHECK(build_sentence(g, n) ==
          Sentence{"netflow", "10", "23", "37", "45", "connect", "process"});
}

TEST_CASE("multi-edge sentences order incident edges by first timestamp") {
    auto g = ProvGraph::build({ev("e1", 9, "write", "p1", "f2", EntityKind::File),
                               ev("e2", 3, "read", "p1", "f1", EntityKind::File)});
    std::size_t p = static_cast<std::size_t>(g.index_of("p1"));
    CHECK(build_sentence(g, p) ==
          Sentence{"process", "read", "file", "write", "file"});
}

TEST_CASE("every node sentence is nonempty and the batch builder agrees") {
    ScenarioConfig cfg;
    cfg.n_benign = 30;
    cfg.seed = 12;
    ProvGraph g = ProvGraph::build(generate_cadets_scenario(cfg).events);
    auto all = build_sentences(g);
    REQUIRE(all.size() == g.n());
    for (std::size_t v = 0; v < g.n(); ++v) {
        CHECK(!all[v].empty());
        CHECK(all[v] == build_sentence(g, v));
    }
}

TEST_CASE("training is deterministic and identical sentences share rows") {
    std::vector<Sentence> corpus = {
        {"process", "nginx", "read", "file"},
        {"process", "nginx", "read", "file"},
        {"file", "tmp", "payload", "read", "process"},
        {"netflow", "10", "23", "connect", "process"},
    };
    EmbedConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 3;
    cfg.seed = 5;
    Embedding a = Embedding::train(corpus, cfg);
    Embedding b = Embedding::train(corpus, cfg);
    Mat xa = a.encode_all(corpus);
    Mat xb = b.encode_all(corpus);
    REQUIRE(xa.a.size() == xb.a.size());
    for (std::size_t i = 0; i < xa.a.size(); ++i) CHECK(xa.a[i] == xb.a[i]);
    CHECK(xa.all_finite());
    for (std::size_t j = 0; j < xa.cols; ++j)
        CHECK(xa.at(0, j) == xa.at(1, j));  // identical sentences
}

TEST_CASE("skip-gram loss decreases on a small corpus") {
    std::vector<Sentence> corpus;
    for (int i = 0; i < 10; ++i) {
        if (i % 2 == 0)
            corpus.push_back({"process", "nginx", "read", "file", "conf"});
        else
            corpus.push_back({"file", "var", "log", "write", "process"});
    }
    EmbedConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 20;
    cfg.seed = 1;
    Embedding emb = Embedding::train(corpus, cfg);
    const auto& loss = emb.loss_per_epoch();
    REQUIRE(loss.size() == 20);
    CHECK(loss.back() < loss.front());
}

TEST_CASE("shared-token pairs are more similar than disjoint pairs") {
    ScenarioConfig cfg;
    cfg.n_benign = 60;
    cfg.seed = 13;
    ProvGraph g = ProvGraph::build(generate_cadets_scenario(cfg).events);
    auto sentences = build_sentences(g);
    EmbedConfig ec;
    ec.seed = 13;
    Embedding emb = Embedding::train(sentences, ec);
    Mat x = emb.encode_all(sentences);

    auto overlap = [](const Sentence& a, const Sentence& b) {
        std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
        std::size_t common = 0;
        for (const auto& t : sa) common += sb.count(t);
        return static_cast<double>(common) /
               static_cast<double>(std::min(sa.size(), sb.size()));
    };
    double sim_shared = 0, sim_disjoint = 0;
    std::size_t n_shared = 0, n_disjoint = 0;
    for (std::size_t i = 0; i < g.n(); ++i) {
        for (std::size_t j = i + 1; j < g.n(); ++j) {
            double ov = overlap(sentences[i], sentences[j]);
            double cs = cosine(x.row(i), x.row(j), x.cols);
            if (ov >= 0.5) {
                sim_shared += cs;
                ++n_shared;
            } else if (ov == 0.0) {
                sim_disjoint += cs;
                ++n_disjoint;
            }
        }
    }
    REQUIRE(n_shared > 0);
    if (n_disjoint > 0)
        CHECK(sim_shared / n_shared > sim_disjoint / n_disjoint);
}

TEST_CASE("out-of-vocabulary tokens encode to zero") {
    std::vector<Sentence> corpus = {{"alpha", "beta"}, {"beta", "gamma"}};
    EmbedConfig cfg;
    cfg.dim = 4;
    cfg.epochs = 1;
    Embedding emb = Embedding::train(corpus, cfg);
    double out[4];
    emb.encode({"never-seen", "also-unknown"}, out);
    for (double v : out) CHECK(v == 0.0);
    // Mixed sentence: unseen tokens contribute zero but known ones count.
    double mixed[4], known[4];
    emb.encode({"alpha"}, known);
    emb.encode({"alpha", "never-seen"}, mixed);
    for (int i = 0; i < 4; ++i) CHECK(mixed[i] == doctest::Approx(known[i]));
}

TEST_CASE("degenerate corpora are rejected") {
    CHECK_THROWS_AS(Embedding::train({{"only"}}, EmbedConfig{}), EmptyCorpus);
    EmbedConfig bad;
    bad.dim = 0;
    CHECK_THROWS_AS(Embedding::train({{"a", "b"}}, bad), InvalidConfig);
}

TEST_CASE("embedding checkpoint round-trips") {
    std::vector<Sentence> corpus = {{"process", "read", "file"},
                                    {"file", "write", "process"}};
    EmbedConfig cfg;
    cfg.dim = 6;
    cfg.epochs = 2;
    Embedding emb = Embedding::train(corpus, cfg);
    std::string path = "/tmp/provsense_test_embed.bin";
    emb.save(path);
    Embedding back = Embedding::load(path);
    CHECK(back.dim() == emb.dim());
    CHECK(back.vocab_size() == emb.vocab_size());
    Mat xa = emb.encode_all(corpus);
    Mat xb = back.encode_all(corpus);
    for (std::size_t i = 0; i < xa.a.size(); ++i) CHECK(xa.a[i] == xb.a[i]);
}

TEST_CASE("signal checkpoints round-trip with their denoised flag") {
    Mat sig(2, 3);
    for (std::size_t i = 0; i < sig.a.size(); ++i) sig.a[i] = 0.5 * (double)i;
    std::vector<std::string> keys = {"proc:a", "file:/b"};
    std::string path = "/tmp/provsense_test_signals.bin";
    save_signals(path, keys, sig, true);
    std::vector<std::string> keys2;
    Mat sig2;
    bool den = false;
    load_signals(path, keys2, sig2, den);
    CHECK(den);
    CHECK(keys2 == keys);
    REQUIRE(sig2.rows == sig.rows);
    REQUIRE(sig2.cols == sig.cols);
    for (std::size_t i = 0; i < sig.a.size(); ++i) CHECK(sig2.a[i] == sig.a[i]);
}
