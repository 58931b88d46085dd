#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "provsense/graph/provgraph.hpp"
#include "provsense/ingest/scenario.hpp"

using namespace provsense;

namespace {

Event ev(const char* id, std::int64_t ts, const char* rel, const char* subj,
         const char* obj, EntityKind okind) {
    Event e;
    e.event_id = id;
    e.ts = ts;
    e.relation = rel;
    e.subject_id = subj;
    e.object_id = obj;
    e.subject_kind = EntityKind::Process;
    e.object_kind = okind;
    return e;
}

// Dense L entry lookup.
double at(const Csr& m, std::size_t i, std::size_t j) {
    for (std::size_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k)
        if (m.cols[k] == j) return m.vals[k];
    return 0.0;
}

}  // namespace

TEST_CASE("zero events build an empty graph") {
    ProvGraph g = ProvGraph::build({});
    CHECK(g.n() == 0);
    CHECK(g.edges().empty());
}

TEST_CASE("duplicate (src,dst,relation) events collapse with multiplicity") {
    auto g = ProvGraph::build({ev("e1", 1, "read", "p1", "f1", EntityKind::File),
                               ev("e2", 5, "read", "p1", "f1", EntityKind::File)});
    CHECK(g.n() == 2);
    REQUIRE(g.edges().size() == 1);
    const GraphEdge& e = g.edges()[0];
    CHECK(e.multiplicity == 2);
    CHECK(e.first_ts == 1);
    CHECK(e.last_ts == 5);
    CHECK(e.relation == "read");
}

TEST_CASE("distinct relations between the same pair stay separate edges") {
    auto g = ProvGraph::build({ev("e1", 1, "read", "p1", "f1", EntityKind::File),
                               ev("e2", 2, "write", "p1", "f1", EntityKind::File)});
    CHECK(g.edges().size() == 2);
}

TEST_CASE("attack-only scenario uses process, file and netflow nodes only") {
    ScenarioConfig cfg;
    cfg.n_benign = 0;
    Scenario s = generate_cadets_scenario(cfg);
    ProvGraph g = ProvGraph::build(s.events);
    std::set<EntityKind> kinds;
    for (std::size_t v = 0; v < g.n(); ++v) kinds.insert(g.kind(v));
    CHECK(kinds == std::set<EntityKind>{EntityKind::Process, EntityKind::File,
                                        EntityKind::Netflow});
}

TEST_CASE("event multiplicities sum to the event count") {
    ScenarioConfig cfg;
    cfg.n_benign = 50;
    cfg.seed = 2;
    Scenario s = generate_cadets_scenario(cfg);
    ProvGraph g = ProvGraph::build(s.events);
    std::uint64_t total = 0;
    for (const GraphEdge& e : g.edges()) total += e.multiplicity;
    CHECK(total == s.events.size());
}

TEST_CASE("graph construction is order-insensitive up to node indexing") {
    ScenarioConfig cfg;
    cfg.n_benign = 40;
    cfg.seed = 9;
    Scenario s = generate_cadets_scenario(cfg);
    ProvGraph a = ProvGraph::build(s.events);
    auto shuffled = s.events;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(123));
    ProvGraph b = ProvGraph::build(shuffled);
    REQUIRE(a.n() == b.n());
    REQUIRE(a.edges().size() == b.edges().size());
    // Compare the edge multisets by entity key; indices may differ.
    auto edge_keys = [](const ProvGraph& g) {
        std::vector<std::tuple<std::string, std::string, std::string, std::uint64_t>> out;
        for (const GraphEdge& e : g.edges())
            out.emplace_back(g.key(e.src), g.key(e.dst), e.relation, e.multiplicity);
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(edge_keys(a) == edge_keys(b));
    // Degrees per key match too.
    std::map<std::string, std::size_t> deg_a, deg_b;
    for (std::size_t v = 0; v < a.n(); ++v) deg_a[a.key(v)] = a.degree(v);
    for (std::size_t v = 0; v < b.n(); ++v) deg_b[b.key(v)] = b.degree(v);
    CHECK(deg_a == deg_b);
}

TEST_CASE("unit fallback weights and the two-node Laplacian") {
    auto g = ProvGraph::build({ev("e1", 1, "read", "p1", "f1", EntityKind::File)});
    WeightMatrix w = build_weights(g, nullptr);
    for (double v : w.w.vals) CHECK(v == 1.0);
    Csr L = laplacian(g, w);
    CHECK(at(L, 0, 0) == doctest::Approx(1.0));
    CHECK(at(L, 0, 1) == doctest::Approx(-1.0));
    CHECK(at(L, 1, 0) == doctest::Approx(-1.0));
    CHECK(at(L, 1, 1) == doctest::Approx(1.0));
}

TEST_CASE("edgeless graph has a zero Laplacian") {
    // Two entities that never interact with each other still become nodes.
    auto g = ProvGraph::build({ev("e1", 1, "read", "p1", "f1", EntityKind::File),
                               ev("e2", 2, "read", "p2", "f2", EntityKind::File)});
    WeightMatrix w = build_weights(g, nullptr);
    // Zero out every weight: L must become exactly zero.
    for (double& v : w.w.vals) v = 0.0;
    Csr L = laplacian(g, w);
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.n(); ++j) CHECK(at(L, i, j) == 0.0);
}

TEST_CASE("constant vectors lie in the Laplacian kernel") {
    ScenarioConfig cfg;
    cfg.n_benign = 40;
    cfg.seed = 4;
    ProvGraph g = ProvGraph::build(generate_cadets_scenario(cfg).events);
    Csr L = laplacian(g, build_weights(g, nullptr));
    std::vector<double> ones(g.n(), 1.0), out(g.n());
    L.matvec(ones.data(), out.data());
    for (double v : out) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("Laplacian is positive semidefinite on random draws") {
    ScenarioConfig cfg;
    cfg.n_benign = 30;
    cfg.seed = 6;
    ProvGraph g = ProvGraph::build(generate_cadets_scenario(cfg).events);
    Csr L = laplacian(g, build_weights(g, nullptr));
    std::mt19937_64 rng(17);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> x(g.n()), lx(g.n());
    for (int trial = 0; trial < 100; ++trial) {
        for (double& v : x) v = dist(rng);
        L.matvec(x.data(), lx.data());
        double quad = 0.0;
        for (std::size_t i = 0; i < g.n(); ++i) quad += x[i] * lx[i];
        CHECK(quad >= -1e-9);
    }
}

TEST_CASE("weights from signals are cosine clamped to [0,1]") {
    auto g = ProvGraph::build({ev("e1", 1, "read", "p1", "f1", EntityKind::File),
                               ev("e2", 2, "read", "p1", "f2", EntityKind::File)});
    Mat x(3, 2);
    // p1 = (1,0), f1 = (1,0) -> cosine 1; f2 = (-1,0) -> cosine -1 clamps to 0.
    x.at(0, 0) = 1.0;
    x.at(1, 0) = 1.0;
    x.at(2, 0) = -1.0;
    WeightMatrix w = build_weights(g, &x);
    CHECK(at(w.w, 0, 1) == doctest::Approx(1.0));
    CHECK(at(w.w, 0, 2) == doctest::Approx(0.0));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(at(w.w, i, i) == 0.0);  // zero diagonal
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(at(w.w, i, j) == at(w.w, j, i));  // symmetric
            CHECK(at(w.w, i, j) >= 0.0);
            CHECK(at(w.w, i, j) <= 1.0);
        }
    }
}

TEST_CASE("self-loop events are rejected at build time") {
    CHECK_THROWS_AS(
        ProvGraph::build({ev("e1", 1, "fork", "p1", "p1", EntityKind::Process)}),
        DataError);
}

TEST_CASE("normalized adjacency closed form on a two-node edge") {
    auto g2 = ProvGraph::build({ev("e1", 1, "read", "p1", "f1", EntityKind::File)});
    Csr a2 = g2.normalized_adjacency();
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(at(a2, i, j) == doctest::Approx(0.5));
}

TEST_CASE("normalized adjacency entries are bounded by 1") {
    ScenarioConfig cfg;
    cfg.n_benign = 40;
    cfg.seed = 8;
    ProvGraph g = ProvGraph::build(generate_cadets_scenario(cfg).events);
    Csr a = g.normalized_adjacency();
    for (double v : a.vals) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("undirected structure has no self loops and sorted unique columns") {
    ScenarioConfig cfg;
    cfg.n_benign = 30;
    cfg.seed = 1;
    ProvGraph g = ProvGraph::build(generate_cadets_scenario(cfg).events);
    const Csr& u = g.undirected();
    for (std::size_t i = 0; i < u.n_rows; ++i) {
        for (std::size_t k = u.offsets[i]; k < u.offsets[i + 1]; ++k) {
            CHECK(u.cols[k] != i);
            if (k + 1 < u.offsets[i + 1]) CHECK(u.cols[k] < u.cols[k + 1]);
        }
    }
}
