#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "provsense/errors.hpp"
#include "provsense/ingest/parser.hpp"
#include "provsense/ingest/scenario.hpp"

using namespace provsense;

TEST_CASE("empty stream parses to an empty list") {
    CHECK(parse_events("").empty());
    CHECK(parse_events("\n\n").empty());
}

TEST_CASE("canonical record parses field for field") {
    const char* rec =
        R"({"event_id":"e1","ts":10,"relation":"read",)"
        R"("subject":{"id":"p1","kind":"process","name":"nginx"},)"
        R"("object":{"id":"f1","kind":"file","path":"/tmp/vUgefal"}})";
    auto events = parse_events(rec);
    REQUIRE(events.size() == 1);
    const Event& e = events[0];
    CHECK(e.event_id == "e1");
    CHECK(e.ts == 10);
    CHECK(e.relation == "read");
    CHECK(e.subject_id == "p1");
    CHECK(e.subject_kind == EntityKind::Process);
    CHECK(e.object_id == "f1");
    CHECK(e.object_kind == EntityKind::File);
    CHECK(e.attrs.at("subject.name") == "nginx");
    CHECK(e.attrs.at("object.path") == "/tmp/vUgefal");
}

TEST_CASE("connect to a file is an illegal relation") {
    const char* rec =
        R"({"event_id":"e1","ts":1,"relation":"connect",)"
        R"("subject":{"id":"p1","kind":"process"},)"
        R"("object":{"id":"f1","kind":"file"}})";
    CHECK_THROWS_AS(parse_events(rec), IllegalRelation);
}

TEST_CASE("malformed records carry the offending line number") {
    std::string good =
        R"({"event_id":"e1","ts":1,"relation":"read",)"
        R"("subject":{"id":"p1","kind":"process"},)"
        R"("object":{"id":"f1","kind":"file"}})";
    std::string stream = good + "\n{not json}\n";
    try {
        parse_events(stream);
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& ex) {
        CHECK(ex.line_no == 2);
    }
    // Unknown entity kinds are schema violations too.
    std::string bad_kind =
        R"({"event_id":"e1","ts":1,"relation":"read",)"
        R"("subject":{"id":"p1","kind":"process"},)"
        R"("object":{"id":"f1","kind":"socketpair"}})";
    CHECK_THROWS_AS(parse_events(bad_kind), MalformedRecord);
}

TEST_CASE("serialize then parse round-trips semantically") {
    ScenarioConfig cfg;
    cfg.n_benign = 30;
    cfg.seed = 11;
    Scenario s = generate_cadets_scenario(cfg);
    std::string text;
    for (const Event& e : s.events) text += serialize_event(e) + "\n";
    auto back = parse_events(text);
    REQUIRE(back.size() == s.events.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].event_id == s.events[i].event_id);
        CHECK(back[i].ts == s.events[i].ts);
        CHECK(back[i].relation == s.events[i].relation);
        CHECK(back[i].subject_id == s.events[i].subject_id);
        CHECK(back[i].object_id == s.events[i].object_id);
        CHECK(back[i].subject_kind == s.events[i].subject_kind);
        CHECK(back[i].object_kind == s.events[i].object_kind);
        CHECK(back[i].attrs == s.events[i].attrs);
    }
}

TEST_CASE("attack-only scenario ground truth lists the scripted chain") {
    ScenarioConfig cfg;
    cfg.n_benign = 0;
    Scenario s = generate_cadets_scenario(cfg);
    std::set<std::string> gt(s.ground_truth.begin(), s.ground_truth.end());
    CHECK(gt.count("proc:nginx-c") == 1);       // compromised web server
    CHECK(gt.count("file:/tmp/vUgefal") == 1);  // dropped payload
    CHECK(gt.count("proc:vUgefal") == 1);       // executed payload
    CHECK(gt.count("net:81.49.200.166") == 1);  // external C2 flow
    CHECK(gt.count("net:61.167.39.128") == 1);  // lateral flow
    CHECK(gt.count("proc:sshd") == 1);          // injected daemon
    CHECK(gt.count("file:/var/log/devc") == 1); // second payload
    // Every ground-truth key appears in the event stream.
    std::set<std::string> keys;
    for (const Event& e : s.events) {
        keys.insert(e.subject_id);
        keys.insert(e.object_id);
    }
    for (const std::string& k : gt) CHECK(keys.count(k) == 1);
}

TEST_CASE("scenario generation is deterministic in (cfg, seed)") {
    ScenarioConfig cfg;
    cfg.n_benign = 80;
    cfg.seed = 5;
    Scenario a = generate_cadets_scenario(cfg);
    Scenario b = generate_cadets_scenario(cfg);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i)
        CHECK(serialize_event(a.events[i]) == serialize_event(b.events[i]));
    CHECK(a.ground_truth == b.ground_truth);
}

TEST_CASE("ground truth size is independent of the benign background") {
    ScenarioConfig small;
    small.n_benign = 0;
    ScenarioConfig big;
    big.n_benign = 200;
    big.seed = 7;
    CHECK(generate_cadets_scenario(small).ground_truth.size() ==
          generate_cadets_scenario(big).ground_truth.size());
}

TEST_CASE("scenario rejects non-positive event rates") {
    ScenarioConfig cfg;
    cfg.events_per_entity = 0.0;
    CHECK_THROWS_AS(generate_cadets_scenario(cfg), InvalidConfig);
}

TEST_CASE("mimicry with zero false events is the identity") {
    ScenarioConfig cfg;
    cfg.n_benign = 60;
    cfg.seed = 3;
    Scenario s = generate_cadets_scenario(cfg);
    Scenario m = apply_mimicry(s, 0, 99);
    REQUIRE(m.events.size() == s.events.size());
    for (std::size_t i = 0; i < s.events.size(); ++i)
        CHECK(serialize_event(m.events[i]) == serialize_event(s.events[i]));
    CHECK(m.ground_truth == s.ground_truth);
}

TEST_CASE("mimicry adds exactly the requested events and keeps ground truth") {
    ScenarioConfig cfg;
    cfg.n_benign = 60;
    cfg.seed = 3;
    Scenario s = generate_cadets_scenario(cfg);
    Scenario m = apply_mimicry(s, 100, 99);
    CHECK(m.events.size() == s.events.size() + 100);
    CHECK(m.ground_truth == s.ground_truth);
    // Never removes or relabels the original events.
    for (std::size_t i = 0; i < s.events.size(); ++i)
        CHECK(serialize_event(m.events[i]) == serialize_event(s.events[i]));
}

TEST_CASE("mimicry strictly increases malicious incidence") {
    ScenarioConfig cfg;
    cfg.n_benign = 60;
    cfg.seed = 3;
    Scenario s = generate_cadets_scenario(cfg);
    auto touches = [](const Scenario& sc) {
        std::set<std::string> mal(sc.ground_truth.begin(), sc.ground_truth.end());
        std::size_t count = 0;
        for (const Event& e : sc.events)
            if (mal.count(e.subject_id) || mal.count(e.object_id)) ++count;
        return count;
    };
    Scenario m = apply_mimicry(s, 1, 99);
    CHECK(touches(m) > touches(s));
}

TEST_CASE("mimicry requires a malicious node and benign context") {
    Scenario empty;
    empty.events.push_back(Event{"e1", 1, "read", "p1", "f1",
                                 EntityKind::Process, EntityKind::File, {}});
    CHECK_THROWS_AS(apply_mimicry(empty, 10, 0), InvalidConfig);
}

TEST_CASE("label sidecar files round-trip") {
    std::vector<std::string> keys = {"proc:a", "file:/b", "net:1.2.3.4"};
    std::string path = "/tmp/provsense_test_labels.txt";
    write_labels_file(path, keys);
    CHECK(read_labels_file(path) == keys);
}
