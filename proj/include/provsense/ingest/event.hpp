#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace provsense {

enum class EntityKind { Process, File, Netflow, Memory };

const char* kind_name(EntityKind k);           // "process", "file", ...
bool parse_kind(const std::string& s, EntityKind& out);

// One parsed audit-log record. Subject is always a process; the object kind
// selects the legal relation family (R1 process, R2 file, R3 netflow,
// R4 memory).
struct Event {
    std::string event_id;
    std::int64_t ts = 0;  // nanoseconds since epoch
    std::string relation;
    std::string subject_id;
    std::string object_id;
    EntityKind subject_kind = EntityKind::Process;
    EntityKind object_kind = EntityKind::Process;
    // Endpoint attributes, keyed "subject.<name>" / "object.<name>".
    std::map<std::string, std::string> attrs;
};

// True when `relation` is legal for a subject of `subject` kind acting on an
// object of `object` kind.
bool relation_legal(const std::string& relation, EntityKind subject, EntityKind object);

// A replayable event stream with ground-truth malicious entity keys.
struct Scenario {
    std::vector<Event> events;
    std::vector<std::string> ground_truth;  // sorted, unique entity keys
    std::uint64_t seed = 0;
};

}  // namespace provsense
