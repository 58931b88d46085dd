#include "provsense/ingest/event.hpp"

#include <array>
#include <algorithm>

namespace provsense {

namespace {

// Relation families: subject must always be a process; the object kind
// picks the family.
const std::array<const char*, 5> kR1 = {"fork", "execute", "exit", "clone", "change"};
const std::array<const char*, 5> kR2 = {"read", "open", "close", "write", "rename"};
const std::array<const char*, 5> kR3 = {"connect", "send", "recv", "read", "close"};
const std::array<const char*, 3> kR4 = {"read", "mprotect", "mmap"};

template <typename C>
bool contains(const C& c, const std::string& s) {
    return std::find(c.begin(), c.end(), s) != c.end();
}

}  // namespace

const char* kind_name(EntityKind k) {
    switch (k) {
        case EntityKind::Process: return "process";
        case EntityKind::File: return "file";
        case EntityKind::Netflow: return "netflow";
        case EntityKind::Memory: return "memory";
    }
    return "?";
}

bool parse_kind(const std::string& s, EntityKind& out) {
    if (s == "process") out = EntityKind::Process;
    else if (s == "file") out = EntityKind::File;
    else if (s == "netflow") out = EntityKind::Netflow;
    else if (s == "memory") out = EntityKind::Memory;
    else return false;
    return true;
}

bool relation_legal(const std::string& relation, EntityKind subject, EntityKind object) {
    if (subject != EntityKind::Process) return false;
    switch (object) {
        case EntityKind::Process: return contains(kR1, relation);
        case EntityKind::File: return contains(kR2, relation);
        case EntityKind::Netflow: return contains(kR3, relation);
        case EntityKind::Memory: return contains(kR4, relation);
    }
    return false;
}

}  // namespace provsense
