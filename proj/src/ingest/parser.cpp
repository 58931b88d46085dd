#include "provsense/ingest/parser.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "provsense/errors.hpp"

namespace provsense {

using nlohmann::json;

namespace {

EntityKind parse_endpoint(const json& rec, const char* side, std::size_t line,
                          std::string& id_out,
                          std::map<std::string, std::string>& attrs_out) {
    if (!rec.contains(side) || !rec[side].is_object())
        throw MalformedRecord(line, std::string("missing ") + side + " object");
    const json& ep = rec[side];
    if (!ep.contains("id") || !ep["id"].is_string())
        throw MalformedRecord(line, std::string(side) + " missing string id");
    if (!ep.contains("kind") || !ep["kind"].is_string())
        throw MalformedRecord(line, std::string(side) + " missing string kind");
    id_out = ep["id"].get<std::string>();
    EntityKind kind;
    if (!parse_kind(ep["kind"].get<std::string>(), kind))
        throw MalformedRecord(line, std::string(side) + " has unknown kind '" +
                                        ep["kind"].get<std::string>() + "'");
    for (auto it = ep.begin(); it != ep.end(); ++it) {
        if (it.key() == "id" || it.key() == "kind") continue;
        if (it.value().is_string())
            attrs_out[std::string(side) + "." + it.key()] = it.value().get<std::string>();
    }
    return kind;
}

Event parse_record(const std::string& text, std::size_t line) {
    json rec = json::parse(text, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
        throw MalformedRecord(line, "not a JSON object");

    Event e;
    if (!rec.contains("event_id") || !rec["event_id"].is_string())
        throw MalformedRecord(line, "missing string event_id");
    e.event_id = rec["event_id"].get<std::string>();
    if (!rec.contains("ts") || !rec["ts"].is_number_integer())
        throw MalformedRecord(line, "missing integer ts");
    e.ts = rec["ts"].get<std::int64_t>();
    if (e.ts < 0) throw MalformedRecord(line, "negative ts");
    if (!rec.contains("relation") || !rec["relation"].is_string())
        throw MalformedRecord(line, "missing string relation");
    e.relation = rec["relation"].get<std::string>();

    e.subject_kind = parse_endpoint(rec, "subject", line, e.subject_id, e.attrs);
    e.object_kind = parse_endpoint(rec, "object", line, e.object_id, e.attrs);

    if (!relation_legal(e.relation, e.subject_kind, e.object_kind))
        throw IllegalRelation(line, "relation '" + e.relation + "' illegal for " +
                                        kind_name(e.subject_kind) + "->" +
                                        kind_name(e.object_kind));
    return e;
}

}  // namespace

std::vector<Event> parse_events(std::string_view stream) {
    std::vector<Event> out;
    std::set<std::string> seen_ids;
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < stream.size()) {
        std::size_t end = stream.find('\n', pos);
        if (end == std::string_view::npos) end = stream.size();
        ++line;
        std::string text(stream.substr(pos, end - pos));
        pos = end + 1;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        Event e = parse_record(text, line);
        if (!seen_ids.insert(e.event_id).second)
            throw MalformedRecord(line, "duplicate event_id '" + e.event_id + "'");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<Event> parse_events_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_events(buf.str());
}

std::string serialize_event(const Event& e) {
    json subject{{"id", e.subject_id}, {"kind", kind_name(e.subject_kind)}};
    json object{{"id", e.object_id}, {"kind", kind_name(e.object_kind)}};
    for (const auto& [k, v] : e.attrs) {
        if (k.rfind("subject.", 0) == 0) subject[k.substr(8)] = v;
        else if (k.rfind("object.", 0) == 0) object[k.substr(7)] = v;
    }
    json rec{{"event_id", e.event_id},
             {"ts", e.ts},
             {"relation", e.relation},
             {"subject", subject},
             {"object", object}};
    return rec.dump();
}

void write_events(std::ostream& os, const std::vector<Event>& events) {
    for (const Event& e : events) os << serialize_event(e) << '\n';
}

void write_events_file(const std::string& path, const std::vector<Event>& events) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    write_events(out, events);
}

void write_labels_file(const std::string& path, const std::vector<std::string>& keys) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& k : keys) out << k << '\n';
}

std::vector<std::string> read_labels_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::string> keys;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) keys.push_back(line);
    }
    return keys;
}

}  // namespace provsense
