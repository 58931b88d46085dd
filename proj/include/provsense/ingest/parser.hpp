#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "provsense/ingest/event.hpp"

namespace provsense {

// Parses newline-delimited JSON event records. Throws MalformedRecord /
// IllegalRelation with the offending 1-based line number.
std::vector<Event> parse_events(std::string_view stream);
std::vector<Event> parse_events_file(const std::string& path);

// One JSON record per line, field-for-field inverse of parse_events.
std::string serialize_event(const Event& e);
void write_events(std::ostream& os, const std::vector<Event>& events);
void write_events_file(const std::string& path, const std::vector<Event>& events);

// Sidecar ground-truth files: one malicious entity key per line.
void write_labels_file(const std::string& path, const std::vector<std::string>& keys);
std::vector<std::string> read_labels_file(const std::string& path);

}  // namespace provsense
