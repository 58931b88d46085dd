#pragma once

#include <cstdint>

#include "provsense/ingest/event.hpp"

namespace provsense {

struct ScenarioConfig {
    // Approximate number of benign entities in the background. 0 means
    // attack chain only.
    std::size_t n_benign = 200;
    // Average number of extra interaction events generated per benign entity
    // on top of each template's fixed events.
    double events_per_entity = 3.0;
    std::uint64_t seed = 0;
};

// Synthesizes a benign background (web serving, file editing, service
// heartbeats) plus the scripted CADETS-style attack chain: external IP ->
// compromised nginx -> write+execute /tmp/vUgefal -> lateral connect ->
// sshd injection -> write /var/log/devc. Pure function of (cfg, seed).
Scenario generate_cadets_scenario(const ScenarioConfig& cfg);

// Adds n_false_events benign-looking events that attach copies of benign
// neighborhoods to malicious nodes. Ground truth is unchanged.
Scenario apply_mimicry(const Scenario& s, std::size_t n_false_events, std::uint64_t seed);

}  // namespace provsense
