#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "provsense/graph/provgraph.hpp"

namespace provsense {

enum class CommunityRole { Core, BridgeAdjacent, Benign };

struct CommunityStats {
    std::size_t size = 0;
    std::size_t malicious = 0;
    double malicious_fraction = 0.0;
    CommunityRole role = CommunityRole::Benign;
};

struct Partition {
    std::vector<std::uint32_t> assignment;  // node -> community, ids contiguous
    std::size_t num_communities = 0;
    double map_equation_bits = 0.0;
    std::vector<CommunityStats> stats;
    std::vector<std::size_t> bridge_candidates;  // flagged nodes spanning communities
};

struct PathHop {
    std::string src_key;
    std::string relation;
    std::string dst_key;
    std::int64_t ts;
};

// Timestamp-non-decreasing chain through flagged nodes along directed edges.
using AttackPath = std::vector<PathHop>;

struct ReconstructConfig {
    double lambda = 10.0;    // up-weight for edges near flagged nodes
    double rho = 0.5;        // malicious fraction that makes a community core
    double teleport = 0.15;  // random-walk teleportation
    double flow_tol = 1e-10;
    std::uint64_t seed = 0;
};

// Symmetric edge weights: base multiplicity, scaled by lambda on every edge
// incident to a flagged node or a one-hop neighbor of one.
Csr flow_weights(const ProvGraph& g, const std::set<std::size_t>& flagged, double lambda);

// Stationary visit rates of the teleporting walk over the weighted graph.
std::vector<double> stationary_flow(const Csr& weights, double teleport, double tol);

// Two-level map equation in bits for a given partition and node visit rates.
double map_equation(const std::vector<std::uint32_t>& assignment, const Csr& weights,
                    const std::vector<double>& flow);

// Greedy node-move + aggregation optimization of the map equation.
// Accepted moves never increase the objective; deterministic under seed.
Partition detect_communities(const ProvGraph& g, const Csr& weights,
                             const ReconstructConfig& cfg);

// Fills community roles / bridge candidates from the flagged set and
// extracts maximal time-respecting attack paths over flagged nodes.
std::vector<AttackPath> classify_and_trace(Partition& partition,
                                           const std::set<std::size_t>& flagged,
                                           const ProvGraph& g, double rho);

void write_communities(const std::string& path, const Partition& p, const ProvGraph& g);
void write_paths(const std::string& path, const std::vector<AttackPath>& paths);
// Flagged subgraph in DOT format.
void export_dot(const std::string& path, const ProvGraph& g,
                const std::set<std::size_t>& flagged);

}  // namespace provsense
