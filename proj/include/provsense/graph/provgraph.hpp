#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "provsense/core/csr.hpp"
#include "provsense/core/mat.hpp"
#include "provsense/ingest/event.hpp"

namespace provsense {

struct GraphEdge {
    std::uint32_t src;
    std::uint32_t dst;
    std::string relation;
    std::int64_t first_ts;
    std::int64_t last_ts;
    std::uint64_t multiplicity;
};

// Deduplicated typed provenance graph. Nodes are system entities indexed by
// first appearance; duplicate (src, dst, relation) events collapse into one
// edge with a multiplicity and a timestamp range. Immutable once built.
class ProvGraph {
public:
    static ProvGraph build(const std::vector<Event>& events);

    std::size_t n() const { return node_key_.size(); }
    const std::vector<std::string>& node_keys() const { return node_key_; }
    const std::string& key(std::size_t v) const { return node_key_[v]; }
    EntityKind kind(std::size_t v) const { return node_kind_[v]; }
    const std::map<std::string, std::string>& attrs(std::size_t v) const {
        return node_attrs_[v];
    }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    // -1 when the key is unknown.
    std::int64_t index_of(const std::string& key) const;

    // Symmetrized undirected neighbor structure: unit values, no self loops,
    // sorted unique neighbors per row.
    const Csr& undirected() const { return undirected_; }
    std::size_t degree(std::size_t v) const {
        return undirected_.offsets[v + 1] - undirected_.offsets[v];
    }

    // D^{-1/2} (A_sym + I) D^{-1/2}, the teacher's propagation operator.
    Csr normalized_adjacency() const;

    void export_edges(const std::string& path) const;
    void export_nodes(const std::string& path) const;

private:
    std::vector<std::string> node_key_;
    std::vector<EntityKind> node_kind_;
    std::vector<std::map<std::string, std::string>> node_attrs_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<GraphEdge> edges_;
    Csr undirected_;
};

// Sparse symmetric edge weights on the undirected structure, entries in
// [0, 1], zero diagonal.
struct WeightMatrix {
    Csr w;
};

// W_ij = max(0, cosine(x_i, x_j)) on connected pairs. With no signals
// (signals == nullptr or empty) every edge gets weight 1.
WeightMatrix build_weights(const ProvGraph& g, const Mat* signals);

// L = D - W with D_ii = sum_j W_ij; symmetric positive semidefinite.
Csr laplacian(const ProvGraph& g, const WeightMatrix& w);

}  // namespace provsense
