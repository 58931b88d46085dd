#include "provsense/graph/provgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include "provsense/errors.hpp"

namespace provsense {

ProvGraph ProvGraph::build(const std::vector<Event>& events) {
    ProvGraph g;
    auto intern = [&g](const std::string& key, EntityKind kind,
                       const std::map<std::string, std::string>& attrs,
                       const char* prefix) -> std::uint32_t {
        auto it = g.index_.find(key);
        std::uint32_t v;
        if (it == g.index_.end()) {
            v = static_cast<std::uint32_t>(g.node_key_.size());
            g.index_.emplace(key, v);
            g.node_key_.push_back(key);
            g.node_kind_.push_back(kind);
            g.node_attrs_.emplace_back();
        } else {
            v = it->second;
        }
        const std::size_t plen = std::string(prefix).size();
        for (const auto& [k, val] : attrs) {
            if (k.rfind(prefix, 0) == 0)
                g.node_attrs_[v].emplace(k.substr(plen), val);
        }
        return v;
    };

    std::map<std::tuple<std::uint32_t, std::uint32_t, std::string>, std::size_t> edge_index;
    for (const Event& e : events) {
        std::uint32_t s = intern(e.subject_id, e.subject_kind, e.attrs, "subject.");
        std::uint32_t o = intern(e.object_id, e.object_kind, e.attrs, "object.");
        if (s == o)
            throw DataError("self-loop event '" + e.event_id + "' on entity " +
                            e.subject_id);
        auto key = std::make_tuple(s, o, e.relation);
        auto it = edge_index.find(key);
        if (it == edge_index.end()) {
            edge_index.emplace(key, g.edges_.size());
            g.edges_.push_back({s, o, e.relation, e.ts, e.ts, 1});
        } else {
            GraphEdge& ge = g.edges_[it->second];
            ge.first_ts = std::min(ge.first_ts, e.ts);
            ge.last_ts = std::max(ge.last_ts, e.ts);
            ++ge.multiplicity;
        }
    }

    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> trips;
    trips.reserve(g.edges_.size() * 2);
    for (const GraphEdge& e : g.edges_) {
        trips.emplace_back(e.src, e.dst, 1.0);
        trips.emplace_back(e.dst, e.src, 1.0);
    }
    g.undirected_ = csr_from_triplets(g.n(), g.n(), std::move(trips));
    // Parallel relations between the same pair collapse to unit weight.
    for (double& v : g.undirected_.vals) v = 1.0;
    return g;
}

std::int64_t ProvGraph::index_of(const std::string& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

Csr ProvGraph::normalized_adjacency() const {
    const std::size_t nn = n();
    std::vector<double> deg(nn, 0.0);
    for (std::size_t v = 0; v < nn; ++v)
        deg[v] = static_cast<double>(degree(v)) + 1.0;  // self loop added

    Csr a(nn, nn);
    a.offsets.assign(nn + 1, 0);
    for (std::size_t v = 0; v < nn; ++v) {
        bool self_done = false;
        auto push = [&](std::uint32_t u, double val) {
            a.cols.push_back(u);
            a.vals.push_back(val);
            ++a.offsets[v + 1];
        };
        for (std::size_t k = undirected_.offsets[v]; k < undirected_.offsets[v + 1]; ++k) {
            std::uint32_t u = undirected_.cols[k];
            if (!self_done && u > v) {
                push(static_cast<std::uint32_t>(v), 1.0 / deg[v]);
                self_done = true;
            }
            push(u, 1.0 / std::sqrt(deg[v] * deg[u]));
        }
        if (!self_done) push(static_cast<std::uint32_t>(v), 1.0 / deg[v]);
    }
    for (std::size_t v = 0; v < nn; ++v) a.offsets[v + 1] += a.offsets[v];
    return a;
}

void ProvGraph::export_edges(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (const GraphEdge& e : edges_) {
        out << node_key_[e.src] << ' ' << node_key_[e.dst] << ' ' << e.relation
            << ' ' << e.first_ts << ' ' << e.last_ts << ' ' << e.multiplicity << '\n';
    }
}

void ProvGraph::export_nodes(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (std::size_t v = 0; v < n(); ++v) {
        out << node_key_[v] << ' ' << kind_name(node_kind_[v]);
        for (const auto& [k, val] : node_attrs_[v]) out << ' ' << k << '=' << val;
        out << '\n';
    }
}

WeightMatrix build_weights(const ProvGraph& g, const Mat* signals) {
    const Csr& u = g.undirected();
    WeightMatrix wm;
    wm.w = u;
    if (signals == nullptr || signals->rows == 0) return wm;
    if (signals->rows != g.n()) throw ShapeMismatch("signals rows != node count");

    std::vector<double> norms(g.n());
    for (std::size_t v = 0; v < g.n(); ++v)
        norms[v] = std::sqrt(simd::dot(signals->row(v), signals->row(v), signals->cols));

    for (std::size_t v = 0; v < g.n(); ++v) {
        for (std::size_t k = u.offsets[v]; k < u.offsets[v + 1]; ++k) {
            std::uint32_t t = u.cols[k];
            double denom = norms[v] * norms[t];
            double cosine = denom > 0.0
                ? simd::dot(signals->row(v), signals->row(t), signals->cols) / denom
                : 0.0;
            wm.w.vals[k] = std::max(0.0, std::min(1.0, cosine));
        }
    }
    return wm;
}

Csr laplacian(const ProvGraph& g, const WeightMatrix& wm) {
    const Csr& w = wm.w;
    if (w.n_rows != g.n() || w.n_cols != g.n())
        throw ShapeMismatch("weight matrix does not match graph");
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> trips;
    trips.reserve(w.nnz() + g.n());
    for (std::size_t v = 0; v < g.n(); ++v) {
        double d = 0.0;
        for (std::size_t k = w.offsets[v]; k < w.offsets[v + 1]; ++k) {
            trips.emplace_back(static_cast<std::uint32_t>(v), w.cols[k], -w.vals[k]);
            d += w.vals[k];
        }
        trips.emplace_back(static_cast<std::uint32_t>(v),
                           static_cast<std::uint32_t>(v), d);
    }
    return csr_from_triplets(g.n(), g.n(), std::move(trips));
}

}  // namespace provsense
