#include "provsense/community/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "provsense/errors.hpp"

namespace provsense {

namespace {

double plogp(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

const char* role_name(CommunityRole r) {
    switch (r) {
        case CommunityRole::Core: return "core";
        case CommunityRole::BridgeAdjacent: return "bridge-adjacent";
        case CommunityRole::Benign: return "benign";
    }
    return "?";
}

// Directed flow graph: F_vu = p_v * w_vu / s_v. Exit flows of a module are
// sums of F across its boundary, which aggregation preserves, so the same
// structure drives every optimization level.
struct FlowGraph {
    std::size_t n = 0;
    std::vector<double> p;                  // unit visit rates
    std::vector<std::vector<std::pair<std::uint32_t, double>>> out;  // F_vu
    std::vector<std::vector<std::pair<std::uint32_t, double>>> in;   // F_uv

    double out_total(std::size_t v) const {
        double s = 0.0;
        for (auto& [u, f] : out[v]) s += f;
        return s;
    }
};

FlowGraph build_flow_graph(const Csr& w, const std::vector<double>& flow) {
    FlowGraph fg;
    fg.n = w.n_rows;
    fg.p = flow;
    fg.out.resize(fg.n);
    fg.in.resize(fg.n);
    for (std::size_t v = 0; v < fg.n; ++v) {
        double s = w.row_sum(v);
        if (s <= 0.0) continue;
        for (std::size_t k = w.offsets[v]; k < w.offsets[v + 1]; ++k) {
            std::uint32_t u = w.cols[k];
            double f = flow[v] * w.vals[k] / s;
            if (f > 0.0) {
                fg.out[v].emplace_back(u, f);
                fg.in[u].emplace_back(static_cast<std::uint32_t>(v), f);
            }
        }
    }
    return fg;
}

// Two-level map equation from per-module exit flows and flow sums.
struct MapState {
    std::vector<double> q;       // module exit flow
    std::vector<double> psum;    // module flow sum
    double Q = 0.0;
    double sum_plogp_q = 0.0;
    double sum_plogp_qp = 0.0;
    double node_term = 0.0;      // -sum_v plogp(p_v), constant per level

    double value() const {
        return plogp(Q) - 2.0 * sum_plogp_q + sum_plogp_qp + node_term;
    }
};

MapState init_state(const FlowGraph& fg, const std::vector<std::uint32_t>& module) {
    std::size_t m = 0;
    for (auto c : module) m = std::max<std::size_t>(m, c + 1);
    MapState st;
    st.q.assign(m, 0.0);
    st.psum.assign(m, 0.0);
    for (std::size_t v = 0; v < fg.n; ++v) {
        st.psum[module[v]] += fg.p[v];
        st.node_term -= plogp(fg.p[v]);
        for (auto& [u, f] : fg.out[v])
            if (module[u] != module[v]) st.q[module[v]] += f;
    }
    for (std::size_t i = 0; i < m; ++i) {
        st.Q += st.q[i];
        st.sum_plogp_q += plogp(st.q[i]);
        st.sum_plogp_qp += plogp(st.q[i] + st.psum[i]);
    }
    return st;
}

// One greedy level: move units between modules while the map equation
// decreases, then return the module labels.
std::vector<std::uint32_t> optimize_level(const FlowGraph& fg, std::mt19937_64& rng,
                                          double* final_value,
                                          std::size_t* accepted_increases) {
    std::vector<std::uint32_t> module(fg.n);
    std::iota(module.begin(), module.end(), 0);
    MapState st = init_state(fg, module);

    std::vector<std::size_t> order(fg.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> out_tot(fg.n);
    for (std::size_t v = 0; v < fg.n; ++v) out_tot[v] = fg.out_total(v);

    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t v : order) {
            const std::uint32_t mi = module[v];
            // Flow between v and each adjacent module.
            std::unordered_map<std::uint32_t, double> to_mod, from_mod;
            for (auto& [u, f] : fg.out[v])
                if (u != v) to_mod[module[u]] += f;
            for (auto& [u, f] : fg.in[v])
                if (u != v) from_mod[module[u]] += f;

            const double in_tot = [&] {
                double s = 0.0;
                for (auto& [m, f] : from_mod) s += f;
                return s;
            }();
            (void)in_tot;

            // Leaving module mi.
            const double out_i = to_mod.count(mi) ? to_mod[mi] : 0.0;
            const double in_i = from_mod.count(mi) ? from_mod[mi] : 0.0;
            const double qi_new = st.q[mi] - (out_tot[v] - out_i) + in_i;
            const double pi_new = st.psum[mi] - fg.p[v];

            double best_delta = 0.0;
            std::uint32_t best_mod = mi;
            for (auto& [mj, outj] : to_mod) {
                if (mj == mi) continue;
                const double inj = from_mod.count(mj) ? from_mod[mj] : 0.0;
                const double qj_new = st.q[mj] + (out_tot[v] - outj) - inj;
                const double pj_new = st.psum[mj] + fg.p[v];
                const double q_total_new = st.Q - st.q[mi] - st.q[mj] + qi_new + qj_new;
                double delta = plogp(q_total_new) - plogp(st.Q)
                    - 2.0 * (plogp(qi_new) + plogp(qj_new) - plogp(st.q[mi]) - plogp(st.q[mj]))
                    + plogp(qi_new + pi_new) + plogp(qj_new + pj_new)
                    - plogp(st.q[mi] + st.psum[mi]) - plogp(st.q[mj] + st.psum[mj]);
                if (delta < best_delta - 1e-12 ||
                    (delta < best_delta + 1e-12 && best_mod != mi && mj < best_mod)) {
                    best_delta = delta;
                    best_mod = mj;
                }
            }
            if (best_mod == mi) continue;

            // Apply the move.
            const std::uint32_t mj = best_mod;
            const double outj = to_mod[mj];
            const double inj = from_mod.count(mj) ? from_mod[mj] : 0.0;
            const double qj_new = st.q[mj] + (out_tot[v] - outj) - inj;
            const double pj_new = st.psum[mj] + fg.p[v];
            double before = st.value();
            st.Q += qi_new + qj_new - st.q[mi] - st.q[mj];
            st.sum_plogp_q += plogp(qi_new) + plogp(qj_new)
                - plogp(st.q[mi]) - plogp(st.q[mj]);
            st.sum_plogp_qp += plogp(qi_new + pi_new) + plogp(qj_new + pj_new)
                - plogp(st.q[mi] + st.psum[mi]) - plogp(st.q[mj] + st.psum[mj]);
            st.q[mi] = qi_new;
            st.psum[mi] = pi_new;
            st.q[mj] = qj_new;
            st.psum[mj] = pj_new;
            module[v] = mj;
            if (st.value() > before + 1e-9 && accepted_increases) ++*accepted_increases;
            improved = true;
        }
    }
    if (final_value) *final_value = st.value();
    return module;
}

FlowGraph aggregate(const FlowGraph& fg, const std::vector<std::uint32_t>& module,
                    std::size_t num_modules) {
    FlowGraph agg;
    agg.n = num_modules;
    agg.p.assign(num_modules, 0.0);
    agg.out.resize(num_modules);
    agg.in.resize(num_modules);
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> links;
    for (std::size_t v = 0; v < fg.n; ++v) {
        agg.p[module[v]] += fg.p[v];
        for (auto& [u, f] : fg.out[v]) {
            if (module[u] == module[v]) continue;  // internal flow never exits
            links[{module[v], module[u]}] += f;
        }
    }
    for (auto& [key, f] : links) {
        agg.out[key.first].emplace_back(key.second, f);
        agg.in[key.second].emplace_back(key.first, f);
    }
    return agg;
}

std::size_t renumber(std::vector<std::uint32_t>& module) {
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    for (auto& m : module) {
        auto it = remap.find(m);
        if (it == remap.end()) {
            std::uint32_t id = static_cast<std::uint32_t>(remap.size());
            remap.emplace(m, id);
            m = id;
        } else {
            m = it->second;
        }
    }
    return remap.size();
}

}  // namespace

Csr flow_weights(const ProvGraph& g, const std::set<std::size_t>& flagged, double lambda) {
    if (lambda < 1.0) throw InvalidConfig("lambda must be >= 1");
    const std::size_t n = g.n();

    // S = flagged plus their one-hop neighbors.
    std::vector<std::uint8_t> hot(n, 0);
    const Csr& u = g.undirected();
    for (std::size_t v : flagged) {
        hot[v] = 1;
        for (std::size_t k = u.offsets[v]; k < u.offsets[v + 1]; ++k)
            hot[u.cols[k]] = 1;
    }

    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> trips;
    for (const GraphEdge& e : g.edges()) {
        double w = static_cast<double>(e.multiplicity);
        if (hot[e.src] || hot[e.dst]) w *= lambda;
        trips.emplace_back(e.src, e.dst, w);
        trips.emplace_back(e.dst, e.src, w);
    }
    return csr_from_triplets(n, n, std::move(trips));
}

std::vector<double> stationary_flow(const Csr& w, double teleport, double tol) {
    const std::size_t n = w.n_rows;
    if (n == 0) throw DegenerateFlow("empty graph");
    std::vector<double> strength(n);
    for (std::size_t v = 0; v < n; ++v) strength[v] = w.row_sum(v);

    std::vector<double> p(n, 1.0 / static_cast<double>(n)), next(n);
    for (std::size_t iter = 0; iter < 10000; ++iter) {
        double dangling = 0.0;
        for (std::size_t v = 0; v < n; ++v)
            if (strength[v] <= 0.0) dangling += p[v];
        const double base = (teleport + (1.0 - teleport) * dangling) / static_cast<double>(n);
        std::fill(next.begin(), next.end(), base);
        for (std::size_t v = 0; v < n; ++v) {
            if (strength[v] <= 0.0) continue;
            const double scale = (1.0 - teleport) * p[v] / strength[v];
            for (std::size_t k = w.offsets[v]; k < w.offsets[v + 1]; ++k)
                next[w.cols[k]] += scale * w.vals[k];
        }
        double diff = 0.0;
        for (std::size_t v = 0; v < n; ++v) diff += std::abs(next[v] - p[v]);
        p.swap(next);
        if (diff < tol) break;
    }
    return p;
}

double map_equation(const std::vector<std::uint32_t>& assignment, const Csr& w,
                    const std::vector<double>& flow) {
    if (assignment.size() != w.n_rows || flow.size() != w.n_rows)
        throw ShapeMismatch("map_equation shape mismatch");
    double total = 0.0;
    for (double f : flow) total += f;
    if (total <= 0.0) throw DegenerateFlow("zero total flow");

    FlowGraph fg = build_flow_graph(w, flow);
    MapState st = init_state(fg, assignment);
    return st.value();
}

Partition detect_communities(const ProvGraph& g, const Csr& weights,
                             const ReconstructConfig& cfg) {
    const std::size_t n = g.n();
    Partition part;
    if (n == 0) return part;

    std::vector<double> flow = stationary_flow(weights, cfg.teleport, cfg.flow_tol);
    FlowGraph fg = build_flow_graph(weights, flow);

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::uint32_t> assignment(n);
    std::iota(assignment.begin(), assignment.end(), 0);

    std::size_t accepted_increases = 0;
    while (true) {
        double level_value = 0.0;
        std::vector<std::uint32_t> module =
            optimize_level(fg, rng, &level_value, &accepted_increases);
        std::vector<std::uint32_t> compact = module;
        std::size_t m = renumber(compact);
        for (auto& a : assignment) a = compact[a];
        if (m == fg.n) break;  // no merge happened, fixed point
        fg = aggregate(fg, compact, m);
    }
    if (accepted_increases > 0)
        throw NumericError("map equation increased on an accepted move");

    part.num_communities = renumber(assignment);
    part.assignment = std::move(assignment);
    part.map_equation_bits = map_equation(part.assignment, weights, flow);
    return part;
}

std::vector<AttackPath> classify_and_trace(Partition& partition,
                                           const std::set<std::size_t>& flagged,
                                           const ProvGraph& g, double rho) {
    const std::size_t m = partition.num_communities;
    partition.stats.assign(m, {});
    for (std::size_t v = 0; v < g.n(); ++v) {
        CommunityStats& cs = partition.stats[partition.assignment[v]];
        ++cs.size;
        if (flagged.count(v)) ++cs.malicious;
    }
    std::map<std::uint32_t, std::size_t> flagged_per_comm;
    for (std::size_t v : flagged) ++flagged_per_comm[partition.assignment[v]];
    for (std::size_t i = 0; i < m; ++i) {
        CommunityStats& cs = partition.stats[i];
        cs.malicious_fraction =
            cs.size ? static_cast<double>(cs.malicious) / static_cast<double>(cs.size) : 0.0;
        if (cs.malicious > 0 && cs.malicious_fraction >= rho)
            cs.role = CommunityRole::Core;
    }

    partition.bridge_candidates.clear();
    if (flagged_per_comm.size() > 1) {
        // Flagged nodes outside the community holding most of them are the
        // likely links between attack regions.
        std::uint32_t majority = flagged_per_comm.begin()->first;
        for (auto& [comm, count] : flagged_per_comm)
            if (count > flagged_per_comm[majority]) majority = comm;
        for (std::size_t v : flagged)
            if (partition.assignment[v] != majority)
                partition.bridge_candidates.push_back(v);
        for (std::size_t v : partition.bridge_candidates) {
            CommunityStats& cs = partition.stats[partition.assignment[v]];
            if (cs.role != CommunityRole::Core) cs.role = CommunityRole::BridgeAdjacent;
        }
    }

    // Time-respecting chains over flagged nodes along directed edges.
    struct Hop {
        std::size_t dst;
        std::size_t edge;
    };
    std::unordered_map<std::size_t, std::vector<Hop>> succ;
    std::vector<std::uint8_t> has_flagged_pred(g.n(), 0);
    const auto& edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const GraphEdge& e = edges[i];
        if (flagged.count(e.src) && flagged.count(e.dst)) {
            succ[e.src].push_back({e.dst, i});
            has_flagged_pred[e.dst] = 1;
        }
    }

    std::vector<AttackPath> paths;
    constexpr std::size_t kMaxPaths = 128;
    AttackPath current;
    std::vector<std::uint8_t> edge_used(edges.size(), 0);

    std::function<void(std::size_t, std::int64_t)> extend =
        [&](std::size_t v, std::int64_t min_ts) {
            bool extended = false;
            auto it = succ.find(v);
            if (it != succ.end()) {
                for (const Hop& h : it->second) {
                    const GraphEdge& e = edges[h.edge];
                    if (e.first_ts < min_ts || edge_used[h.edge]) continue;
                    if (paths.size() >= kMaxPaths) break;
                    edge_used[h.edge] = 1;
                    current.push_back({g.key(e.src), e.relation, g.key(e.dst), e.first_ts});
                    extend(h.dst, e.first_ts);
                    current.pop_back();
                    edge_used[h.edge] = 0;
                    extended = true;
                }
            }
            if (!extended && !current.empty() && paths.size() < kMaxPaths)
                paths.push_back(current);
        };

    for (std::size_t v : flagged) {
        if (!has_flagged_pred[v] && succ.count(v)) extend(v, 0);
    }
    return paths;
}

void write_communities(const std::string& path, const Partition& p, const ProvGraph& g) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    for (std::size_t v = 0; v < g.n(); ++v) {
        std::uint32_t c = p.assignment[v];
        os << g.key(v) << ' ' << c << ' ' << role_name(p.stats[c].role) << '\n';
    }
}

void write_paths(const std::string& path, const std::vector<AttackPath>& paths) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        os << "# path " << i << '\n';
        for (const PathHop& h : paths[i])
            os << h.src_key << ' ' << h.relation << ' ' << h.dst_key << ' ' << h.ts << '\n';
    }
}

void export_dot(const std::string& path, const ProvGraph& g,
                const std::set<std::size_t>& flagged) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    os << "digraph flagged {\n";
    for (std::size_t v : flagged)
        os << "  \"" << g.key(v) << "\" [shape=" <<
            (g.kind(v) == EntityKind::Process ? "box" :
             g.kind(v) == EntityKind::File ? "ellipse" : "diamond") << "];\n";
    for (const GraphEdge& e : g.edges()) {
        if (flagged.count(e.src) && flagged.count(e.dst))
            os << "  \"" << g.key(e.src) << "\" -> \"" << g.key(e.dst)
               << "\" [label=\"" << e.relation << "\"];\n";
    }
    os << "}\n";
}

}  // namespace provsense
