#include "provsense/embed/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "provsense/core/binio.hpp"
#include "provsense/errors.hpp"

namespace provsense {

namespace {

constexpr std::uint32_t kEmbedMagic = 0x4D455350;   // "PSEM"
constexpr std::uint32_t kSignalMagic = 0x47535350;  // "PSSG"
constexpr std::uint32_t kVersion = 1;

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

void push_attr_tokens(Sentence& out, const std::string& key, const std::string& val) {
    if (key == "path") {
        std::size_t pos = 0;
        while (pos < val.size()) {
            std::size_t slash = val.find('/', pos);
            if (slash == std::string::npos) slash = val.size();
            if (slash > pos) out.push_back(lowered(val.substr(pos, slash - pos)));
            pos = slash + 1;
        }
    } else if (key == "ip") {
        // Octet tokens instead of one token per address: full addresses are
        // unique per flow and act as node fingerprints, which lets a feature
        // model memorize labels instead of generalizing.
        std::size_t pos = 0;
        while (pos < val.size()) {
            std::size_t dot = val.find('.', pos);
            if (dot == std::string::npos) dot = val.size();
            if (dot > pos) out.push_back(lowered(val.substr(pos, dot - pos)));
            pos = dot + 1;
        }
    } else if (key == "name") {
        out.push_back(lowered(val));
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Sentence build_sentence(const ProvGraph& g, std::size_t v) {
    Sentence s;
    s.push_back(kind_name(g.kind(v)));
    for (const auto& [k, val] : g.attrs(v)) push_attr_tokens(s, k, val);

    struct Incident {
        std::int64_t ts;
        std::size_t edge;
    };
    std::vector<Incident> inc;
    const auto& edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].src == v || edges[i].dst == v) inc.push_back({edges[i].first_ts, i});
    }
    std::sort(inc.begin(), inc.end(), [](const Incident& a, const Incident& b) {
        return a.ts != b.ts ? a.ts < b.ts : a.edge < b.edge;
    });
    for (const Incident& ic : inc) {
        const GraphEdge& e = edges[ic.edge];
        std::size_t other = e.src == v ? e.dst : e.src;
        s.push_back(e.relation);
        s.push_back(kind_name(g.kind(other)));
    }
    return s;
}

std::vector<Sentence> build_sentences(const ProvGraph& g) {
    // Same result as calling build_sentence per node, one edge scan total.
    std::vector<Sentence> out(g.n());
    for (std::size_t v = 0; v < g.n(); ++v) {
        out[v].push_back(kind_name(g.kind(v)));
        for (const auto& [k, val] : g.attrs(v)) push_attr_tokens(out[v], k, val);
    }
    struct Incident {
        std::int64_t ts;
        std::size_t edge;
    };
    std::vector<std::vector<Incident>> inc(g.n());
    const auto& edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        inc[edges[i].src].push_back({edges[i].first_ts, i});
        inc[edges[i].dst].push_back({edges[i].first_ts, i});
    }
    for (std::size_t v = 0; v < g.n(); ++v) {
        std::sort(inc[v].begin(), inc[v].end(), [](const Incident& a, const Incident& b) {
            return a.ts != b.ts ? a.ts < b.ts : a.edge < b.edge;
        });
        for (const Incident& ic : inc[v]) {
            const GraphEdge& e = edges[ic.edge];
            std::size_t other = e.src == v ? e.dst : e.src;
            out[v].push_back(e.relation);
            out[v].push_back(kind_name(g.kind(other)));
        }
    }
    return out;
}

Embedding Embedding::train(const std::vector<Sentence>& sentences, const EmbedConfig& cfg) {
    if (cfg.dim < 1) throw InvalidConfig("embedding dim must be >= 1");

    Embedding emb;
    emb.dim_ = cfg.dim;
    std::vector<std::uint64_t> counts;
    std::vector<std::vector<std::uint32_t>> corpus(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        for (const std::string& tok : sentences[i]) {
            auto it = emb.token_index_.find(tok);
            std::uint32_t id;
            if (it == emb.token_index_.end()) {
                id = static_cast<std::uint32_t>(emb.vocab_.size());
                emb.token_index_.emplace(tok, id);
                emb.vocab_.push_back(tok);
                counts.push_back(0);
            } else {
                id = it->second;
            }
            ++counts[id];
            corpus[i].push_back(id);
        }
    }
    const std::size_t vocab = emb.vocab_.size();
    if (vocab < 2) throw EmptyCorpus("vocabulary smaller than 2 tokens");

    // unigram^0.75 negative-sampling distribution, sampled by inverse CDF.
    std::vector<double> cdf(vocab);
    double total = 0.0;
    for (std::size_t i = 0; i < vocab; ++i) {
        total += std::pow(static_cast<double>(counts[i]), 0.75);
        cdf[i] = total;
    }

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto sample_negative = [&]() -> std::uint32_t {
        double r = unit(rng) * total;
        return static_cast<std::uint32_t>(
            std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
    };

    const std::size_t d = cfg.dim;
    emb.vectors_ = Mat(vocab, d);
    Mat out_vec(vocab, d);
    {
        std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(d),
                                                    0.5 / static_cast<double>(d));
        for (double& x : emb.vectors_.a) x = init(rng);
    }

    std::size_t positions_per_epoch = 0;
    for (const auto& s : corpus) positions_per_epoch += s.size();
    const double total_positions =
        static_cast<double>(std::max<std::size_t>(1, positions_per_epoch * cfg.epochs));
    std::size_t processed = 0;
    std::vector<double> grad(d);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t pairs = 0;
        for (const auto& sent : corpus) {
            for (std::size_t c = 0; c < sent.size(); ++c) {
                double lr = cfg.lr *
                    std::max(1e-4, 1.0 - static_cast<double>(processed) / total_positions);
                ++processed;
                std::uint32_t center = sent[c];
                double* vin = emb.vectors_.row(center);
                std::size_t lo = c >= cfg.window ? c - cfg.window : 0;
                std::size_t hi = std::min(sent.size(), c + cfg.window + 1);
                for (std::size_t j = lo; j < hi; ++j) {
                    if (j == c) continue;
                    std::fill(grad.begin(), grad.end(), 0.0);
                    for (std::size_t neg = 0; neg <= cfg.negatives; ++neg) {
                        std::uint32_t target;
                        double label;
                        if (neg == 0) {
                            target = sent[j];
                            label = 1.0;
                        } else {
                            target = sample_negative();
                            if (target == sent[j]) continue;
                            label = 0.0;
                        }
                        double* vout = out_vec.row(target);
                        double score = sigmoid(simd::dot(vin, vout, d));
                        epoch_loss -= label > 0.5 ? std::log(std::max(score, 1e-12))
                                                  : std::log(std::max(1.0 - score, 1e-12));
                        double g = (label - score) * lr;
                        simd::axpy(g, vout, grad.data(), d);
                        simd::axpy(g, vin, vout, d);
                    }
                    simd::axpy(1.0, grad.data(), vin, d);
                    ++pairs;
                }
            }
        }
        emb.loss_per_epoch_.push_back(pairs ? epoch_loss / static_cast<double>(pairs) : 0.0);
    }
    return emb;
}

void Embedding::encode(const Sentence& s, double* out) const {
    std::fill(out, out + dim_, 0.0);
    std::size_t hits = 0;
    for (const std::string& tok : s) {
        auto it = token_index_.find(tok);
        if (it == token_index_.end()) continue;  // OOV contributes zero
        simd::axpy(1.0, vectors_.row(it->second), out, dim_);
        ++hits;
    }
    if (hits > 0) simd::scale(1.0 / static_cast<double>(hits), out, dim_);
}

Mat Embedding::encode_all(const std::vector<Sentence>& sentences) const {
    Mat m(sentences.size(), dim_);
    for (std::size_t i = 0; i < sentences.size(); ++i) encode(sentences[i], m.row(i));
    return m;
}

void Embedding::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    binio::put_u32(os, kEmbedMagic);
    binio::put_u32(os, kVersion);
    binio::put_u64(os, vocab_.size());
    binio::put_u64(os, dim_);
    for (const auto& tok : vocab_) binio::put_str(os, tok);
    binio::put_f64s(os, vectors_.a);
}

Embedding Embedding::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    binio::check_magic(is, kEmbedMagic, "embedding");
    if (binio::get_u32(is) != kVersion) throw DataError("unsupported embedding version");
    std::uint64_t vocab = binio::get_u64(is);
    Embedding emb;
    emb.dim_ = binio::get_u64(is);
    emb.vocab_.reserve(vocab);
    for (std::uint64_t i = 0; i < vocab; ++i) {
        emb.vocab_.push_back(binio::get_str(is));
        emb.token_index_.emplace(emb.vocab_.back(), static_cast<std::uint32_t>(i));
    }
    emb.vectors_ = Mat(vocab, emb.dim_);
    binio::get_f64s(is, emb.vectors_.a, vocab * emb.dim_);
    return emb;
}

void save_signals(const std::string& path, const std::vector<std::string>& keys,
                  const Mat& signals, bool denoised) {
    if (keys.size() != signals.rows) throw ShapeMismatch("keys/signals mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    binio::put_u32(os, kSignalMagic);
    binio::put_u32(os, kVersion);
    binio::put_u32(os, denoised ? 1 : 0);
    binio::put_u64(os, signals.rows);
    binio::put_u64(os, signals.cols);
    for (const auto& k : keys) binio::put_str(os, k);
    binio::put_f64s(os, signals.a);
}

void load_signals(const std::string& path, std::vector<std::string>& keys,
                  Mat& signals, bool& denoised) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    binio::check_magic(is, kSignalMagic, "signal");
    if (binio::get_u32(is) != kVersion) throw DataError("unsupported signal version");
    denoised = binio::get_u32(is) != 0;
    std::uint64_t n = binio::get_u64(is);
    std::uint64_t d = binio::get_u64(is);
    keys.clear();
    keys.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) keys.push_back(binio::get_str(is));
    signals = Mat(n, d);
    binio::get_f64s(is, signals.a, n * d);
}

}  // namespace provsense
