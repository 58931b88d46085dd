#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "provsense/core/mat.hpp"
#include "provsense/graph/provgraph.hpp"

namespace provsense {

using Sentence = std::vector<std::string>;

// Tokens for one node: [kind] ++ name/path/ip tokens ++ per incident edge in
// timestamp order [relation, neighbor kind]. Paths split on '/', lowercased.
Sentence build_sentence(const ProvGraph& g, std::size_t v);
std::vector<Sentence> build_sentences(const ProvGraph& g);

struct EmbedConfig {
    std::size_t dim = 32;
    std::size_t window = 2;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double lr = 0.025;
    std::uint64_t seed = 0;
};

// Skip-gram-with-negative-sampling model trained on the node sentences.
// Node vectors are the mean of their sentence's token vectors;
// out-of-vocabulary tokens map to zero at inference.
class Embedding {
public:
    static Embedding train(const std::vector<Sentence>& sentences, const EmbedConfig& cfg);

    std::size_t dim() const { return dim_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    const std::vector<double>& loss_per_epoch() const { return loss_per_epoch_; }

    // Mean of token vectors; unseen tokens contribute zero.
    void encode(const Sentence& s, double* out) const;
    Mat encode_all(const std::vector<Sentence>& sentences) const;

    void save(const std::string& path) const;
    static Embedding load(const std::string& path);

private:
    std::size_t dim_ = 0;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, std::uint32_t> token_index_;
    Mat vectors_;  // vocab x dim input vectors
    std::vector<double> loss_per_epoch_;
};

// Raw/denoised signal checkpoints: node keys plus an n x d row-major matrix.
void save_signals(const std::string& path, const std::vector<std::string>& keys,
                  const Mat& signals, bool denoised);
void load_signals(const std::string& path, std::vector<std::string>& keys,
                  Mat& signals, bool& denoised);

}  // namespace provsense
