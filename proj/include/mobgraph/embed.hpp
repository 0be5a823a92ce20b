#ifndef MOBGRAPH_EMBED_HPP
#define MOBGRAPH_EMBED_HPP

#include "common.hpp"
#include "matrix_io.hpp"
#include "wl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file embed.hpp
 *
 * @brief Whole-graph embeddings trained from WL documents.
 *
 * Training is distributed bag-of-words with negative sampling: every graph
 * owns a document vector, every retained token an output vector, and each
 * (graph, token) occurrence is a positive pair contrasted with `negative`
 * noise tokens drawn from the unigram distribution raised to 3/4.
 */

namespace mobgraph {

class Vocabulary {
public:
    Vocabulary() = default;

    /// Tokens are indexed in sorted order.
    Vocabulary(const std::map<std::string, std::uint64_t>& counts, std::uint64_t min_count) {
        for (const auto& [token, count] : counts) {
            if (count >= min_count) {
                index_.emplace(token, tokens_.size());
                tokens_.push_back(token);
                counts_.push_back(count);
            }
        }
    }

    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }

    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

    std::optional<std::size_t> find(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    std::uint64_t count(const std::string& token) const {
        auto i = find(token);
        return i ? counts_[*i] : 0;
    }

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
};

/**
 * Keeps tokens whose corpus-wide frequency is at least `min_count`.
 * Throws EmptyVocabulary when nothing survives.
 */
inline Vocabulary build_vocabulary(const std::vector<GraphDocument>& documents, std::uint64_t min_count = 5) {
    if (documents.empty()) {
        throw Error(ErrorKind::EmptyVocabulary, "no documents");
    }
    std::map<std::string, std::uint64_t> counts;
    for (const auto& doc : documents) {
        for (const auto& token : doc.tokens) {
            ++counts[token];
        }
    }
    Vocabulary vocab(counts, min_count);
    if (vocab.empty()) {
        throw Error(ErrorKind::EmptyVocabulary, "no token reaches min_count=" + std::to_string(min_count) + " over " +
                                                    std::to_string(documents.size()) + " documents");
    }
    return vocab;
}

inline double sigmoid(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

/// log σ(d·t) + Σ log σ(−d·nᵢ) for one positive pair and its noise tokens.
inline double pair_objective(std::span<const double> doc, std::span<const double> target,
                             const std::vector<std::span<const double>>& noise) {
    double value = log_sigmoid(dot(doc, target));
    for (const auto& n : noise) {
        value += log_sigmoid(-dot(doc, n));
    }
    return value;
}

struct PairGradient {
    std::vector<double> doc;
    std::vector<double> target;
    std::vector<std::vector<double>> noise;
};

/// Analytic gradient of `pair_objective` with respect to every vector involved.
inline PairGradient pair_gradient(std::span<const double> doc, std::span<const double> target,
                                  const std::vector<std::span<const double>>& noise) {
    const std::size_t dim = doc.size();
    PairGradient g{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0), {}};
    const double pos = 1.0 - sigmoid(dot(doc, target));
    for (std::size_t i = 0; i < dim; ++i) {
        g.doc[i] += pos * target[i];
        g.target[i] = pos * doc[i];
    }
    for (const auto& n : noise) {
        const double neg = -sigmoid(dot(doc, n));
        std::vector<double> gn(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            g.doc[i] += neg * n[i];
            gn[i] = neg * doc[i];
        }
        g.noise.push_back(std::move(gn));
    }
    return g;
}

struct EmbedOptions {
    std::size_t dim = 128;
    double learning_rate = 0.025;
    /// Final learning rate as a fraction of the initial one.
    double min_learning_rate_ratio = 0.01;
    std::size_t epochs = 10;
    std::size_t negative = 5;
    /// Token subsampling threshold. Only 0 (disabled) is accepted.
    double sample = 0.0;
    std::uint64_t seed = 42;
};

struct EmbeddingResult {
    EmbeddingMatrix embeddings;
    /// Mean per-pair objective after each epoch (fixed noise draws).
    std::vector<double> epoch_objective;
    std::vector<std::string> warnings;
};

namespace detail {

inline void init_uniform(std::span<double> row, std::uint64_t seed) {
    Rng rng(seed);
    const double half = 0.5 / static_cast<double>(row.size());
    for (auto& v : row) {
        v = rng.uniform(-half, half);
    }
}

class NoiseSampler {
public:
    explicit NoiseSampler(const Vocabulary& vocab) {
        cumulative_.reserve(vocab.size());
        double total = 0;
        for (auto c : vocab.counts()) {
            total += std::pow(static_cast<double>(c), 0.75);
            cumulative_.push_back(total);
        }
    }

    std::size_t draw(Rng& rng) const {
        const double u = rng.uniform() * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    }

private:
    std::vector<double> cumulative_;
};

} // namespace detail

/**
 * Trains one vector per document. Documents are visited in graph-id order
 * and every vector is initialized from a seed derived from its own graph id
 * or token, so the result does not depend on the input order of `documents`;
 * rows come back in input order.
 */
inline EmbeddingResult train_embeddings(const std::vector<GraphDocument>& documents, const Vocabulary& vocab,
                                        const EmbedOptions& options = {}) {
    if (vocab.empty()) {
        throw Error(ErrorKind::EmptyVocabulary, "vocabulary is empty");
    }
    if (options.dim == 0 || options.epochs == 0 || !(options.learning_rate > 0)) {
        throw Error(ErrorKind::InvalidConfig, "dim, epochs and learning_rate must be positive");
    }
    if (options.sample != 0.0) {
        throw Error(ErrorKind::InvalidConfig, "token subsampling is not supported; sample must be 0");
    }
    const std::size_t dim = options.dim;
    const std::size_t n_docs = documents.size();

    EmbeddingResult result;
    result.embeddings.ids.reserve(n_docs);
    for (const auto& doc : documents) {
        result.embeddings.ids.push_back(doc.graph_id);
    }
    std::vector<std::size_t> order(n_docs);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return documents[a].graph_id < documents[b].graph_id; });
    for (std::size_t i = 1; i < n_docs; ++i) {
        if (documents[order[i]].graph_id == documents[order[i - 1]].graph_id) {
            throw Error(ErrorKind::InvalidConfig, "duplicate graph id '" + documents[order[i]].graph_id + "'");
        }
    }

    Matrix& doc_vectors = result.embeddings.values;
    doc_vectors = Matrix(n_docs, dim);
    for (std::size_t d = 0; d < n_docs; ++d) {
        detail::init_uniform(doc_vectors.row(d), derive_seed(options.seed, "doc:" + documents[d].graph_id));
    }
    Matrix token_vectors(vocab.size(), dim);
    for (std::size_t t = 0; t < vocab.size(); ++t) {
        detail::init_uniform(token_vectors.row(t), derive_seed(options.seed, "token:" + vocab.tokens()[t]));
    }

    std::vector<std::vector<std::size_t>> retained(n_docs);
    std::size_t pairs_per_epoch = 0;
    for (std::size_t d = 0; d < n_docs; ++d) {
        for (const auto& token : documents[d].tokens) {
            if (auto idx = vocab.find(token)) {
                retained[d].push_back(*idx);
            }
        }
        if (retained[d].empty()) {
            result.warnings.push_back("graph '" + documents[d].graph_id + "' has no in-vocabulary tokens; its vector stays at initialization");
        }
        pairs_per_epoch += retained[d].size();
    }

    const detail::NoiseSampler sampler(vocab);
    Rng rng(derive_seed(options.seed, "train"));
    const double lr0 = options.learning_rate;
    const double lr_min = lr0 * options.min_learning_rate_ratio;
    const double total_updates = static_cast<double>(pairs_per_epoch * options.epochs);
    std::size_t step = 0;

    std::vector<double> doc_update(dim);
    std::vector<std::size_t> noise(options.negative);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        for (std::size_t d : order) {
            auto doc_vec = doc_vectors.row(d);
            for (std::size_t target : retained[d]) {
                const double lr = lr0 - (lr0 - lr_min) * (static_cast<double>(step) / total_updates);
                ++step;
                for (auto& n : noise) {
                    n = sampler.draw(rng);
                }

                std::fill(doc_update.begin(), doc_update.end(), 0.0);
                for (std::size_t s = 0; s <= options.negative; ++s) {
                    const bool positive = s == 0;
                    const std::size_t token = positive ? target : noise[s - 1];
                    if (!positive && token == target) {
                        continue;
                    }
                    auto out_vec = token_vectors.row(token);
                    const double score = dot(doc_vec, out_vec);
                    if (!std::isfinite(score)) {
                        throw Error(ErrorKind::NonFiniteUpdate, "epoch " + std::to_string(epoch) + ", graph '" + documents[d].graph_id +
                                                                    "', token '" + vocab.tokens()[token] + "', lr " + format_double(lr));
                    }
                    const double g = ((positive ? 1.0 : 0.0) - sigmoid(score)) * lr;
                    for (std::size_t i = 0; i < dim; ++i) {
                        doc_update[i] += g * out_vec[i];
                        out_vec[i] += g * doc_vec[i];
                    }
                }
                for (std::size_t i = 0; i < dim; ++i) {
                    doc_vec[i] += doc_update[i];
                }
            }
        }
        // Evaluated after the epoch with the same noise draws every time, so the
        // trajectory reflects the parameters rather than sampling noise.
        Rng eval_rng(derive_seed(options.seed, "objective"));
        double objective = 0;
        for (std::size_t d : order) {
            const auto doc_vec = doc_vectors.row(d);
            for (std::size_t target : retained[d]) {
                objective += log_sigmoid(dot(doc_vec, token_vectors.row(target)));
                for (std::size_t s = 0; s < options.negative; ++s) {
                    const std::size_t token = sampler.draw(eval_rng);
                    if (token != target) {
                        objective += log_sigmoid(-dot(doc_vec, token_vectors.row(token)));
                    }
                }
            }
        }
        result.epoch_objective.push_back(pairs_per_epoch ? objective / static_cast<double>(pairs_per_epoch) : 0.0);
    }

    if (!doc_vectors.all_finite()) {
        throw Error(ErrorKind::NonFiniteUpdate, "document vectors contain non-finite values after training");
    }
    return result;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0 || nb == 0) {
        throw Error(ErrorKind::ZeroVector, "cosine similarity of a zero vector");
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

} // namespace mobgraph

#endif // MOBGRAPH_EMBED_HPP
