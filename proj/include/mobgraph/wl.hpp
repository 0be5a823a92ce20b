#ifndef MOBGRAPH_WL_HPP
#define MOBGRAPH_WL_HPP

#include "common.hpp"
#include "ingest.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

/**
 * @file wl.hpp
 *
 * @brief Weisfeiler-Leman subtree relabeling and graph documents.
 *
 * Labels are strings aligned with `CoCommenterGraph::nodes()`. Round 0 uses
 * the decimal degree; each later round hashes the node's label together with
 * its sorted neighbor labels using `stable_hash`, rendered as 16 hex digits.
 */

namespace mobgraph {

/// Label per node, indexed like `CoCommenterGraph::nodes()`.
using NodeLabeling = std::vector<std::string>;

struct GraphDocument {
    std::string graph_id;
    std::vector<std::string> tokens;

    friend bool operator==(const GraphDocument&, const GraphDocument&) = default;
};

struct WlOptions {
    /// Append a log2 weight bucket to each neighbor label.
    bool use_weights = false;
};

inline NodeLabeling initial_labels(const CoCommenterGraph& graph) {
    std::vector<std::size_t> degree(graph.node_count(), 0);
    for (const auto& e : graph.edges()) {
        ++degree[e.source];
        ++degree[e.target];
    }
    NodeLabeling labels;
    labels.reserve(degree.size());
    for (auto d : degree) {
        labels.push_back(std::to_string(d));
    }
    return labels;
}

inline std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

/// floor(log2(weight)) for weight >= 1.
inline unsigned weight_bucket(std::uint64_t weight) {
    return static_cast<unsigned>(std::bit_width(weight) - 1);
}

inline NodeLabeling wl_iteration(const CoCommenterGraph& graph, const NodeLabeling& labels, const WlOptions& options = {}) {
    if (labels.size() != graph.node_count()) {
        throw Error(ErrorKind::InvalidConfig, "labeling does not cover the graph's nodes");
    }
    std::vector<std::vector<std::string>> neighborhood(graph.node_count());
    for (const auto& e : graph.edges()) {
        std::string to_target = labels[e.source];
        std::string to_source = labels[e.target];
        if (options.use_weights) {
            const auto suffix = ":" + std::to_string(weight_bucket(e.weight));
            to_target += suffix;
            to_source += suffix;
        }
        neighborhood[e.target].push_back(std::move(to_target));
        neighborhood[e.source].push_back(std::move(to_source));
    }

    NodeLabeling next;
    next.reserve(labels.size());
    std::string signature;
    for (std::size_t v = 0; v < labels.size(); ++v) {
        auto& around = neighborhood[v];
        std::sort(around.begin(), around.end());
        signature = labels[v];
        signature.push_back('|');
        for (std::size_t i = 0; i < around.size(); ++i) {
            if (i) {
                signature.push_back(',');
            }
            signature += around[i];
        }
        next.push_back(hex64(stable_hash(signature)));
    }
    return next;
}

/**
 * Tokens for rounds 0..iterations, each round's labels in sorted node-id
 * order and prefixed with "<round>_".
 */
inline GraphDocument extract_document(const CoCommenterGraph& graph, unsigned iterations = 2, const WlOptions& options = {}) {
    GraphDocument doc;
    doc.graph_id = graph.channel_id();
    doc.tokens.reserve(graph.node_count() * (iterations + 1));
    NodeLabeling labels = initial_labels(graph);
    for (unsigned round = 0;; ++round) {
        const auto prefix = std::to_string(round) + "_";
        for (const auto& label : labels) {
            doc.tokens.push_back(prefix + label);
        }
        if (round == iterations) {
            break;
        }
        labels = wl_iteration(graph, labels, options);
    }
    return doc;
}

/// Debug dump: `graph_id<TAB>token token ...`, one document per line.
inline void write_documents(const std::vector<GraphDocument>& documents, std::ostream& out) {
    for (const auto& doc : documents) {
        out << doc.graph_id << '\t';
        for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
            if (i) {
                out << ' ';
            }
            out << doc.tokens[i];
        }
        out << '\n';
    }
}

} // namespace mobgraph

#endif // MOBGRAPH_WL_HPP
