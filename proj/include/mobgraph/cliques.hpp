#ifndef MOBGRAPH_CLIQUES_HPP
#define MOBGRAPH_CLIQUES_HPP

#include "common.hpp"
#include "ingest.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

/**
 * @file cliques.hpp
 *
 * @brief Maximal-clique enumeration, clique censuses and channel ranking.
 *
 * Enumeration is Bron-Kerbosch with Tomita pivoting under a degeneracy-ordered
 * outer loop. Edge weights are ignored.
 */

namespace mobgraph {

inline constexpr std::uint64_t default_clique_budget = 10'000'000;

namespace detail {

inline std::vector<std::size_t> intersect(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    out.reserve(std::min(a.size(), b.size()));
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline std::size_t intersection_size(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t count = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

/// Smallest-last ordering; returns vertices in removal order.
inline std::vector<std::size_t> degeneracy_order(const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    std::vector<std::size_t> degree(n);
    std::size_t max_degree = 0;
    for (std::size_t v = 0; v < n; ++v) {
        degree[v] = adj[v].size();
        max_degree = std::max(max_degree, degree[v]);
    }
    std::vector<std::vector<std::size_t>> buckets(max_degree + 1);
    for (std::size_t v = n; v-- > 0;) {
        buckets[degree[v]].push_back(v);
    }
    std::vector<char> removed(n, 0);
    std::vector<std::size_t> order;
    order.reserve(n);
    std::size_t low = 0;
    while (order.size() < n) {
        while (buckets[low].empty()) {
            ++low;
        }
        const std::size_t v = buckets[low].back();
        buckets[low].pop_back();
        if (removed[v] || degree[v] != low) {
            continue; // stale bucket entry
        }
        removed[v] = 1;
        order.push_back(v);
        for (auto u : adj[v]) {
            if (!removed[u]) {
                --degree[u];
                buckets[degree[u]].push_back(u);
                low = std::min(low, degree[u]);
            }
        }
    }
    return order;
}

class CliqueEnumerator {
public:
    using Sink = std::function<void(const std::vector<std::size_t>&)>;

    CliqueEnumerator(const std::vector<std::vector<std::size_t>>& adj, const Sink& sink, std::uint64_t budget)
        : adj_(adj), sink_(sink), budget_(budget) {}

    void run() {
        const auto order = degeneracy_order(adj_);
        std::vector<std::size_t> position(adj_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            position[order[i]] = i;
        }
        for (auto v : order) {
            std::vector<std::size_t> later, earlier;
            for (auto u : adj_[v]) {
                (position[u] > position[v] ? later : earlier).push_back(u);
            }
            clique_.assign(1, v);
            expand(later, earlier);
        }
    }

private:
    void emit() {
        if (++emitted_ > budget_) {
            throw Error(ErrorKind::CliqueBudgetExceeded, "more than " + std::to_string(budget_) + " maximal cliques");
        }
        auto sorted = clique_;
        std::sort(sorted.begin(), sorted.end());
        sink_(sorted);
    }

    void expand(std::vector<std::size_t> candidates, std::vector<std::size_t> excluded) {
        if (candidates.empty()) {
            if (excluded.empty()) {
                emit();
            }
            return;
        }
        // Pivot: vertex of P ∪ X with the most neighbors in P.
        std::size_t pivot = candidates.front();
        std::size_t best = 0;
        bool have = false;
        for (const auto* pool : {&candidates, &excluded}) {
            for (auto u : *pool) {
                const auto score = intersection_size(candidates, adj_[u]);
                if (!have || score > best) {
                    best = score;
                    pivot = u;
                    have = true;
                }
            }
        }
        std::vector<std::size_t> branch;
        std::set_difference(candidates.begin(), candidates.end(), adj_[pivot].begin(), adj_[pivot].end(), std::back_inserter(branch));
        for (auto v : branch) {
            clique_.push_back(v);
            expand(intersect(candidates, adj_[v]), intersect(excluded, adj_[v]));
            clique_.pop_back();
            candidates.erase(std::lower_bound(candidates.begin(), candidates.end(), v));
            excluded.insert(std::lower_bound(excluded.begin(), excluded.end(), v), v);
        }
    }

    const std::vector<std::vector<std::size_t>>& adj_;
    const Sink& sink_;
    std::uint64_t budget_;
    std::uint64_t emitted_ = 0;
    std::vector<std::size_t> clique_;
};

} // namespace detail

/**
 * Streams every maximal clique exactly once as a sorted list of node
 * indices. Throws CliqueBudgetExceeded once more than `budget` cliques
 * have been produced.
 */
inline void for_each_maximal_clique(const CoCommenterGraph& graph, const std::function<void(const std::vector<std::size_t>&)>& sink,
                                    std::uint64_t budget = default_clique_budget) {
    const auto adj = graph.adjacency();
    detail::CliqueEnumerator(adj, sink, budget).run();
}

/// All maximal cliques as sorted node-id lists, in lexicographic order.
inline std::vector<std::vector<std::string>> maximal_cliques(const CoCommenterGraph& graph, std::uint64_t budget = default_clique_budget) {
    std::vector<std::vector<std::string>> out;
    for_each_maximal_clique(
        graph,
        [&](const std::vector<std::size_t>& clique) {
            std::vector<std::string> ids;
            ids.reserve(clique.size());
            for (auto v : clique) {
                ids.push_back(graph.nodes()[v]);
            }
            out.push_back(std::move(ids));
        },
        budget);
    std::sort(out.begin(), out.end());
    return out;
}

struct CliqueCensus {
    std::string channel_id;
    std::size_t min_size = 5;
    std::uint64_t count = 0;
    /// clique size -> number of maximal cliques of that size
    std::map<std::size_t, std::uint64_t> histogram;

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& [size, c] : histogram) {
            t += c;
        }
        return t;
    }

    /// Count for another threshold, from the histogram.
    std::uint64_t count_at_least(std::size_t size) const {
        std::uint64_t t = 0;
        for (auto it = histogram.lower_bound(size); it != histogram.end(); ++it) {
            t += it->second;
        }
        return t;
    }
};

inline CliqueCensus clique_census(const CoCommenterGraph& graph, std::size_t min_size = 5, std::uint64_t budget = default_clique_budget) {
    if (min_size < 1) {
        throw Error(ErrorKind::InvalidConfig, "clique min_size must be >= 1");
    }
    CliqueCensus census;
    census.channel_id = graph.channel_id();
    census.min_size = min_size;
    for_each_maximal_clique(
        graph, [&](const std::vector<std::size_t>& clique) { ++census.histogram[clique.size()]; }, budget);
    census.count = census.count_at_least(min_size);
    return census;
}

struct RankEntry {
    std::string channel_id;
    std::size_t cluster;
    std::uint64_t count;

    friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

struct SuspiciousnessRanking {
    std::vector<RankEntry> global;
    std::map<std::size_t, std::vector<RankEntry>> per_cluster;
};

/**
 * Orders channels by census count, descending; equal counts fall back to
 * channel id order.
 */
inline SuspiciousnessRanking rank_channels(const std::vector<CliqueCensus>& censuses, const std::map<std::string, std::size_t>& cluster_of) {
    SuspiciousnessRanking ranking;
    for (const auto& c : censuses) {
        auto it = cluster_of.find(c.channel_id);
        if (it == cluster_of.end()) {
            throw Error(ErrorKind::MissingLabel, c.channel_id);
        }
        ranking.global.push_back({c.channel_id, it->second, c.count});
    }
    std::sort(ranking.global.begin(), ranking.global.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.count != b.count) {
            return a.count > b.count;
        }
        return a.channel_id < b.channel_id;
    });
    for (const auto& entry : ranking.global) {
        ranking.per_cluster[entry.cluster].push_back(entry);
    }
    return ranking;
}

} // namespace mobgraph

#endif // MOBGRAPH_CLIQUES_HPP
