#include "mobgraph/cliques.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mobgraph;
using namespace mobgraph::testing;

namespace {

using E = std::tuple<std::string, std::string, std::uint64_t>;

CoCommenterGraph complete(std::size_t n) {
    std::vector<E> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(node_name(i), node_name(j), 1);
    return CoCommenterGraph("k" + std::to_string(n), {}, edges);
}

CliqueCensus census(const std::string& id, std::uint64_t count) {
    CliqueCensus c;
    c.channel_id = id;
    c.count = count;
    return c;
}

} // namespace

TEST(MaximalCliques, CompleteGraph) {
    const auto cliques = maximal_cliques(complete(5));
    ASSERT_EQ(cliques.size(), 1U);
    EXPECT_EQ(cliques[0].size(), 5U);
}

TEST(MaximalCliques, TriangleWithPendant) {
    const CoCommenterGraph g("g", {}, std::vector<E>{{"a", "b", 1}, {"b", "c", 1}, {"a", "c", 1}, {"a", "d", 1}});
    EXPECT_EQ(maximal_cliques(g), (std::vector<std::vector<std::string>>{{"a", "b", "c"}, {"a", "d"}}));
}

TEST(MaximalCliques, IsolatedNodeIsASingletonClique) {
    const CoCommenterGraph g("g", {"z"}, std::vector<E>{{"a", "b", 1}});
    EXPECT_EQ(maximal_cliques(g), (std::vector<std::vector<std::string>>{{"a", "b"}, {"z"}}));
    EXPECT_TRUE(maximal_cliques(CoCommenterGraph("e", {}, {})).empty());
}

TEST(MaximalCliques, MatchAllSubsetsOracle) {
    Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const double p = std::array<double, 3>{0.2, 0.4, 0.6}[trial % 3];
        const auto g = random_graph(rng, 1 + rng.index(15), p);
        const auto found = maximal_cliques(g);
        const std::set<std::vector<std::string>> as_set(found.begin(), found.end());
        EXPECT_EQ(as_set.size(), found.size()) << "clique emitted twice";
        EXPECT_EQ(as_set, brute_force_maximal_cliques(g));
    }
}

TEST(MaximalCliques, InvariantUnderRelabeling) {
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = random_graph(rng, 12, 0.5);
        const auto perm = random_permutation(rng, g.node_count());
        const auto h = permuted_copy(g, perm);
        std::set<std::vector<std::string>> mapped;
        for (auto clique : maximal_cliques(g)) {
            for (auto& id : clique) id = "p" + std::to_string(perm[g.index_of(id).value()]);
            std::sort(clique.begin(), clique.end());
            mapped.insert(clique);
        }
        const auto direct = maximal_cliques(h);
        EXPECT_EQ(mapped, std::set<std::vector<std::string>>(direct.begin(), direct.end()));
    }
}

TEST(MaximalCliques, LargerGraphsAreCompleteAndMaximal) {
    Rng rng(33);
    const auto g = random_graph(rng, 60, 0.3);
    const auto adj = g.adjacency();
    std::size_t checked = 0;
    for_each_maximal_clique(g, [&](const std::vector<std::size_t>& c) {
        for (std::size_t i = 0; i < c.size(); ++i)
            for (std::size_t j = i + 1; j < c.size(); ++j)
                ASSERT_TRUE(std::binary_search(adj[c[i]].begin(), adj[c[i]].end(), c[j]));
        for (std::size_t v = 0; v < adj.size(); ++v) {
            if (std::binary_search(c.begin(), c.end(), v)) continue;
            bool extends = true;
            for (auto u : c) extends = extends && std::binary_search(adj[v].begin(), adj[v].end(), u);
            ASSERT_FALSE(extends);
        }
        ++checked;
    });
    EXPECT_GT(checked, 0U);
}

TEST(MaximalCliques, DegeneracyOrderIsAPermutation) {
    Rng rng(34);
    const auto g = random_graph(rng, 40, 0.2);
    auto order = detail::degeneracy_order(g.adjacency());
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
}

TEST(MaximalCliques, BudgetExceeded) {
    // Complement of a perfect matching on 2m nodes has 2^m maximal cliques.
    std::vector<E> edges;
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = i + 1; j < 20; ++j)
            if (j != i + 1 || i % 2 == 1) edges.emplace_back(node_name(i), node_name(j), 1);
    const CoCommenterGraph g("dense", {}, edges);
    EXPECT_EQ(clique_census(g, 1).total(), 1024U);
    try {
        clique_census(g, 1, 1000);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CliqueBudgetExceeded);
    }
}

TEST(Census, CompleteGraphThresholds) {
    EXPECT_EQ(clique_census(complete(4), 5).count, 0U);
    EXPECT_EQ(clique_census(complete(6), 5).count, 1U);
    EXPECT_THROW(clique_census(complete(3), 0), Error);
}

TEST(Census, MonotoneAndHistogramConsistent) {
    Rng rng(35);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = random_graph(rng, 1 + rng.index(15), 0.5);
        const auto oracle = brute_force_maximal_cliques(g);
        std::uint64_t previous = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t s = 1; s <= 6; ++s) {
            const auto c = clique_census(g, s);
            const auto expected = static_cast<std::uint64_t>(std::count_if(oracle.begin(), oracle.end(), [&](const auto& q) { return q.size() >= s; }));
            EXPECT_EQ(c.count, expected);
            EXPECT_EQ(c.total(), oracle.size());
            EXPECT_LE(c.count, previous);
            previous = c.count;
        }
    }
}

TEST(Ranking, DescendingWithLexicographicTies) {
    const auto ranking = rank_channels({census("A", 3), census("C", 7), census("B", 7)}, {{"A", 0}, {"B", 1}, {"C", 0}});
    ASSERT_EQ(ranking.global.size(), 3U);
    EXPECT_EQ(ranking.global[0], (RankEntry{"B", 1, 7}));
    EXPECT_EQ(ranking.global[1], (RankEntry{"C", 0, 7}));
    EXPECT_EQ(ranking.global[2], (RankEntry{"A", 0, 3}));
    ASSERT_EQ(ranking.per_cluster.at(0).size(), 2U);
    EXPECT_EQ(ranking.per_cluster.at(0)[0].channel_id, "C");
    EXPECT_EQ(ranking.per_cluster.at(1)[0].channel_id, "B");
}

TEST(Ranking, AllZeroIsLexicographic) {
    const auto ranking = rank_channels({census("z", 0), census("a", 0), census("m", 0)}, {{"z", 0}, {"a", 0}, {"m", 0}});
    EXPECT_EQ(ranking.global[0].channel_id, "a");
    EXPECT_EQ(ranking.global[1].channel_id, "m");
    EXPECT_EQ(ranking.global[2].channel_id, "z");
}

TEST(Ranking, MissingLabel) {
    try {
        rank_channels({census("x", 1)}, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingLabel);
    }
}
