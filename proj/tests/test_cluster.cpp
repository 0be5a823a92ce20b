#include "mobgraph/cluster.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mobgraph;
using namespace mobgraph::testing;

namespace {

Matrix column(std::initializer_list<double> xs) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

Labels halves(std::size_t n) {
    Labels l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = i < n / 2 ? 0 : 1;
    return l;
}

std::set<std::set<std::size_t>> groups(const Labels& labels) {
    std::map<std::size_t, std::set<std::size_t>> by;
    for (std::size_t i = 0; i < labels.size(); ++i) by[labels[i]].insert(i);
    std::set<std::set<std::size_t>> out;
    for (auto& [l, g] : by) out.insert(g);
    return out;
}

} // namespace

TEST(KMeans, KEqualsNGivesZeroInertia) {
    Rng rng(1);
    const auto pts = random_points(rng, 8, 3);
    const auto r = kmeans(pts, 8, 1);
    EXPECT_EQ(r.inertia, 0.0);
    EXPECT_EQ(std::set<std::size_t>(r.labels.begin(), r.labels.end()).size(), 8U);
}

TEST(KMeans, KOneIsTheMean) {
    Rng rng(2);
    const auto pts = random_points(rng, 15, 4);
    const auto r = kmeans(pts, 1, 2);
    double total = 0;
    for (std::size_t d = 0; d < 4; ++d) {
        double mean = 0;
        for (std::size_t i = 0; i < 15; ++i) mean += pts(i, d);
        mean /= 15;
        EXPECT_NEAR(r.centroids(0, d), mean, 1e-12);
        for (std::size_t i = 0; i < 15; ++i) total += (pts(i, d) - mean) * (pts(i, d) - mean);
    }
    EXPECT_NEAR(r.inertia, total, 1e-9);
}

TEST(KMeans, InvariantsHold) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = random_points(rng, 30, 3);
        const std::size_t k = 2 + rng.index(5);
        const auto r = kmeans(pts, k, trial, 3);
        std::vector<std::size_t> sizes(k, 0);
        for (auto l : r.labels) {
            ASSERT_LT(l, k);
            ++sizes[l];
        }
        for (auto s : sizes) EXPECT_GT(s, 0U);
        double inertia = 0;
        for (std::size_t i = 0; i < 30; ++i) inertia += squared_distance(pts.row(i), r.centroids.row(r.labels[i]));
        EXPECT_NEAR(r.inertia, inertia, 1e-9);
        for (std::size_t t = 1; t < r.inertia_trace.size(); ++t) {
            EXPECT_LE(r.inertia_trace[t], r.inertia_trace[t - 1] + 1e-12);
        }
    }
}

TEST(KMeans, DuplicatePointsStillFillEveryCluster) {
    Matrix pts(6, 2, 1.0);
    pts(5, 0) = 2.0;
    const auto r = kmeans(pts, 4, 0, 2);
    std::set<std::size_t> used(r.labels.begin(), r.labels.end());
    EXPECT_EQ(used.size(), 4U);
}

TEST(KMeans, InvalidK) {
    Rng rng(4);
    const auto pts = random_points(rng, 5, 2);
    EXPECT_THROW(kmeans(pts, 0, 1), Error);
    EXPECT_THROW(kmeans(pts, 6, 1), Error);
}

TEST(KMeans, RecoversPlantedBlobs) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed + 500);
        const auto pts = gaussian_blobs(rng, 15, 4, 10.0);
        hits += same_partition(kmeans(pts, 2, seed).labels, halves(30));
    }
    EXPECT_GE(hits, 9);
}

TEST(Silhouette, CoincidentPairsScoreOne) {
    EXPECT_DOUBLE_EQ(silhouette_score(column({0, 0, 10, 10}), {0, 0, 1, 1}), 1.0);
}

TEST(Silhouette, SingletonContributesZero) {
    const auto pts = column({0, 0, 10});
    EXPECT_DOUBLE_EQ(silhouette_score(pts, {0, 0, 1}), 2.0 / 3.0);
}

TEST(Silhouette, SingleClusterIsAnError) {
    EXPECT_THROW(silhouette_score(column({0, 1, 2}), {0, 0, 0}), Error);
}

TEST(Silhouette, MatchesDirectFormulaAndIsPermutationInvariant) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto pts = random_points(rng, 20, 4);
        const auto labels = random_labels(rng, 20, 2 + rng.index(4));
        const double s = silhouette_score(pts, labels);
        EXPECT_NEAR(s, silhouette_oracle(pts, labels), 1e-9);
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
        const std::size_t k = cluster_count(labels);
        const auto perm = random_permutation(rng, k);
        Labels relabeled(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) relabeled[i] = perm[labels[i]];
        EXPECT_NEAR(silhouette_score(pts, relabeled), s, 1e-12);
        EXPECT_NEAR(davies_bouldin(pts, relabeled), davies_bouldin(pts, labels), 1e-12);
    }
}

TEST(SelectK, PlantedBlobsGiveTwo) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed + 900);
        const auto pts = gaussian_blobs(rng, 12, 4, 12.0);
        const auto sel = select_k_by_silhouette(pts, 2, default_k_max(24), seed, 5);
        hits += sel.best_k == 2;
        EXPECT_EQ(sel.scores.size(), 9U);
    }
    EXPECT_GE(hits, 9);
}

TEST(SelectK, TiesGoToSmallerK) {
    // All points coincide: every k scores exactly 0.
    const Matrix pts(9, 2, 3.0);
    const auto sel = select_k_by_silhouette(pts, 2, 5, 1, 2);
    for (const auto& [k, s] : sel.scores) EXPECT_EQ(s, 0.0);
    EXPECT_EQ(sel.best_k, 2U);
    EXPECT_EQ(default_k_max(30), 10U);
    EXPECT_EQ(default_k_max(6), 5U);
    EXPECT_THROW(select_k_by_silhouette(pts, 1, 3, 1), Error);
}

TEST(SingleLinkage, CollinearHandExample) {
    const auto tree = single_linkage(column({0, 1, 3}));
    ASSERT_EQ(tree.merges.size(), 2U);
    EXPECT_EQ(tree.merges[0], (Merge{0, 1, 1.0, 2}));
    EXPECT_EQ(tree.merges[1], (Merge{2, 3, 2.0, 3}));
}

TEST(SingleLinkage, DuplicatePointMergesAtZero) {
    const auto tree = single_linkage(column({5, 1, 5}));
    EXPECT_EQ(tree.merges[0], (Merge{0, 2, 0.0, 2}));
    EXPECT_THROW(single_linkage(column({1})), Error);
}

TEST(SingleLinkage, TieBreakUsesSmallestIds) {
    // 0–1 and 2–3 both at distance 1: the (0,1) pair merges first.
    const auto tree = single_linkage(column({0, 1, 10, 11}));
    EXPECT_EQ(tree.merges[0].left, 0U);
    EXPECT_EQ(tree.merges[0].right, 1U);
    EXPECT_EQ(tree.merges[1].left, 2U);
    EXPECT_EQ(tree.merges[1].right, 3U);
}

TEST(SingleLinkage, HeightsEqualSortedMstWeights) {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = random_points(rng, 20, 4);
        const auto tree = single_linkage(pts);
        const auto mst = mst_weights(pts);
        ASSERT_EQ(tree.merges.size(), mst.size());
        std::size_t size_check = 0;
        for (std::size_t m = 0; m < mst.size(); ++m) {
            EXPECT_NEAR(tree.merges[m].height, mst[m], 1e-12);
            if (m) {
                EXPECT_GE(tree.merges[m].height, tree.merges[m - 1].height);
            }
            size_check = tree.merges[m].size;
        }
        EXPECT_EQ(size_check, 20U);
    }
}

TEST(CutTree, Extremes) {
    Rng rng(7);
    const auto pts = random_points(rng, 10, 2);
    const auto tree = single_linkage(pts);
    EXPECT_EQ(cut_tree(tree, 1), Labels(10, 0));
    Labels identity(10);
    std::iota(identity.begin(), identity.end(), 0);
    EXPECT_EQ(cut_tree(tree, 10), identity);
    EXPECT_THROW(cut_tree(tree, 0), Error);
    EXPECT_THROW(cut_tree(tree, 11), Error);
}

TEST(CutTree, LabelsNumberedBySmallestLeaf) {
    const auto tree = single_linkage(column({10, 0, 11, 1}));
    EXPECT_EQ(cut_tree(tree, 2), (Labels{0, 1, 0, 1}));
}

TEST(CutTree, ConsecutiveCutsDifferByOneSplit) {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pts = random_points(rng, 15, 3);
        const auto tree = single_linkage(pts);
        for (std::size_t k = 1; k < 15; ++k) {
            const auto coarse = groups(cut_tree(tree, k));
            const auto fine = groups(cut_tree(tree, k + 1));
            std::vector<std::set<std::size_t>> only_coarse, only_fine;
            std::set_difference(coarse.begin(), coarse.end(), fine.begin(), fine.end(), std::back_inserter(only_coarse));
            std::set_difference(fine.begin(), fine.end(), coarse.begin(), coarse.end(), std::back_inserter(only_fine));
            ASSERT_EQ(only_coarse.size(), 1U);
            ASSERT_EQ(only_fine.size(), 2U);
            std::set<std::size_t> joined = only_fine[0];
            joined.insert(only_fine[1].begin(), only_fine[1].end());
            EXPECT_EQ(joined, only_coarse[0]);
        }
    }
}

TEST(CutTree, RecoversPlantedBlobs) {
    Rng rng(9);
    const auto pts = gaussian_blobs(rng, 10, 4, 15.0);
    EXPECT_TRUE(same_partition(cut_tree(single_linkage(pts), 2), halves(20)));
}

TEST(Cophenetic, UltrametricGivesOne) {
    // Distances {0,1,1,1,1,0} are already ultrametric, so cophenetic equals original.
    const auto pts = column({0, 0, 1, 1});
    EXPECT_NEAR(cophenetic_correlation(single_linkage(pts), pts), 1.0, 1e-12);
    const auto two_level = column({0, 0, 0, 5, 5, 5});
    EXPECT_NEAR(cophenetic_correlation(single_linkage(two_level), two_level), 1.0, 1e-12);
}

TEST(Cophenetic, ConstantDistancesAreDegenerate) {
    Matrix simplex(3, 3);
    simplex(0, 0) = simplex(1, 1) = simplex(2, 2) = 1;
    try {
        cophenetic_correlation(single_linkage(simplex), simplex);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateVariance);
    }
}

TEST(Cophenetic, MatchesAllPairsOracle) {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = random_points(rng, 20, 4);
        const auto tree = single_linkage(pts);
        const auto coph = cophenetic_distances(tree);
        const auto oracle = cophenetic_oracle(tree);
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 20; ++j)
                if (i != j) {
                    EXPECT_EQ(coph(i, j), oracle[i][j]);
                }
        const double c = cophenetic_correlation(tree, pts);
        EXPECT_NEAR(c, cophenetic_correlation_oracle(tree, pts), 1e-9);
        EXPECT_GE(c, -1.0);
        EXPECT_LE(c, 1.0);
    }
}

TEST(DaviesBouldin, SingletonsScoreZero) {
    EXPECT_EQ(davies_bouldin(column({0, 5}), {0, 1}), 0.0);
}

TEST(DaviesBouldin, Errors) {
    EXPECT_THROW(davies_bouldin(column({0, 5}), {0, 0}), Error);
    try {
        davies_bouldin(column({-1, 1, 0}), {0, 0, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CoincidentCentroids);
    }
}

TEST(DaviesBouldin, MatchesDirectFormula) {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const auto pts = random_points(rng, 20, 4);
        const auto labels = random_labels(rng, 20, 2 + rng.index(4));
        const double db = davies_bouldin(pts, labels);
        EXPECT_NEAR(db, davies_bouldin_oracle(pts, labels), 1e-9);
        EXPECT_GE(db, 0.0);
    }
}

TEST(AdjustedRand, KnownValues) {
    EXPECT_DOUBLE_EQ(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}), 1.0);
    // sklearn.metrics.adjusted_rand_score([0,0,1,1],[0,0,1,2]) = 0.5714285714285715
    EXPECT_NEAR(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 2}), 4.0 / 7.0, 1e-12);
    // ([0,0,0,1,1,1],[0,0,1,1,2,2]) = 0.24242424242424246
    EXPECT_NEAR(adjusted_rand_index({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}), 8.0 / 33.0, 1e-12);
}

TEST(SelectCut, PrefersPlantedSplit) {
    Rng rng(12);
    const auto pts = gaussian_blobs(rng, 10, 4, 15.0);
    const auto sel = select_cut_by_silhouette(single_linkage(pts), pts, 2, default_k_max(20));
    EXPECT_EQ(sel.best_k, 2U);
}
