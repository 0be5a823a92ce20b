#ifndef MOBGRAPH_CLUSTER_HPP
#define MOBGRAPH_CLUSTER_HPP

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

/**
 * @file cluster.hpp
 *
 * @brief K-means and single-linkage clustering plus cluster-quality metrics.
 */

namespace mobgraph {

using Labels = std::vector<std::size_t>;

struct KMeansResult {
    Labels labels;
    Matrix centroids;
    double inertia = 0;
    std::size_t iterations = 0;
    /// Inertia after each Lloyd iteration of the winning restart.
    std::vector<double> inertia_trace;
};

namespace detail {

inline double assign_nearest(const Matrix& points, const Matrix& centroids, Labels& labels) {
    double inertia = 0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < centroids.rows(); ++c) {
            const double d = squared_distance(points.row(i), centroids.row(c));
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        labels[i] = arg;
        inertia += best;
    }
    return inertia;
}

inline Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centroids(k, points.cols());
    std::size_t first = rng.index(n);
    std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());
    std::vector<double> closest(n);
    for (std::size_t i = 0; i < n; ++i) {
        closest[i] = squared_distance(points.row(i), centroids.row(0));
    }
    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0) {
            const double u = rng.uniform() * total;
            double acc = 0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += closest[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.index(n);
        }
        std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) {
            closest[i] = std::min(closest[i], squared_distance(points.row(i), centroids.row(c)));
        }
    }
    return centroids;
}

// Recomputes centroids as member means. Empty clusters take the point farthest
// from its own centroid, which is then reassigned to the empty cluster.
inline Matrix update_centroids(const Matrix& points, Labels& labels, const Matrix& previous, std::size_t k) {
    const std::size_t d = points.cols();
    Matrix centroids(k, d);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        ++sizes[labels[i]];
        auto row = points.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            centroids(labels[i], j) += row[j];
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) {
            double worst = -1;
            std::size_t far = 0;
            for (std::size_t i = 0; i < points.rows(); ++i) {
                if (sizes[labels[i]] <= 1) {
                    continue;
                }
                const double dist = squared_distance(points.row(i), previous.row(labels[i]));
                if (dist > worst) {
                    worst = dist;
                    far = i;
                }
            }
            auto row = points.row(far);
            const std::size_t old = labels[far];
            for (std::size_t j = 0; j < d; ++j) {
                centroids(old, j) -= row[j];
                centroids(c, j) = row[j];
            }
            --sizes[old];
            sizes[c] = 1;
            labels[far] = c;
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            centroids(c, j) /= static_cast<double>(sizes[c]);
        }
    }
    return centroids;
}

inline double inertia_of(const Matrix& points, const Labels& labels, const Matrix& centroids) {
    double total = 0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        total += squared_distance(points.row(i), centroids.row(labels[i]));
    }
    return total;
}

} // namespace detail

/**
 * Lloyd's algorithm from k-means++ seeds, best of `n_init` restarts by
 * inertia (earlier restart wins ties). Stops when assignments are stable or
 * after `max_iterations`.
 */
inline KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t n_init = 10,
                           std::size_t max_iterations = 300) {
    const std::size_t n = points.rows();
    if (k < 1 || k > n) {
        throw Error(ErrorKind::InvalidK, "k=" + std::to_string(k) + " with " + std::to_string(n) + " points");
    }
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t restart = 0; restart < std::max<std::size_t>(n_init, 1); ++restart) {
        Rng rng(derive_seed(seed, restart));
        Matrix centroids = detail::kmeans_plus_plus(points, k, rng);
        Labels labels(n, 0);
        detail::assign_nearest(points, centroids, labels);
        KMeansResult run;
        for (std::size_t iter = 0; iter < max_iterations; ++iter) {
            centroids = detail::update_centroids(points, labels, centroids, k);
            Labels next(n, 0);
            detail::assign_nearest(points, centroids, next);
            ++run.iterations;
            const bool stable = next == labels;
            if (!stable) {
                // Keep every cluster occupied after reassignment too.
                std::vector<std::size_t> sizes(k, 0);
                for (auto l : next) {
                    ++sizes[l];
                }
                labels = std::move(next);
                if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
                    centroids = detail::update_centroids(points, labels, centroids, k);
                }
            }
            run.inertia_trace.push_back(detail::inertia_of(points, labels, centroids));
            if (stable) {
                break;
            }
        }
        centroids = detail::update_centroids(points, labels, centroids, k);
        run.labels = std::move(labels);
        run.centroids = std::move(centroids);
        run.inertia = detail::inertia_of(points, run.labels, run.centroids);
        if (run.inertia < best.inertia) {
            best = std::move(run);
        }
    }
    return best;
}

inline std::size_t cluster_count(const Labels& labels) {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

/**
 * Mean silhouette. Points alone in their cluster score 0.
 */
inline double silhouette_score(const Matrix& points, const Labels& labels) {
    const std::size_t n = points.rows();
    const std::size_t k = cluster_count(labels);
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) {
        ++sizes[l];
    }
    const auto occupied = static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }));
    if (occupied < 2) {
        throw Error(ErrorKind::SingleCluster, "silhouette needs at least two non-empty clusters");
    }
    double total = 0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] == 1) {
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sums[labels[j]] += euclidean_distance(points.row(i), points.row(j));
            }
        }
        const double a = sums[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != labels[i] && sizes[c] > 0) {
                b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
            }
        }
        const double denom = std::max(a, b);
        total += denom > 0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

struct KSelection {
    std::size_t best_k = 0;
    /// k -> silhouette
    std::map<std::size_t, double> scores;
};

/**
 * Runs `kmeans` for each k in [k_min, k_max] and picks the highest
 * silhouette; ties go to the smaller k.
 */
inline KSelection select_k_by_silhouette(const Matrix& points, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                                         std::size_t n_init = 10) {
    if (k_min < 2 || k_max < k_min) {
        throw Error(ErrorKind::InvalidK, "need 2 <= k_min <= k_max");
    }
    KSelection out;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const auto fit = kmeans(points, k, seed, n_init);
        const double score = silhouette_score(points, fit.labels);
        out.scores[k] = score;
        if (score > best) {
            best = score;
            out.best_k = k;
        }
    }
    return out;
}

/// Default upper bound of the k search: min(10, n − 1).
inline std::size_t default_k_max(std::size_t n_points) {
    return std::min<std::size_t>(10, n_points > 0 ? n_points - 1 : 0);
}

struct Merge {
    std::size_t left;  ///< smaller subtree id
    std::size_t right; ///< larger subtree id
    double height;
    std::size_t size;

    friend bool operator==(const Merge&, const Merge&) = default;
};

/**
 * Leaves are 0..n−1; merge i creates subtree id n + i.
 */
struct Dendrogram {
    std::size_t n_leaves = 0;
    std::vector<Merge> merges;
};

/**
 * Agglomerative single linkage over Euclidean distances. Repeatedly merges the
 * closest pair of active clusters; equal distances go to the
 * lexicographically smallest (left id, right id).
 */
inline Dendrogram single_linkage(const Matrix& points) {
    const std::size_t n = points.rows();
    if (n < 2) {
        throw Error(ErrorKind::TooFewPoints, "single linkage needs at least 2 points");
    }
    // Slots hold active clusters; slot s starts as leaf s.
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist[i][j] = dist[j][i] = euclidean_distance(points.row(i), points.row(j));
        }
    }
    std::vector<std::size_t> id(n);
    std::iota(id.begin(), id.end(), 0);
    std::vector<std::size_t> size(n, 1);
    std::vector<char> active(n, 1);

    Dendrogram tree;
    tree.n_leaves = n;
    for (std::size_t step = 0; step + 1 < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bs = 0, bt = 0;
        std::pair<std::size_t, std::size_t> best_ids{std::numeric_limits<std::size_t>::max(), 0};
        for (std::size_t s = 0; s < n; ++s) {
            if (!active[s]) {
                continue;
            }
            for (std::size_t t = s + 1; t < n; ++t) {
                if (!active[t]) {
                    continue;
                }
                const std::pair<std::size_t, std::size_t> ids{std::min(id[s], id[t]), std::max(id[s], id[t])};
                if (dist[s][t] < best || (dist[s][t] == best && ids < best_ids)) {
                    best = dist[s][t];
                    best_ids = ids;
                    bs = s;
                    bt = t;
                }
            }
        }
        tree.merges.push_back({best_ids.first, best_ids.second, best, size[bs] + size[bt]});
        for (std::size_t u = 0; u < n; ++u) {
            if (active[u] && u != bs && u != bt) {
                dist[bs][u] = dist[u][bs] = std::min(dist[bs][u], dist[bt][u]);
            }
        }
        active[bt] = 0;
        size[bs] += size[bt];
        id[bs] = n + step;
    }
    return tree;
}

namespace detail {

inline std::vector<std::vector<std::size_t>> subtree_members(const Dendrogram& tree) {
    const std::size_t n = tree.n_leaves;
    std::vector<std::vector<std::size_t>> members(n + tree.merges.size());
    for (std::size_t i = 0; i < n; ++i) {
        members[i] = {i};
    }
    for (std::size_t m = 0; m < tree.merges.size(); ++m) {
        auto& out = members[n + m];
        out = members[tree.merges[m].left];
        out.insert(out.end(), members[tree.merges[m].right].begin(), members[tree.merges[m].right].end());
    }
    return members;
}

} // namespace detail

/**
 * Undoes the last k−1 merges. Clusters are numbered by their smallest leaf.
 */
inline Labels cut_tree(const Dendrogram& tree, std::size_t k) {
    const std::size_t n = tree.n_leaves;
    if (k < 1 || k > n) {
        throw Error(ErrorKind::InvalidK, "cut at k=" + std::to_string(k) + " for " + std::to_string(n) + " leaves");
    }
    // Union-find over the first n−k merges.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    const auto members = detail::subtree_members(tree);
    for (std::size_t m = 0; m + k < n; ++m) {
        const auto a = find(members[tree.merges[m].left].front());
        const auto b = find(members[tree.merges[m].right].front());
        parent[std::max(a, b)] = std::min(a, b);
    }
    Labels labels(n);
    std::map<std::size_t, std::size_t> root_label;
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = find(i);
        auto [it, inserted] = root_label.emplace(root, root_label.size());
        labels[i] = it->second;
    }
    return labels;
}

/// Height of the lowest merge joining each pair of leaves.
inline Matrix cophenetic_distances(const Dendrogram& tree) {
    const std::size_t n = tree.n_leaves;
    Matrix coph(n, n, 0.0);
    const auto members = detail::subtree_members(tree);
    for (const auto& m : tree.merges) {
        for (auto i : members[m.left]) {
            for (auto j : members[m.right]) {
                coph(i, j) = coph(j, i) = m.height;
            }
        }
    }
    return coph;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double nx = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nx;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / nx;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) {
        throw Error(ErrorKind::DegenerateVariance, "constant distance vector");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/**
 * Pearson correlation between Euclidean and cophenetic distances over all pairs.
 */
inline double cophenetic_correlation(const Dendrogram& tree, const Matrix& points) {
    const std::size_t n = points.rows();
    if (n < 3 || tree.n_leaves != n) {
        throw Error(ErrorKind::TooFewPoints, "cophenetic correlation needs >= 3 points matching the dendrogram");
    }
    const Matrix coph = cophenetic_distances(tree);
    std::vector<double> original, tree_dist;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            original.push_back(euclidean_distance(points.row(i), points.row(j)));
            tree_dist.push_back(coph(i, j));
        }
    }
    return pearson(original, tree_dist);
}

inline double davies_bouldin(const Matrix& points, const Labels& labels) {
    const std::size_t k = cluster_count(labels);
    const std::size_t d = points.cols();
    Matrix centroids(k, d);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        ++sizes[labels[i]];
        for (std::size_t j = 0; j < d; ++j) {
            centroids(labels[i], j) += points(i, j);
        }
    }
    std::vector<std::size_t> present;
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] > 0) {
            present.push_back(c);
            for (std::size_t j = 0; j < d; ++j) {
                centroids(c, j) /= static_cast<double>(sizes[c]);
            }
        }
    }
    if (present.size() < 2) {
        throw Error(ErrorKind::SingleCluster, "Davies-Bouldin needs at least two non-empty clusters");
    }
    std::vector<double> scatter(k, 0.0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        scatter[labels[i]] += euclidean_distance(points.row(i), centroids.row(labels[i]));
    }
    for (auto c : present) {
        scatter[c] /= static_cast<double>(sizes[c]);
    }
    double total = 0;
    for (auto c : present) {
        double worst = 0;
        for (auto o : present) {
            if (o == c) {
                continue;
            }
            const double sep = euclidean_distance(centroids.row(c), centroids.row(o));
            if (sep == 0) {
                throw Error(ErrorKind::CoincidentCentroids, "clusters " + std::to_string(c) + " and " + std::to_string(o));
            }
            worst = std::max(worst, (scatter[c] + scatter[o]) / sep);
        }
        total += worst;
    }
    return total / static_cast<double>(present.size());
}

/// Adjusted Rand index between two labelings of the same points.
inline double adjusted_rand_index(const Labels& a, const Labels& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::InvalidConfig, "labelings differ in length");
    }
    std::map<std::pair<std::size_t, std::size_t>, double> table;
    std::map<std::size_t, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    auto choose2 = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sum_rows = 0, sum_cols = 0;
    for (const auto& [key, v] : table) {
        index += choose2(v);
    }
    for (const auto& [key, v] : rows) {
        sum_rows += choose2(v);
    }
    for (const auto& [key, v] : cols) {
        sum_cols += choose2(v);
    }
    const double total = choose2(static_cast<double>(a.size()));
    const double expected = total > 0 ? sum_rows * sum_cols / total : 0;
    const double max_index = (sum_rows + sum_cols) / 2;
    if (max_index == expected) {
        return 1.0;
    }
    return (index - expected) / (max_index - expected);
}

/**
 * Picks a dendrogram cut level by silhouette over k in [k_min, k_max]; ties go to the smaller k.
 */
inline KSelection select_cut_by_silhouette(const Dendrogram& tree, const Matrix& points, std::size_t k_min, std::size_t k_max) {
    if (k_min < 2 || k_max < k_min) {
        throw Error(ErrorKind::InvalidK, "need 2 <= k_min <= k_max");
    }
    KSelection out;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const double score = silhouette_score(points, cut_tree(tree, k));
        out.scores[k] = score;
        if (score > best) {
            best = score;
            out.best_k = k;
        }
    }
    return out;
}

} // namespace mobgraph

#endif // MOBGRAPH_CLUSTER_HPP
