#ifndef MOBGRAPH_UMAP_HPP
#define MOBGRAPH_UMAP_HPP

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

/**
 * @file umap.hpp
 *
 * @brief UMAP reduction for small point sets.
 *
 * Neighbors are found exactly by brute force; the remaining stages follow
 * the reference UMAP construction (smooth kNN distances, fuzzy union,
 * fitted low-dimensional kernel, negative-sampling SGD layout).
 */

namespace mobgraph::umap {

/// Per-point exact neighbor lists, sorted by ascending distance.
struct NeighborGraph {
    std::vector<std::vector<std::size_t>> indices;
    std::vector<std::vector<double>> distances;
    /// Distance to the nearest neighbor; filled by `smooth_knn`.
    std::vector<double> rho;
    /// Bandwidth; filled by `smooth_knn`.
    std::vector<double> sigma;

    std::size_t size() const { return indices.size(); }
};

struct FuzzyEdge {
    std::size_t i; ///< always < j
    std::size_t j;
    double strength;
};

/// Symmetric membership strengths in (0, 1]; only the upper triangle is stored.
struct FuzzyGraph {
    std::size_t n_points = 0;
    std::vector<FuzzyEdge> edges;

    double strength(std::size_t a, std::size_t b) const {
        if (a == b) {
            return 0.0;
        }
        if (a > b) {
            std::swap(a, b);
        }
        auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(a, b), [](const FuzzyEdge& e, const std::pair<std::size_t, std::size_t>& key) {
            return std::make_pair(e.i, e.j) < key;
        });
        return (it != edges.end() && it->i == a && it->j == b) ? it->strength : 0.0;
    }
};

/**
 * Exact k nearest neighbors by Euclidean distance, excluding the point
 * itself. Ties are broken by lower index.
 */
inline NeighborGraph knn_exact(const Matrix& points, std::size_t k = 5) {
    const std::size_t n = points.rows();
    if (k == 0 || n <= k) {
        throw Error(ErrorKind::TooFewPoints, std::to_string(n) + " points cannot provide " + std::to_string(k) + " neighbors each");
    }
    NeighborGraph graph;
    graph.indices.resize(n);
    graph.distances.resize(n);
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        candidates.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                candidates.emplace_back(euclidean_distance(points.row(i), points.row(j)), j);
            }
        }
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());
        for (std::size_t r = 0; r < k; ++r) {
            graph.distances[i].push_back(candidates[r].first);
            graph.indices[i].push_back(candidates[r].second);
        }
    }
    return graph;
}

inline constexpr double min_sigma_scale = 1e-3;

/// Σⱼ exp(−max(0, dⱼ − ρ) / σ) over one neighbor list.
inline double membership_sum(const std::vector<double>& distances, double rho, double sigma) {
    double total = 0;
    for (double d : distances) {
        total += std::exp(-std::max(0.0, d - rho) / sigma);
    }
    return total;
}

/**
 * Fills ρ and σ. σ is bisected (64 steps) so the membership sum equals
 * log2(k), then clamped below at 1e-3 times the mean neighbor distance.
 */
inline NeighborGraph smooth_knn(NeighborGraph graph, std::size_t k) {
    const std::size_t n = graph.size();
    const double target = std::log2(static_cast<double>(k));
    graph.rho.assign(n, 0.0);
    graph.sigma.assign(n, 1.0);

    double global_mean = 0;
    std::size_t global_count = 0;
    for (const auto& list : graph.distances) {
        for (double d : list) {
            global_mean += d;
            ++global_count;
        }
    }
    global_mean = global_count ? global_mean / static_cast<double>(global_count) : 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const auto& dist = graph.distances[i];
        if (dist.empty()) {
            throw Error(ErrorKind::TooFewPoints, "point " + std::to_string(i) + " has no neighbors");
        }
        const double rho = dist.front();
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double mid = 1.0;
        for (int step = 0; step < 64; ++step) {
            const double psum = membership_sum(dist, rho, mid);
            if (psum == target) {
                break;
            }
            if (psum > target) {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
            }
        }

        double local_mean = std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(dist.size());
        if (local_mean <= 0) {
            local_mean = global_mean > 0 ? global_mean : 1.0;
        }
        graph.rho[i] = rho;
        graph.sigma[i] = std::max(mid, min_sigma_scale * local_mean);
    }
    return graph;
}

/**
 * Directed strengths exp(−max(0, d − ρᵢ)/σᵢ), symmetrized by the
 * probabilistic union a + b − ab.
 */
inline FuzzyGraph fuzzy_union(const NeighborGraph& graph) {
    const std::size_t n = graph.size();
    if (graph.rho.size() != n || graph.sigma.size() != n) {
        throw Error(ErrorKind::InvalidConfig, "fuzzy_union requires rho and sigma; run smooth_knn first");
    }
    // (low, high) -> (strength low->high, strength high->low)
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < graph.indices[i].size(); ++r) {
            const std::size_t j = graph.indices[i][r];
            const double w = std::exp(-std::max(0.0, graph.distances[i][r] - graph.rho[i]) / graph.sigma[i]);
            auto& slot = pairs[{std::min(i, j), std::max(i, j)}];
            (i < j ? slot.first : slot.second) = w;
        }
    }

    FuzzyGraph fuzzy;
    fuzzy.n_points = n;
    for (const auto& [key, w] : pairs) {
        const double mu = w.first + w.second - w.first * w.second;
        if (mu > 0) {
            fuzzy.edges.push_back({key.first, key.second, std::min(mu, 1.0)});
        }
    }
    return fuzzy;
}

struct CurveParams {
    double a;
    double b;
};

/// Target kernel: 1 below min_dist, exponential decay beyond it.
inline double target_kernel(double x, double min_dist, double spread) {
    return x < min_dist ? 1.0 : std::exp(-(x - min_dist) / spread);
}

inline double fitted_kernel(double x, CurveParams p) {
    return 1.0 / (1.0 + p.a * std::pow(x, 2.0 * p.b));
}

/// The 300-point sample grid over [0, 3·spread] used by the fit.
inline std::vector<double> curve_grid(double spread) {
    std::vector<double> xs(300);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = 3.0 * spread * static_cast<double>(i) / static_cast<double>(xs.size() - 1);
    }
    return xs;
}

/**
 * Least-squares fit of 1/(1 + a·x^{2b}) to the target kernel using
 * Levenberg-Marquardt. Converges when the gradient norm drops below 1e-8.
 */
inline CurveParams fit_curve_params(double min_dist = 0.1, double spread = 1.0) {
    if (!(min_dist > 0) || !(spread > 0) || min_dist > spread) {
        throw Error(ErrorKind::InvalidConfig, "need 0 < min_dist <= spread");
    }
    const auto xs = curve_grid(spread);
    std::vector<double> ys;
    ys.reserve(xs.size());
    for (double x : xs) {
        ys.push_back(target_kernel(x, min_dist, spread));
    }

    auto sse = [&](CurveParams p) {
        double s = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = fitted_kernel(xs[i], p) - ys[i];
            s += r * r;
        }
        return s;
    };

    CurveParams p{1.0, 1.0};
    double lambda = 1e-3;
    double current = sse(p);
    for (int iter = 0; iter < 1000; ++iter) {
        // Normal equations J^T J and J^T r for the two parameters.
        double jaa = 0, jab = 0, jbb = 0, ga = 0, gb = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double x = xs[i];
            const double f = fitted_kernel(x, p);
            const double r = f - ys[i];
            double da = 0, db = 0;
            if (x > 0) {
                const double xp = std::pow(x, 2.0 * p.b);
                da = -xp * f * f;
                db = -p.a * xp * 2.0 * std::log(x) * f * f;
            }
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        if (std::hypot(ga, gb) < 1e-8) {
            return p;
        }

        bool accepted = false;
        for (int tries = 0; tries < 60 && !accepted; ++tries) {
            const double m00 = jaa * (1.0 + lambda);
            const double m11 = jbb * (1.0 + lambda);
            const double det = m00 * m11 - jab * jab;
            if (det == 0) {
                lambda *= 10;
                continue;
            }
            const double step_a = -(m11 * ga - jab * gb) / det;
            const double step_b = -(m00 * gb - jab * ga) / det;
            const CurveParams trial{p.a + step_a, p.b + step_b};
            if (trial.a > 0 && trial.b > 0) {
                const double value = sse(trial);
                if (value <= current) {
                    p = trial;
                    current = value;
                    lambda = std::max(lambda / 10.0, 1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10;
        }
        if (!accepted) {
            // No descent direction left at any damping: p is a stationary point to machine precision.
            return p;
        }
    }
    throw Error(ErrorKind::NoConvergence, "curve fit did not converge in 1000 iterations");
}

struct LayoutOptions {
    std::size_t n_components = 4;
    CurveParams curve{1.0, 1.0};
    std::size_t epochs = 500;
    std::size_t negative_rate = 5;
    double initial_alpha = 1.0;
    double gradient_clip = 4.0;
    std::uint64_t seed = 42;
};

struct LayoutResult {
    Matrix coordinates;
    /// "spectral" or "random".
    std::string init_method;
    bool optimized = true;
    std::vector<std::string> warnings;
};

namespace detail {

inline bool is_connected(const FuzzyGraph& fuzzy) {
    const std::size_t n = fuzzy.n_points;
    if (n == 0) {
        return false;
    }
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : fuzzy.edges) {
        adj[e.i].push_back(e.j);
        adj[e.j].push_back(e.i);
    }
    std::vector<char> seen(n, 0);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const auto v = frontier.front();
        frontier.pop();
        for (auto u : adj[v]) {
            if (!seen[u]) {
                seen[u] = 1;
                ++reached;
                frontier.push(u);
            }
        }
    }
    return reached == n;
}

inline void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (const auto& q : basis) {
        double proj = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            proj += v[i] * q[i];
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] -= proj * q[i];
        }
    }
}

inline double normalize(std::vector<double>& v) {
    double norm = 0;
    for (double x : v) {
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm > 0) {
        for (double& x : v) {
            x /= norm;
        }
    }
    return norm;
}

} // namespace detail

/**
 * Leading non-trivial eigenvectors of the symmetric normalized Laplacian,
 * found by power iteration on I + D^{-1/2} W D^{-1/2} with deflation against
 * the trivial eigenvector and every vector already found. Returns an empty
 * matrix when the graph is disconnected.
 */
inline Matrix spectral_embedding(const FuzzyGraph& fuzzy, std::size_t n_components, std::uint64_t seed,
                                 double tolerance = 1e-6, std::size_t max_iterations = 1000) {
    const std::size_t n = fuzzy.n_points;
    if (!detail::is_connected(fuzzy) || n_components + 1 > n) {
        return {};
    }
    std::vector<double> degree(n, 0.0);
    for (const auto& e : fuzzy.edges) {
        degree[e.i] += e.strength;
        degree[e.j] += e.strength;
    }
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
    }
    auto apply = [&](const std::vector<double>& v) {
        std::vector<double> out(v);
        for (const auto& e : fuzzy.edges) {
            const double w = e.strength * inv_sqrt[e.i] * inv_sqrt[e.j];
            out[e.i] += w * v[e.j];
            out[e.j] += w * v[e.i];
        }
        return out;
    };

    std::vector<std::vector<double>> basis;
    std::vector<double> trivial(n);
    for (std::size_t i = 0; i < n; ++i) {
        trivial[i] = std::sqrt(degree[i]);
    }
    detail::normalize(trivial);
    basis.push_back(trivial);

    Rng rng(derive_seed(seed, "spectral"));
    Matrix out(n, n_components);
    for (std::size_t c = 0; c < n_components; ++c) {
        std::vector<double> v(n);
        for (auto& x : v) {
            x = rng.uniform(-1.0, 1.0);
        }
        detail::orthogonalize(v, basis);
        detail::normalize(v);
        for (std::size_t iter = 0; iter < max_iterations; ++iter) {
            auto next = apply(v);
            detail::orthogonalize(next, basis);
            if (detail::normalize(next) == 0) {
                break;
            }
            double change = 0;
            for (std::size_t i = 0; i < n; ++i) {
                change = std::max(change, std::abs(next[i] - v[i]));
            }
            v = std::move(next);
            if (change < tolerance) {
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            out(i, c) = v[i];
        }
        basis.push_back(std::move(v));
    }
    return out;
}

/**
 * Initial coordinates: spectral when the graph is connected and has at least
 * 4·n_components points, otherwise uniform noise in [−10, 10].
 */
inline Matrix initialize_layout(const FuzzyGraph& fuzzy, std::size_t n_components, std::uint64_t seed, std::string& method) {
    const std::size_t n = fuzzy.n_points;
    if (n >= 4 * n_components) {
        Matrix spectral = spectral_embedding(fuzzy, n_components, seed);
        if (spectral.rows() == n) {
            double max_abs = 0;
            for (double v : spectral.data()) {
                max_abs = std::max(max_abs, std::abs(v));
            }
            if (max_abs > 0) {
                Rng noise(derive_seed(seed, "spectral-noise"));
                for (double& v : spectral.data()) {
                    v = v * (10.0 / max_abs) + 1e-4 * noise.normal();
                }
                method = "spectral";
                return spectral;
            }
        }
    }
    Rng rng(derive_seed(seed, "random-init"));
    Matrix coords(n, n_components);
    for (double& v : coords.data()) {
        v = rng.uniform(-10.0, 10.0);
    }
    method = "random";
    return coords;
}

/**
 * Stochastic-gradient layout. Each directed fuzzy edge is sampled with
 * frequency proportional to its strength; each attractive update is
 * followed by `negative_rate` repulsive updates against random points.
 */
inline LayoutResult optimize_layout(const FuzzyGraph& fuzzy, const LayoutOptions& options) {
    const std::size_t n = fuzzy.n_points;
    const std::size_t dim = options.n_components;
    if (n == 0 || fuzzy.edges.empty()) {
        throw Error(ErrorKind::TooFewPoints, "empty fuzzy graph");
    }
    if (!(options.curve.a > 0) || !(options.curve.b > 0) || dim == 0) {
        throw Error(ErrorKind::InvalidConfig, "layout needs a, b > 0 and n_components >= 1");
    }

    LayoutResult result;
    result.coordinates = initialize_layout(fuzzy, dim, options.seed, result.init_method);
    Matrix& y = result.coordinates;
    if (n <= dim + 1) {
        result.optimized = false;
        result.warnings.push_back("only " + std::to_string(n) + " points for " + std::to_string(dim) +
                                  " components; returning the initial layout unoptimized");
        return result;
    }

    struct Sample {
        std::size_t head;
        std::size_t tail;
        double epochs_per_sample;
    };
    double max_strength = 0;
    for (const auto& e : fuzzy.edges) {
        max_strength = std::max(max_strength, e.strength);
    }
    const double n_epochs = static_cast<double>(options.epochs);
    std::vector<Sample> samples;
    for (const auto& e : fuzzy.edges) {
        // Edges too weak to be sampled even once over the run are dropped.
        if (e.strength < max_strength / n_epochs) {
            continue;
        }
        const double eps = max_strength / e.strength;
        samples.push_back({e.i, e.j, eps});
        samples.push_back({e.j, e.i, eps});
    }
    std::sort(samples.begin(), samples.end(), [](const Sample& s, const Sample& t) { return std::tie(s.head, s.tail) < std::tie(t.head, t.tail); });

    const double a = options.curve.a;
    const double b = options.curve.b;
    const double clip = options.gradient_clip;
    auto clamp = [clip](double g) { return std::clamp(g, -clip, clip); };

    std::vector<double> next_sample(samples.size());
    std::vector<double> next_negative(samples.size());
    std::vector<double> epochs_per_negative(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        next_sample[s] = samples[s].epochs_per_sample;
        epochs_per_negative[s] = samples[s].epochs_per_sample / static_cast<double>(options.negative_rate);
        next_negative[s] = epochs_per_negative[s];
    }

    Rng rng(derive_seed(options.seed, "layout"));
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const double alpha = options.initial_alpha * (1.0 - static_cast<double>(epoch) / n_epochs);
        const double now = static_cast<double>(epoch);
        for (std::size_t s = 0; s < samples.size(); ++s) {
            if (next_sample[s] > now) {
                continue;
            }
            auto current = y.row(samples[s].head);
            auto other = y.row(samples[s].tail);

            double dist2 = squared_distance(current, other);
            if (dist2 > 0) {
                const double coeff = -2.0 * a * b * std::pow(dist2, b - 1.0) / (a * std::pow(dist2, b) + 1.0);
                for (std::size_t d = 0; d < dim; ++d) {
                    const double grad = clamp(coeff * (current[d] - other[d]));
                    current[d] += grad * alpha;
                    other[d] -= grad * alpha;
                }
            }
            next_sample[s] += samples[s].epochs_per_sample;

            const auto n_negative = static_cast<std::size_t>((now - next_negative[s]) / epochs_per_negative[s]);
            for (std::size_t p = 0; p < n_negative; ++p) {
                const std::size_t k = rng.index(n);
                if (k == samples[s].head) {
                    continue;
                }
                auto repel = y.row(k);
                dist2 = squared_distance(current, repel);
                const double coeff = dist2 > 0 ? 2.0 * b / ((0.001 + dist2) * (a * std::pow(dist2, b) + 1.0)) : 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double grad = coeff > 0 ? clamp(coeff * (current[d] - repel[d])) : clip;
                    current[d] += grad * alpha;
                }
            }
            next_negative[s] += static_cast<double>(n_negative) * epochs_per_negative[s];
        }
        if (!y.all_finite()) {
            throw Error(ErrorKind::NonFiniteCoordinate, "epoch " + std::to_string(epoch));
        }
    }
    return result;
}

struct UmapOptions {
    std::size_t n_neighbors = 5;
    double min_dist = 0.1;
    double spread = 1.0;
    std::size_t n_components = 4;
    std::size_t epochs = 500;
    std::size_t negative_rate = 5;
    std::uint64_t seed = 42;
};

struct UmapResult {
    LayoutResult layout;
    CurveParams curve;
};

/// kNN → smooth distances → fuzzy union → curve fit → layout.
inline UmapResult reduce(const Matrix& points, const UmapOptions& options = {}) {
    const auto neighbors = smooth_knn(knn_exact(points, options.n_neighbors), options.n_neighbors);
    const auto fuzzy = fuzzy_union(neighbors);
    UmapResult result;
    result.curve = fit_curve_params(options.min_dist, options.spread);
    LayoutOptions layout;
    layout.n_components = options.n_components;
    layout.curve = result.curve;
    layout.epochs = options.epochs;
    layout.negative_rate = options.negative_rate;
    layout.seed = options.seed;
    result.layout = optimize_layout(fuzzy, layout);
    return result;
}

} // namespace mobgraph::umap

#endif // MOBGRAPH_UMAP_HPP
