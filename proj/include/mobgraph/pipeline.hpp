#ifndef MOBGRAPH_PIPELINE_HPP
#define MOBGRAPH_PIPELINE_HPP

#include "cliques.hpp"
#include "cluster.hpp"
#include "common.hpp"
#include "embed.hpp"
#include "gexf.hpp"
#include "ingest.hpp"
#include "matrix_io.hpp"
#include "umap.hpp"
#include "wl.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

/**
 * @file pipeline.hpp
 *
 * @brief End-to-end orchestration: comments → graphs → WL → embeddings →
 * UMAP → clustering → clique censuses → ranking, with artifact and report output.
 */

namespace mobgraph {

/**
 * Every tunable of a run. Defaults reproduce the published parameter
 * choices where they exist and the reference-implementation conventions
 * elsewhere.
 */
struct PipelineConfig {
    std::string input;
    /// "csv", "jsonl" or "auto" (by file extension).
    std::string input_format = "auto";
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    std::size_t threads = 1;

    bool strict_duplicates = false;
    std::uint64_t min_shared_videos = 1;
    bool keep_isolated = false;

    unsigned wl_iterations = 2;
    bool wl_use_weights = false;

    std::size_t dim = 128;
    double lr = 0.025;
    std::uint64_t min_count = 5;
    std::size_t embed_epochs = 10;
    std::size_t negative = 5;

    std::size_t umap_neighbors = 5;
    double umap_min_dist = 0.1;
    double umap_spread = 1.0;
    std::size_t umap_components = 4;
    std::size_t umap_epochs = 500;
    std::size_t umap_negative_rate = 5;

    std::size_t k_min = 2;
    /// 0 means min(10, n − 1).
    std::size_t k_max = 0;
    std::size_t kmeans_n_init = 10;
    /// "reduced" (default) or "embedding".
    std::string cluster_space = "reduced";

    std::size_t clique_min_size = 5;
    std::uint64_t clique_budget = default_clique_budget;
};

inline nlohmann::json to_json(const PipelineConfig& c) {
    return {
        {"input", c.input},
        {"input_format", c.input_format},
        {"out_dir", c.out_dir},
        {"seed", c.seed},
        {"threads", c.threads},
        {"strict_duplicates", c.strict_duplicates},
        {"min_shared_videos", c.min_shared_videos},
        {"keep_isolated", c.keep_isolated},
        {"wl_iterations", c.wl_iterations},
        {"wl_use_weights", c.wl_use_weights},
        {"dim", c.dim},
        {"lr", c.lr},
        {"min_count", c.min_count},
        {"embed_epochs", c.embed_epochs},
        {"negative", c.negative},
        {"umap_neighbors", c.umap_neighbors},
        {"umap_min_dist", c.umap_min_dist},
        {"umap_spread", c.umap_spread},
        {"umap_components", c.umap_components},
        {"umap_epochs", c.umap_epochs},
        {"umap_negative_rate", c.umap_negative_rate},
        {"k_min", c.k_min},
        {"k_max", c.k_max},
        {"kmeans_n_init", c.kmeans_n_init},
        {"cluster_space", c.cluster_space},
        {"clique_min_size", c.clique_min_size},
        {"clique_budget", c.clique_budget},
    };
}

/// Inverse of `to_json`; absent keys keep their defaults, unknown keys are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    const auto known = to_json(c);
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw Error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
        }
    }
    auto read = [&](const char* key, auto& field) {
        if (j.contains(key)) {
            try {
                j.at(key).get_to(field);
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::InvalidConfig, std::string(key) + ": " + e.what());
            }
        }
    };
    read("input", c.input);
    read("input_format", c.input_format);
    read("out_dir", c.out_dir);
    read("seed", c.seed);
    read("threads", c.threads);
    read("strict_duplicates", c.strict_duplicates);
    read("min_shared_videos", c.min_shared_videos);
    read("keep_isolated", c.keep_isolated);
    read("wl_iterations", c.wl_iterations);
    read("wl_use_weights", c.wl_use_weights);
    read("dim", c.dim);
    read("lr", c.lr);
    read("min_count", c.min_count);
    read("embed_epochs", c.embed_epochs);
    read("negative", c.negative);
    read("umap_neighbors", c.umap_neighbors);
    read("umap_min_dist", c.umap_min_dist);
    read("umap_spread", c.umap_spread);
    read("umap_components", c.umap_components);
    read("umap_epochs", c.umap_epochs);
    read("umap_negative_rate", c.umap_negative_rate);
    read("k_min", c.k_min);
    read("k_max", c.k_max);
    read("kmeans_n_init", c.kmeans_n_init);
    read("cluster_space", c.cluster_space);
    read("clique_min_size", c.clique_min_size);
    read("clique_budget", c.clique_budget);
    return c;
}

inline void validate(const PipelineConfig& c) {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (c.input_format != "auto" && c.input_format != "csv" && c.input_format != "jsonl") {
        fail("input_format must be auto, csv or jsonl");
    }
    if (c.min_shared_videos < 1) fail("min_shared_videos must be >= 1");
    if (c.dim < 1) fail("dim must be >= 1");
    if (!(c.lr > 0)) fail("lr must be positive");
    if (c.min_count < 1) fail("min_count must be >= 1");
    if (c.embed_epochs < 1 || c.negative < 1) fail("embed_epochs and negative must be >= 1");
    if (c.umap_neighbors < 1 || c.umap_components < 1 || c.umap_epochs < 1 || c.umap_negative_rate < 1) {
        fail("umap neighbors, components, epochs and negative rate must be >= 1");
    }
    if (!(c.umap_min_dist > 0) || c.umap_min_dist > c.umap_spread) fail("need 0 < umap_min_dist <= umap_spread");
    if (c.k_min < 2) fail("k_min must be >= 2");
    if (c.k_max != 0 && c.k_max < c.k_min) fail("k_max must be 0 (auto) or >= k_min");
    if (c.kmeans_n_init < 1) fail("kmeans_n_init must be >= 1");
    if (c.cluster_space != "reduced" && c.cluster_space != "embedding") fail("cluster_space must be reduced or embedding");
    if (c.clique_min_size < 1) fail("clique_min_size must be >= 1");
    if (c.threads < 1) fail("threads must be >= 1");
}

/**
 * @brief A module failure annotated with the pipeline stage that raised it.
 */
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.kind(), "stage '" + stage + "': " + cause.what()), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/**
 * Runs `body(i)` for i in [0, n) on up to `threads` workers. Each index is
 * handled independently, so results match the sequential run. The exception
 * of the lowest failing index is rethrown.
 */
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

inline CommentFormat resolve_format(const std::string& format, const std::string& path) {
    if (format == "csv") {
        return CommentFormat::Csv;
    }
    if (format == "jsonl") {
        return CommentFormat::JsonLines;
    }
    const auto ext = std::filesystem::path(path).extension().string();
    return (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") ? CommentFormat::JsonLines : CommentFormat::Csv;
}

inline ParsedComments load_comments(const std::string& path, const std::string& format, bool strict_duplicates) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open input '" + path + "'");
    }
    return parse_comments(in, resolve_format(format, path), ParseOptions{strict_duplicates});
}

/// One graph per channel, in channel-id order.
inline std::vector<CoCommenterGraph> build_channel_graphs(const std::vector<CommentRecord>& records, const GraphOptions& options,
                                                          std::size_t threads = 1) {
    const auto channels = list_channels(records);
    std::vector<CoCommenterGraph> graphs(channels.size());
    parallel_for(channels.size(), threads, [&](std::size_t i) { graphs[i] = build_co_commenter_graph(records, channels[i], options); });
    return graphs;
}

inline nlohmann::json dendrogram_json(const Dendrogram& tree, const std::vector<std::string>& leaves) {
    nlohmann::json merges = nlohmann::json::array();
    for (const auto& m : tree.merges) {
        merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
    }
    return {{"n_leaves", tree.n_leaves}, {"leaves", leaves}, {"merges", merges}};
}

inline void write_census_csv(const std::vector<CliqueCensus>& censuses, const std::map<std::string, std::size_t>& cluster_of, std::ostream& out) {
    out << "channel_id,cluster,min_size,clique_count\n";
    for (const auto& c : censuses) {
        auto it = cluster_of.find(c.channel_id);
        out << detail::csv_escape(c.channel_id) << ',' << (it == cluster_of.end() ? std::string() : std::to_string(it->second)) << ','
            << c.min_size << ',' << c.count << '\n';
    }
}

/// Renumbers clusters in order of first appearance so labels are canonical.
inline Labels canonical_labels(const Labels& labels) {
    std::map<std::size_t, std::size_t> mapping;
    Labels out;
    out.reserve(labels.size());
    for (auto l : labels) {
        auto [it, inserted] = mapping.emplace(l, mapping.size());
        out.push_back(it->second);
    }
    return out;
}

struct PipelineResult {
    nlohmann::json report;
    std::vector<CoCommenterGraph> graphs;
    EmbeddingMatrix embeddings;
    ReducedMatrix reduced;
    Labels kmeans_labels;
    Labels hierarchical_labels;
    std::vector<CliqueCensus> censuses;
    SuspiciousnessRanking ranking;
};

namespace detail {

class StageTimer {
public:
    template <typename F>
    auto run(const std::string& stage, F&& body) {
        const auto start = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(body())>) {
                body();
                record(stage, start);
            } else {
                auto value = body();
                record(stage, start);
                return value;
            }
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(stage, e);
        } catch (const std::exception& e) {
            throw StageError(stage, Error(ErrorKind::Io, e.what()));
        }
    }

    nlohmann::json timings() const { return timings_; }

private:
    void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
        timings_[stage + "_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }

    nlohmann::json timings_ = nlohmann::json::object();
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    }
    out << content;
    if (!out) {
        throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
    }
}

inline std::string gexf_file_name(const std::string& channel) {
    std::string safe;
    for (char c : channel) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        safe.push_back(ok ? c : '_');
    }
    return safe + ".gexf";
}

inline nlohmann::json optional_metric(const std::function<double()>& metric, std::vector<std::string>& warnings, const std::string& name) {
    try {
        return metric();
    } catch (const Error& e) {
        warnings.push_back(name + " undefined: " + e.what());
        return nullptr;
    }
}

inline nlohmann::json ranking_json(const std::vector<RankEntry>& entries) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : entries) {
        out.push_back({{"channel_id", e.channel_id}, {"cluster", e.cluster}, {"clique_count", e.count}});
    }
    return out;
}

} // namespace detail

/**
 * Runs every stage on already-parsed records. When `config.out_dir` is
 * non-empty, artifacts and `report.json` are written there; a failure leaves
 * an `INCOMPLETE` marker naming the stage instead of a report.
 */
inline PipelineResult run_pipeline_on_records(const std::vector<CommentRecord>& records, const PipelineConfig& config,
                                              std::vector<std::string> warnings = {}, detail::StageTimer timer = {}) {
    namespace fs = std::filesystem;
    const bool write = !config.out_dir.empty();
    const fs::path out_dir(config.out_dir);
    PipelineResult result;
    try {
        validate(config);
    } catch (const Error& e) {
        throw StageError("config", e);
    }

    try {
        if (write) {
            timer.run("setup", [&] {
                fs::create_directories(out_dir / "graphs");
                fs::remove(out_dir / "INCOMPLETE");
                fs::remove(out_dir / "report.json");
            });
        }

        result.graphs = timer.run("graphs", [&] {
            auto graphs = build_channel_graphs(records, GraphOptions{config.min_shared_videos, config.keep_isolated}, config.threads);
            if (write) {
                for (const auto& g : graphs) {
                    std::ostringstream gexf;
                    write_gexf(g, gexf);
                    detail::write_text(out_dir / "graphs" / detail::gexf_file_name(g.channel_id()), gexf.str());
                }
            }
            return graphs;
        });
        const std::size_t n = result.graphs.size();
        std::vector<std::string> channel_ids;
        for (const auto& g : result.graphs) {
            channel_ids.push_back(g.channel_id());
        }

        std::vector<GraphDocument> documents(n);
        timer.run("wl", [&] {
            parallel_for(n, config.threads, [&](std::size_t i) {
                documents[i] = extract_document(result.graphs[i], config.wl_iterations, WlOptions{config.wl_use_weights});
            });
        });

        Vocabulary vocab;
        EmbeddingResult embedded = timer.run("embed", [&] {
            vocab = build_vocabulary(documents, config.min_count);
            EmbedOptions options;
            options.dim = config.dim;
            options.learning_rate = config.lr;
            options.epochs = config.embed_epochs;
            options.negative = config.negative;
            options.seed = config.seed;
            auto out = train_embeddings(documents, vocab, options);
            if (write) {
                std::ostringstream csv;
                write_matrix_csv(out.embeddings, "e", csv);
                detail::write_text(out_dir / "embeddings.csv", csv.str());
            }
            return out;
        });
        result.embeddings = embedded.embeddings;
        warnings.insert(warnings.end(), embedded.warnings.begin(), embedded.warnings.end());

        umap::UmapResult reduction = timer.run("reduce", [&] {
            umap::UmapOptions options;
            options.n_neighbors = config.umap_neighbors;
            options.min_dist = config.umap_min_dist;
            options.spread = config.umap_spread;
            options.n_components = config.umap_components;
            options.epochs = config.umap_epochs;
            options.negative_rate = config.umap_negative_rate;
            options.seed = config.seed;
            auto out = umap::reduce(result.embeddings.values, options);
            result.reduced = {channel_ids, out.layout.coordinates};
            if (write) {
                std::ostringstream csv;
                write_matrix_csv(result.reduced, "u", csv);
                detail::write_text(out_dir / "reduced.csv", csv.str());
            }
            return out;
        });
        warnings.insert(warnings.end(), reduction.layout.warnings.begin(), reduction.layout.warnings.end());

        const Matrix& space = config.cluster_space == "embedding" ? result.embeddings.values : result.reduced.values;
        nlohmann::json kmeans_json, hier_json;
        Dendrogram tree;
        timer.run("cluster", [&] {
            const std::size_t k_max = config.k_max ? std::min(config.k_max, n - 1) : default_k_max(n);
            if (n < 3 || k_max < config.k_min) {
                throw Error(ErrorKind::TooFewPoints, std::to_string(n) + " channels are too few to choose k in [" + std::to_string(config.k_min) +
                                                         ", " + std::to_string(k_max) + "]");
            }
            const auto selection = select_k_by_silhouette(space, config.k_min, k_max, config.seed, config.kmeans_n_init);
            const auto fit = kmeans(space, selection.best_k, config.seed, config.kmeans_n_init);
            result.kmeans_labels = canonical_labels(fit.labels);

            tree = single_linkage(space);
            const auto cut = select_cut_by_silhouette(tree, space, config.k_min, k_max);
            result.hierarchical_labels = cut_tree(tree, cut.best_k);

            auto labels_json = [&](const Labels& labels) {
                nlohmann::json j = nlohmann::json::object();
                for (std::size_t i = 0; i < n; ++i) {
                    j[channel_ids[i]] = labels[i];
                }
                return j;
            };
            auto scores_json = [](const KSelection& s) {
                nlohmann::json j = nlohmann::json::object();
                for (const auto& [k, v] : s.scores) {
                    j[std::to_string(k)] = v;
                }
                return j;
            };
            kmeans_json = {
                {"k", selection.best_k},
                {"labels", labels_json(result.kmeans_labels)},
                {"silhouette_by_k", scores_json(selection)},
                {"silhouette", selection.scores.at(selection.best_k)},
                {"inertia", fit.inertia},
                {"davies_bouldin", detail::optional_metric([&] { return davies_bouldin(space, result.kmeans_labels); }, warnings, "k-means Davies-Bouldin")},
            };
            hier_json = {
                {"k", cut.best_k},
                {"labels", labels_json(result.hierarchical_labels)},
                {"silhouette_by_k", scores_json(cut)},
                {"silhouette", cut.scores.at(cut.best_k)},
                {"cophenetic_correlation", detail::optional_metric([&] { return cophenetic_correlation(tree, space); }, warnings, "cophenetic correlation")},
                {"davies_bouldin", detail::optional_metric([&] { return davies_bouldin(space, result.hierarchical_labels); }, warnings, "hierarchical Davies-Bouldin")},
                {"selection", "silhouette over cut levels"},
            };
            if (write) {
                detail::write_text(out_dir / "dendrogram.json", dendrogram_json(tree, channel_ids).dump(2) + "\n");
            }
        });

        std::map<std::string, std::size_t> cluster_of;
        for (std::size_t i = 0; i < n; ++i) {
            cluster_of[channel_ids[i]] = result.kmeans_labels[i];
        }
        timer.run("cliques", [&] {
            result.censuses.resize(n);
            parallel_for(n, config.threads, [&](std::size_t i) {
                result.censuses[i] = clique_census(result.graphs[i], config.clique_min_size, config.clique_budget);
            });
            result.ranking = rank_channels(result.censuses, cluster_of);
            if (write) {
                std::ostringstream csv;
                write_census_csv(result.censuses, cluster_of, csv);
                detail::write_text(out_dir / "cliques.csv", csv.str());
            }
        });

        nlohmann::json channels = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& g = result.graphs[i];
            std::uint64_t total_weight = 0;
            for (const auto& e : g.edges()) {
                total_weight += e.weight;
            }
            channels.push_back({
                {"channel_id", g.channel_id()},
                {"nodes", g.node_count()},
                {"edges", g.edge_count()},
                {"total_weight", total_weight},
                {"document_tokens", documents[i].tokens.size()},
                {"gexf", write ? "graphs/" + detail::gexf_file_name(g.channel_id()) : ""},
            });
        }
        nlohmann::json censuses = nlohmann::json::array();
        for (const auto& c : result.censuses) {
            nlohmann::json histogram = nlohmann::json::object();
            for (const auto& [size, count] : c.histogram) {
                histogram[std::to_string(size)] = count;
            }
            censuses.push_back({{"channel_id", c.channel_id}, {"cluster", cluster_of.at(c.channel_id)}, {"min_size", c.min_size},
                                {"clique_count", c.count}, {"maximal_cliques", c.total()}, {"histogram", histogram}});
        }
        nlohmann::json per_cluster = nlohmann::json::object();
        for (const auto& [cluster, entries] : result.ranking.per_cluster) {
            per_cluster[std::to_string(cluster)] = detail::ranking_json(entries);
        }

        nlohmann::json& report = result.report;
        report["tool"] = {{"name", "mobgraph"}, {"version", version}};
        report["config"] = to_json(config);
        report["metadata"] = {
            {"records", records.size()},
            {"channels", n},
            {"embedding", {{"vocabulary_size", vocab.size()}, {"epoch_objective", embedded.epoch_objective}, {"deterministic", true}, {"parallel", false}}},
            {"umap", {{"a", reduction.curve.a}, {"b", reduction.curve.b}, {"init", reduction.layout.init_method}, {"optimized", reduction.layout.optimized},
                      {"knn", "exact"}, {"gradient_clip", 4.0}, {"deterministic", true}}},
            {"cluster_space", config.cluster_space},
        };
        report["channels"] = channels;
        report["artifacts"] = write ? nlohmann::json{{"graphs", "graphs/"}, {"embeddings", "embeddings.csv"}, {"reduced", "reduced.csv"},
                                                     {"dendrogram", "dendrogram.json"}, {"cliques", "cliques.csv"}}
                                    : nlohmann::json::object();
        report["kmeans"] = kmeans_json;
        report["hierarchical"] = hier_json;
        report["cliques"] = {{"min_size", config.clique_min_size}, {"labeling", "kmeans"}, {"censuses", censuses}};
        report["ranking"] = {{"global", detail::ranking_json(result.ranking.global)}, {"per_cluster", per_cluster}};
        report["warnings"] = warnings;
        report["timings"] = timer.timings();

        if (write) {
            timer.run("report", [&] { detail::write_text(out_dir / "report.json", report.dump(2) + "\n"); });
        }
    } catch (const StageError& e) {
        if (write) {
            std::error_code ec;
            fs::create_directories(out_dir, ec);
            std::ofstream marker(out_dir / "INCOMPLETE");
            marker << e.what() << "\n";
        }
        throw;
    }
    return result;
}

/// Reads `config.input` and runs the full pipeline.
inline PipelineResult run_pipeline(const PipelineConfig& config) {
    detail::StageTimer timer;
    try {
        validate(config);
    } catch (const Error& e) {
        throw StageError("config", e);
    }
    ParsedComments parsed;
    try {
        parsed = timer.run("ingest", [&] { return load_comments(config.input, config.input_format, config.strict_duplicates); });
    } catch (const StageError& e) {
        if (!config.out_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(config.out_dir, ec);
            std::ofstream marker(std::filesystem::path(config.out_dir) / "INCOMPLETE");
            marker << e.what() << "\n";
        }
        throw;
    }
    return run_pipeline_on_records(parsed.records, config, parsed.warnings, timer);
}

/// Report without the wall-clock section; the part covered by determinism guarantees.
inline nlohmann::json without_timings(nlohmann::json report) {
    report.erase("timings");
    return report;
}

} // namespace mobgraph

#endif // MOBGRAPH_PIPELINE_HPP
