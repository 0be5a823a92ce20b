// mobgraph command-line tool: one subcommand per pipeline stage plus `pipeline` for the full run.

#include "mobgraph/mobgraph.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mobgraph;

namespace {

// Parameters shared by several subcommands. They live on the root app so a
// single `--config` file can set them; subcommands fall through to it.
struct Options {
    PipelineConfig config;
    std::size_t synth_channels = 20;
    bool merged = false;
    bool json_export = false;
    bool dump_documents = false;
    std::string labels_path;
};

// Every config key with its option name; the TOML written next to results uses the same names.
struct Binding {
    const char* key;
    const char* flag;
    const char* help;
};

const Binding bindings[] = {
    {"input", "--input", "Input file (comments CSV/JSONL, or a matrix CSV for reduce/cluster)"},
    {"input_format", "--format", "Comment format: auto, csv or jsonl"},
    {"out_dir", "--out", "Output directory"},
    {"seed", "--seed", "Global random seed"},
    {"threads", "--threads", "Worker threads for per-channel stages"},
    {"strict_duplicates", "--strict-duplicates", "Fail on duplicate comment ids instead of dropping them"},
    {"min_shared_videos", "--min-shared-videos", "Minimum shared videos for an edge"},
    {"keep_isolated", "--keep-isolated", "Keep commenters without retained edges"},
    {"wl_iterations", "--wl-iterations", "Weisfeiler-Leman iterations"},
    {"wl_use_weights", "--wl-use-weights", "Append log2 weight buckets to neighbor labels"},
    {"dim", "--dim", "Embedding dimension"},
    {"lr", "--lr", "Initial learning rate"},
    {"min_count", "--min-count", "Minimum corpus frequency for a token"},
    {"embed_epochs", "--embed-epochs", "Embedding training epochs"},
    {"negative", "--negative", "Negative samples per positive pair"},
    {"umap_neighbors", "--umap-neighbors", "UMAP neighbors"},
    {"umap_min_dist", "--umap-min-dist", "UMAP minimum distance"},
    {"umap_spread", "--umap-spread", "UMAP spread"},
    {"umap_components", "--umap-components", "UMAP output dimension"},
    {"umap_epochs", "--umap-epochs", "UMAP layout epochs"},
    {"umap_negative_rate", "--umap-negative-rate", "UMAP repulsive samples per attractive update"},
    {"k_min", "--k-min", "Smallest k tried"},
    {"k_max", "--k-max", "Largest k tried (0: min(10, n-1))"},
    {"kmeans_n_init", "--kmeans-n-init", "K-means restarts"},
    {"cluster_space", "--cluster-space", "Cluster the 'reduced' coordinates or the raw 'embedding'"},
    {"clique_min_size", "--clique-min-size", "Minimum clique size counted in the census"},
    {"clique_budget", "--clique-budget", "Maximum maximal cliques enumerated per channel"},
};

template <typename T>
void bind(CLI::App& app, const char* key, T& field) {
    for (const auto& b : bindings) {
        if (std::string(b.key) == key) {
            if constexpr (std::is_same_v<T, bool>) {
                app.add_flag(b.flag, field, b.help)->group("Parameters");
            } else {
                app.add_option(b.flag, field, b.help)->capture_default_str()->group("Parameters");
            }
            return;
        }
    }
    throw std::logic_error(std::string("unbound key ") + key);
}

void add_parameters(CLI::App& app, PipelineConfig& c) {
    bind(app, "input", c.input);
    bind(app, "input_format", c.input_format);
    bind(app, "out_dir", c.out_dir);
    bind(app, "seed", c.seed);
    bind(app, "threads", c.threads);
    bind(app, "strict_duplicates", c.strict_duplicates);
    bind(app, "min_shared_videos", c.min_shared_videos);
    bind(app, "keep_isolated", c.keep_isolated);
    bind(app, "wl_iterations", c.wl_iterations);
    bind(app, "wl_use_weights", c.wl_use_weights);
    bind(app, "dim", c.dim);
    bind(app, "lr", c.lr);
    bind(app, "min_count", c.min_count);
    bind(app, "embed_epochs", c.embed_epochs);
    bind(app, "negative", c.negative);
    bind(app, "umap_neighbors", c.umap_neighbors);
    bind(app, "umap_min_dist", c.umap_min_dist);
    bind(app, "umap_spread", c.umap_spread);
    bind(app, "umap_components", c.umap_components);
    bind(app, "umap_epochs", c.umap_epochs);
    bind(app, "umap_negative_rate", c.umap_negative_rate);
    bind(app, "k_min", c.k_min);
    bind(app, "k_max", c.k_max);
    bind(app, "kmeans_n_init", c.kmeans_n_init);
    bind(app, "cluster_space", c.cluster_space);
    bind(app, "clique_min_size", c.clique_min_size);
    bind(app, "clique_budget", c.clique_budget);
    app.get_option("--threads")->envname("MOBGRAPH_THREADS");
}

/// Resolved config as TOML that `--config` reads back.
std::string config_toml(const PipelineConfig& c) {
    const auto j = to_json(c);
    std::ostringstream out;
    out << "# mobgraph " << version << " resolved configuration\n";
    for (const auto& b : bindings) {
        const auto& v = j.at(b.key);
        out << std::string(b.flag).substr(2) << " = ";
        if (v.is_number_float()) {
            out << format_double(v.get<double>());
        } else {
            out << v.dump();
        }
        out << "\n";
    }
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    }
    out << content;
}

std::ifstream open_input(const std::string& path) {
    if (path.empty()) {
        throw Error(ErrorKind::Io, "no --input given");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open input '" + path + "'");
    }
    return in;
}

std::string gexf_text(const CoCommenterGraph& g) {
    std::ostringstream out;
    write_gexf(g, out);
    return out.str();
}

std::string gexf_name(const std::string& channel) {
    return detail::gexf_file_name(channel);
}

ParsedComments load(const PipelineConfig& c) {
    if (c.input.empty()) {
        throw Error(ErrorKind::Io, "no --input given");
    }
    return load_comments(c.input, c.input_format, c.strict_duplicates);
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << "\n";
    }
}

std::vector<GraphDocument> documents_for(const std::vector<CoCommenterGraph>& graphs, const PipelineConfig& c) {
    std::vector<GraphDocument> docs(graphs.size());
    parallel_for(graphs.size(), c.threads, [&](std::size_t i) { docs[i] = extract_document(graphs[i], c.wl_iterations, WlOptions{c.wl_use_weights}); });
    return docs;
}

// ---- subcommands ---------------------------------------------------------

void run_ingest(const Options& o) {
    const auto parsed = load(o.config);
    print_warnings(parsed.warnings);
    std::map<std::string, std::size_t> per_channel;
    for (const auto& r : parsed.records) {
        ++per_channel[r.channel_id];
    }
    std::ostringstream csv;
    write_comments_csv(parsed.records, csv);
    write_file(fs::path(o.config.out_dir) / "comments.csv", csv.str());
    const nlohmann::json summary = {{"records", parsed.records.size()}, {"channels", per_channel}, {"warnings", parsed.warnings}};
    std::cout << summary.dump(2) << "\n";
}

void run_graphs(const Options& o) {
    const auto parsed = load(o.config);
    print_warnings(parsed.warnings);
    const GraphOptions options{o.config.min_shared_videos, o.config.keep_isolated};
    std::vector<CoCommenterGraph> graphs;
    if (o.merged) {
        graphs.push_back(build_merged_co_commenter_graph(parsed.records, "merged", options));
    } else {
        graphs = build_channel_graphs(parsed.records, options, o.config.threads);
    }
    for (const auto& g : graphs) {
        write_file(fs::path(o.config.out_dir) / "graphs" / gexf_name(g.channel_id()), gexf_text(g));
        std::cout << g.channel_id() << "\t" << g.node_count() << " nodes\t" << g.edge_count() << " edges\n";
    }
}

void run_embed(const Options& o) {
    const auto parsed = load(o.config);
    print_warnings(parsed.warnings);
    const auto graphs = build_channel_graphs(parsed.records, GraphOptions{o.config.min_shared_videos, o.config.keep_isolated}, o.config.threads);
    const auto docs = documents_for(graphs, o.config);
    const fs::path out(o.config.out_dir);
    if (o.dump_documents) {
        std::ostringstream dump;
        write_documents(docs, dump);
        write_file(out / "documents.txt", dump.str());
    }
    const auto vocab = build_vocabulary(docs, o.config.min_count);
    EmbedOptions options;
    options.dim = o.config.dim;
    options.learning_rate = o.config.lr;
    options.epochs = o.config.embed_epochs;
    options.negative = o.config.negative;
    options.seed = o.config.seed;
    const auto result = train_embeddings(docs, vocab, options);
    print_warnings(result.warnings);
    std::ostringstream csv;
    write_matrix_csv(result.embeddings, "e", csv);
    write_file(out / "embeddings.csv", csv.str());
    if (o.json_export) {
        write_file(out / "embeddings.json", matrix_to_json(result.embeddings).dump(2) + "\n");
    }
    std::cout << result.embeddings.ids.size() << " graphs, vocabulary " << vocab.size() << ", final objective "
              << format_double(result.epoch_objective.back()) << "\n";
}

LabeledMatrix read_matrix(const std::string& path) {
    auto in = open_input(path);
    return read_matrix_csv(in);
}

void run_reduce(const Options& o) {
    const auto input = read_matrix(o.config.input);
    umap::UmapOptions options;
    options.n_neighbors = o.config.umap_neighbors;
    options.min_dist = o.config.umap_min_dist;
    options.spread = o.config.umap_spread;
    options.n_components = o.config.umap_components;
    options.epochs = o.config.umap_epochs;
    options.negative_rate = o.config.umap_negative_rate;
    options.seed = o.config.seed;
    const auto result = umap::reduce(input.values, options);
    print_warnings(result.layout.warnings);
    std::ostringstream csv;
    write_matrix_csv({input.ids, result.layout.coordinates}, "u", csv);
    write_file(fs::path(o.config.out_dir) / "reduced.csv", csv.str());
    std::cout << "a=" << format_double(result.curve.a) << " b=" << format_double(result.curve.b) << " init=" << result.layout.init_method << "\n";
}

void run_cluster(const Options& o) {
    const auto input = read_matrix(o.config.input);
    const auto& points = input.values;
    const std::size_t n = points.rows();
    const std::size_t k_max = o.config.k_max ? std::min(o.config.k_max, n - 1) : default_k_max(n);
    const auto selection = select_k_by_silhouette(points, o.config.k_min, k_max, o.config.seed, o.config.kmeans_n_init);
    const auto fit = kmeans(points, selection.best_k, o.config.seed, o.config.kmeans_n_init);
    const auto km_labels = canonical_labels(fit.labels);
    const auto tree = single_linkage(points);
    const auto cut = select_cut_by_silhouette(tree, points, o.config.k_min, k_max);
    const auto h_labels = cut_tree(tree, cut.best_k);

    auto labels_json = [&](const Labels& labels) {
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t i = 0; i < n; ++i) {
            j[input.ids[i]] = labels[i];
        }
        return j;
    };
    std::vector<std::string> warnings;
    const nlohmann::json out = {
        {"kmeans",
         {{"k", selection.best_k},
          {"labels", labels_json(km_labels)},
          {"silhouette", selection.scores.at(selection.best_k)},
          {"davies_bouldin", detail::optional_metric([&] { return davies_bouldin(points, km_labels); }, warnings, "k-means Davies-Bouldin")}}},
        {"hierarchical",
         {{"k", cut.best_k},
          {"labels", labels_json(h_labels)},
          {"silhouette", cut.scores.at(cut.best_k)},
          {"cophenetic_correlation", detail::optional_metric([&] { return cophenetic_correlation(tree, points); }, warnings, "cophenetic correlation")},
          {"davies_bouldin", detail::optional_metric([&] { return davies_bouldin(points, h_labels); }, warnings, "hierarchical Davies-Bouldin")}}},
        {"warnings", warnings},
    };
    print_warnings(warnings);
    const fs::path dir(o.config.out_dir);
    write_file(dir / "clusters.json", out.dump(2) + "\n");
    write_file(dir / "dendrogram.json", dendrogram_json(tree, input.ids).dump(2) + "\n");
    std::cout << "k-means k=" << selection.best_k << ", hierarchical k=" << cut.best_k << "\n";
}

void run_cliques(const Options& o) {
    const auto parsed = load(o.config);
    print_warnings(parsed.warnings);
    const auto graphs = build_channel_graphs(parsed.records, GraphOptions{o.config.min_shared_videos, o.config.keep_isolated}, o.config.threads);
    std::map<std::string, std::size_t> cluster_of;
    if (!o.labels_path.empty()) {
        auto in = open_input(o.labels_path);
        const auto j = nlohmann::json::parse(in);
        for (const auto& [id, label] : j.at("kmeans").at("labels").items()) {
            cluster_of[id] = label.get<std::size_t>();
        }
    } else {
        for (const auto& g : graphs) {
            cluster_of[g.channel_id()] = 0;
        }
    }
    std::vector<CliqueCensus> censuses(graphs.size());
    parallel_for(graphs.size(), o.config.threads, [&](std::size_t i) { censuses[i] = clique_census(graphs[i], o.config.clique_min_size, o.config.clique_budget); });
    const auto ranking = rank_channels(censuses, cluster_of);
    std::ostringstream csv;
    write_census_csv(censuses, cluster_of, csv);
    write_file(fs::path(o.config.out_dir) / "cliques.csv", csv.str());
    for (const auto& e : ranking.global) {
        std::cout << e.channel_id << "\tcluster " << e.cluster << "\t" << e.count << "\n";
    }
}

void run_synth(const Options& o) {
    const auto corpus = generate_corpus(SynthConfig::two_families(o.synth_channels, o.config.seed));
    std::ostringstream csv;
    write_comments_csv(corpus.records, csv);
    const fs::path dir(o.config.out_dir);
    write_file(dir / "comments.csv", csv.str());
    write_file(dir / "ground_truth.json", ground_truth_json(corpus).dump(2) + "\n");
    std::cout << corpus.records.size() << " comments over " << corpus.channel_family.size() << " channels\n";
}

void run_full(const Options& o) {
    validate(o.config);
    const fs::path dir(o.config.out_dir);
    fs::create_directories(dir);
    write_file(dir / "config.toml", config_toml(o.config));
    const auto result = run_pipeline(o.config);
    for (const auto& w : result.report.at("warnings")) {
        std::cerr << "warning: " << w.get<std::string>() << "\n";
    }
    std::cout << "k-means k=" << result.report.at("kmeans").at("k") << ", hierarchical k=" << result.report.at("hierarchical").at("k")
              << "; report: " << (dir / "report.json").string() << "\n";
}

void run_report(const Options& o) {
    const fs::path path = o.config.input.empty() ? fs::path(o.config.out_dir) / "report.json" : fs::path(o.config.input);
    auto in = open_input(path.string());
    const auto r = nlohmann::json::parse(in);
    auto metric = [](const nlohmann::json& v) { return v.is_null() ? std::string("n/a") : format_double(v.get<double>()); };
    std::cout << "mobgraph " << r.at("tool").at("version").get<std::string>() << " report (seed " << r.at("config").at("seed") << ")\n";
    std::cout << "channels: " << r.at("metadata").at("channels") << ", records: " << r.at("metadata").at("records") << "\n";
    const auto& km = r.at("kmeans");
    std::cout << "k-means: k=" << km.at("k") << " silhouette=" << metric(km.at("silhouette")) << " davies-bouldin=" << metric(km.at("davies_bouldin")) << "\n";
    const auto& h = r.at("hierarchical");
    std::cout << "single linkage: k=" << h.at("k") << " silhouette=" << metric(h.at("silhouette"))
              << " cophenetic=" << metric(h.at("cophenetic_correlation")) << " davies-bouldin=" << metric(h.at("davies_bouldin")) << "\n";
    std::cout << "most suspicious channels (maximal cliques >= " << r.at("cliques").at("min_size") << "):\n";
    for (const auto& [cluster, entries] : r.at("ranking").at("per_cluster").items()) {
        std::cout << "  cluster " << cluster << ":";
        std::size_t shown = 0;
        for (const auto& e : entries) {
            if (shown++ == 3) break;
            std::cout << " " << e.at("channel_id").get<std::string>() << " (" << e.at("clique_count") << ")";
        }
        std::cout << "\n";
    }
    for (const auto& w : r.at("warnings")) {
        std::cout << "warning: " << w.get<std::string>() << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Co-commenter graph analysis: graphs, WL embeddings, UMAP, clustering and clique censuses"};
    app.set_version_flag("--version", std::string("mobgraph ") + version);
    app.set_config("--config", "", "TOML configuration file; command-line flags override its values");
    app.require_subcommand(1);

    Options o;
    add_parameters(app, o.config);

    struct Command {
        const char* name;
        const char* stage;
        const char* help;
        void (*run)(const Options&);
    };
    const Command commands[] = {
        {"ingest", "ingest", "Parse and normalize a comment file", run_ingest},
        {"graphs", "graphs", "Build co-commenter graphs and write GEXF", run_graphs},
        {"embed", "embed", "WL documents and graph embeddings", run_embed},
        {"reduce", "reduce", "UMAP reduction of an embedding matrix", run_reduce},
        {"cluster", "cluster", "K-means and single-linkage clustering of a matrix", run_cluster},
        {"cliques", "cliques", "Maximal-clique censuses and channel ranking", run_cliques},
        {"synth", "synth", "Generate a synthetic two-family corpus", run_synth},
        {"pipeline", "pipeline", "Run every stage end to end", run_full},
        {"report", "report", "Summarize a pipeline report", run_report},
    };
    std::map<const CLI::App*, const Command*> by_app;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help)->fallthrough();
        by_app[sub] = &c;
        if (std::string(c.name) == "graphs") sub->add_flag("--merged", o.merged, "One graph over all channels instead of one per channel");
        if (std::string(c.name) == "embed") {
            sub->add_flag("--json", o.json_export, "Also write embeddings.json");
            sub->add_flag("--documents", o.dump_documents, "Also write the WL documents to documents.txt");
        }
        if (std::string(c.name) == "cliques") sub->add_option("--labels", o.labels_path, "clusters.json from `cluster` for per-cluster ranking");
        if (std::string(c.name) == "synth") sub->add_option("--channels", o.synth_channels, "Number of channels")->capture_default_str();
    }

    CLI11_PARSE(app, argc, argv);

    const Command* command = by_app.at(app.get_subcommands().front());
    try {
        command->run(o);
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: stage '" << command->stage << "': " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: stage '" << command->stage << "': " << e.what() << "\n";
        return 1;
    }
    return 0;
}
