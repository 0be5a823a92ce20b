// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "mobgraph/mobgraph.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace mobgraph;
using namespace mobgraph::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, const std::function<Outcome()>& check) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s — %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// AC1: synthetic two-family corpus, k=2 and ARI >= 0.9 on >= 8/10 seeds, < 60 s per run.
Outcome ac1() {
    int good = 0;
    double slowest = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto start = std::chrono::steady_clock::now();
        const auto corpus = generate_corpus(SynthConfig::two_families(20, seed));
        PipelineConfig config;
        config.seed = seed;
        config.out_dir = "";
        const auto result = run_pipeline_on_records(corpus.records, config);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        slowest = std::max(slowest, secs);
        Labels truth;
        for (const auto& id : result.reduced.ids) truth.push_back(corpus.channel_family.at(id) == "heavy" ? 0 : 1);
        const auto k = result.report.at("kmeans").at("k").get<std::size_t>();
        const double ari = adjusted_rand_index(result.kmeans_labels, truth);
        good += (k == 2 && ari >= 0.9 && secs < 60.0);
        per_seed += fmt(" %zu/%.2f", k, ari);
    }
    return {good >= 8 && slowest < 60.0, fmt("%d/10 seeds k=2 & ARI>=0.9, slowest run %.2fs; k/ARI:", good, slowest) + per_seed};
}

// AC2: WL token multisets equal for 100 random graphs and their permuted copies, iterations 0,1,2.
Outcome ac2() {
    Rng rng(20240101);
    int equal = 0;
    for (int i = 0; i < 100; ++i) {
        const auto g = random_graph(rng, 1 + rng.index(30), rng.uniform(0.05, 0.5));
        const auto h = permuted_copy(g, random_permutation(rng, g.node_count()));
        bool all = true;
        for (unsigned it = 0; it <= 2; ++it) {
            auto a = extract_document(g, it).tokens;
            auto b = extract_document(h, it).tokens;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            all = all && a == b;
        }
        equal += all;
    }
    return {equal == 100, fmt("%d/100 graphs identical for iterations 0,1,2", equal)};
}

// AC3: maximal cliques equal the all-subsets oracle on 50 graphs; censuses match for min_size 1..6.
Outcome ac3() {
    Rng rng(33);
    const double ps[] = {0.2, 0.4, 0.6};
    int sets_equal = 0, census_equal = 0;
    for (int i = 0; i < 50; ++i) {
        const auto g = random_graph(rng, 1 + rng.index(15), ps[i % 3]);
        const auto oracle = brute_force_maximal_cliques(g);
        const auto found = maximal_cliques(g);
        sets_equal += std::set<std::vector<std::string>>(found.begin(), found.end()) == oracle && found.size() == oracle.size();
        bool ok = true;
        for (std::size_t s = 1; s <= 6; ++s) {
            const auto expected = static_cast<std::uint64_t>(std::count_if(oracle.begin(), oracle.end(), [&](const auto& c) { return c.size() >= s; }));
            ok = ok && clique_census(g, s).count == expected;
        }
        census_equal += ok;
    }
    return {sets_equal == 50 && census_equal == 50, fmt("clique sets %d/50, censuses %d/50", sets_equal, census_equal)};
}

// AC4: silhouette, Davies-Bouldin and cophenetic correlation within 1e-9 of direct formulas.
Outcome ac4() {
    Rng rng(44);
    double worst_s = 0, worst_db = 0, worst_c = 0;
    for (int i = 0; i < 20; ++i) {
        const auto pts = random_points(rng, 20, 4);
        const auto labels = random_labels(rng, 20, 2 + rng.index(4));
        worst_s = std::max(worst_s, std::abs(silhouette_score(pts, labels) - silhouette_oracle(pts, labels)));
        worst_db = std::max(worst_db, std::abs(davies_bouldin(pts, labels) - davies_bouldin_oracle(pts, labels)));
        const auto tree = single_linkage(pts);
        worst_c = std::max(worst_c, std::abs(cophenetic_correlation(tree, pts) - cophenetic_correlation_oracle(tree, pts)));
    }
    const bool pass = worst_s <= 1e-9 && worst_db <= 1e-9 && worst_c <= 1e-9;
    return {pass, fmt("max |err| silhouette %.2e, Davies-Bouldin %.2e, cophenetic %.2e (tol 1e-9)", worst_s, worst_db, worst_c)};
}

// AC5: merge heights equal sorted MST weights within 1e-12; consecutive cuts differ by one split.
Outcome ac5() {
    Rng rng(55);
    double worst = 0;
    int cut_ok = 0, cut_total = 0;
    for (int i = 0; i < 20; ++i) {
        const auto pts = random_points(rng, 20, 4);
        const auto tree = single_linkage(pts);
        const auto mst = mst_weights(pts);
        for (std::size_t m = 0; m < mst.size(); ++m) worst = std::max(worst, std::abs(tree.merges[m].height - mst[m]));
        for (std::size_t k = 1; k < 20; ++k) {
            const auto a = cut_tree(tree, k);
            const auto b = cut_tree(tree, k + 1);
            // Every fine cluster lies inside one coarse cluster, and exactly one coarse cluster has two fine parts.
            std::map<std::size_t, std::set<std::size_t>> parts;
            bool nested = true;
            std::map<std::size_t, std::size_t> parent;
            for (std::size_t p = 0; p < 20; ++p) {
                auto [it, fresh] = parent.emplace(b[p], a[p]);
                nested = nested && it->second == a[p];
                parts[a[p]].insert(b[p]);
            }
            std::size_t split = 0;
            for (const auto& [c, fine] : parts) split += fine.size() == 2 ? 1 : (fine.size() == 1 ? 0 : 100);
            cut_ok += nested && split == 1;
            ++cut_total;
        }
    }
    return {worst <= 1e-12 && cut_ok == cut_total, fmt("max height error %.2e (tol 1e-12); %d/%d cut pairs differ by one split", worst, cut_ok, cut_total)};
}

// AC6: intra-family cosine > inter-family on >= 9/10 seeds; gradient vs central differences within 1e-5.
Outcome ac6() {
    int separated = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(600 + seed);
        std::vector<GraphDocument> docs;
        for (int family = 0; family < 2; ++family)
            for (int i = 0; i < 10; ++i)
                docs.push_back(extract_document(family_graph(rng, family, fmt("f%d_%d", family, i)), 2));
        EmbedOptions options;
        options.seed = seed;
        const auto m = train_embeddings(docs, build_vocabulary(docs, 5), options).embeddings.values;
        double intra = 0, inter = 0;
        int n_intra = 0, n_inter = 0;
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = i + 1; j < 20; ++j) {
                const double c = cosine_similarity(m.row(i), m.row(j));
                if (i / 10 == j / 10) intra += c, ++n_intra;
                else inter += c, ++n_inter;
            }
        separated += intra / n_intra > inter / n_inter;
    }

    Rng rng(66);
    double worst = 0;
    for (int point = 0; point < 20; ++point) {
        std::vector<std::vector<double>> v(7, std::vector<double>(8));
        for (auto& x : v)
            for (auto& y : x) y = rng.uniform(-1, 1);
        auto f = [&] { return pair_objective(v[0], v[1], {v[2], v[3], v[4], v[5], v[6]}); };
        const auto g = pair_gradient(v[0], v[1], {v[2], v[3], v[4], v[5], v[6]});
        std::vector<const std::vector<double>*> grads = {&g.doc, &g.target};
        for (const auto& n : g.noise) grads.push_back(&n);
        for (std::size_t w = 0; w < v.size(); ++w)
            for (std::size_t i = 0; i < 8; ++i) {
                const double saved = v[w][i], h = 1e-5;
                v[w][i] = saved + h;
                const double up = f();
                v[w][i] = saved - h;
                const double down = f();
                v[w][i] = saved;
                const double exact = (*grads[w])[i];
                worst = std::max(worst, std::abs((up - down) / (2 * h) - exact) / std::max(1.0, std::abs(exact)));
            }
    }
    return {separated >= 9 && worst <= 1e-5, fmt("%d/10 seeds separated; max gradient relative error %.2e (tol 1e-5)", separated, worst)};
}

// AC7: blobs stay separated on >= 8/10 seeds; sigma re-evaluates to log2(k); curve deviation < 0.05; mean 5-NN Jaccard >= 0.6.
Outcome ac7() {
    int separated = 0;
    double jaccard = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed * 7919);
        const auto pts = gaussian_blobs(rng, 10, 128, 20.0);
        umap::UmapOptions options;
        options.seed = seed;
        const auto out = umap::reduce(pts, options).layout.coordinates;
        separated += halves_separated(out);
        jaccard += mean_knn_jaccard(pts, out, 5);
    }
    jaccard /= 10;

    Rng rng(77);
    double worst_sigma = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + rng.index(14);
        const auto pts = random_points(rng, 40, 6);
        const auto g = umap::smooth_knn(umap::knn_exact(pts, k), k);
        for (std::size_t i = 0; i < pts.rows(); ++i) {
            double mean = 0;
            for (double d : g.distances[i]) mean += d;
            mean /= static_cast<double>(k);
            if (g.sigma[i] <= umap::min_sigma_scale * mean) continue;
            double sum = 0;
            for (double d : g.distances[i]) sum += std::exp(-std::max(0.0, d - g.rho[i]) / g.sigma[i]);
            worst_sigma = std::max(worst_sigma, std::abs(sum - std::log2(static_cast<double>(k))));
        }
    }

    const auto p = umap::fit_curve_params();
    double worst_curve = 0;
    for (double x : umap::curve_grid(1.0)) worst_curve = std::max(worst_curve, std::abs(umap::fitted_kernel(x, p) - umap::target_kernel(x, 0.1, 1.0)));

    const bool pass = separated >= 8 && worst_sigma <= 1e-5 && worst_curve < 0.05 && jaccard >= 0.6;
    return {pass, fmt("%d/10 seeds separated; sigma residual %.2e (tol 1e-5); curve max dev %.4f (tol 0.05, a=%.4f b=%.4f); mean 5-NN Jaccard %.3f (min 0.6)",
                      separated, worst_sigma, worst_curve, p.a, p.b, jaccard)};
}

// AC8: two single-threaded runs give byte-identical artifacts and report (timings excluded).
Outcome ac8() {
    const auto root = fs::temp_directory_path() / "mobgraph_acceptance_ac8";
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream csv(root / "comments.csv", std::ios::binary);
        write_comments_csv(generate_corpus(SynthConfig::two_families(20, 8)).records, csv);
    }
    PipelineConfig config;
    config.input = (root / "comments.csv").string();
    config.seed = 8;
    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; ++r) {
        config.out_dir = (root / "out").string();
        run_pipeline(config);
        for (const char* name : {"embeddings.csv", "reduced.csv", "cliques.csv", "dendrogram.json"}) runs[r][name] = slurp(root / "out" / name);
        runs[r]["report.json"] = without_timings(nlohmann::json::parse(slurp(root / "out" / "report.json"))).dump(2);
        for (const auto& entry : fs::directory_iterator(root / "out" / "graphs")) runs[r][entry.path().filename().string()] = slurp(entry.path());
    }
    int identical = 0;
    for (const auto& [name, bytes] : runs[0]) identical += runs[1].count(name) && runs[1].at(name) == bytes;
    const bool pass = identical == static_cast<int>(runs[0].size()) && runs[0].size() == runs[1].size();
    return {pass, fmt("%d/%zu artifacts byte-identical across two runs", identical, runs[0].size())};
}

// AC9: 100 random graphs round-trip through GEXF exactly; every file passes structural validation.
Outcome ac9() {
    Rng rng(99);
    int equal = 0, valid = 0;
    for (int i = 0; i < 100; ++i) {
        const auto g = random_graph(rng, rng.index(40), rng.uniform(0, 0.5), 1000, fmt("channel-%d <&>", i));
        std::ostringstream out;
        write_gexf(g, out);
        valid += gexf_structure_problems(out.str()).empty();
        std::istringstream in(out.str());
        const auto back = read_gexf(in);
        equal += back == g && back.canonical_edges() == g.canonical_edges();
    }
    return {equal == 100 && valid == 100, fmt("%d/100 exact round-trips, %d/100 structurally valid", equal, valid)};
}

// AC10: weights equal brute-force intersections; construction is invariant to record order.
Outcome ac10() {
    int weight_ok = 0, order_ok = 0;
    const int corpora = 20;
    for (int c = 0; c < corpora; ++c) {
        SynthConfig config = SynthConfig::two_families(4, 1000 + c);
        config.channels[1].organic_probability = 0.2;
        auto corpus = generate_corpus(config);
        bool weights = true, order = true;
        std::vector<CoCommenterGraph> reference;
        for (const auto& channel : list_channels(corpus.records)) {
            const auto g = build_co_commenter_graph(corpus.records, channel);
            const auto oracle = shared_video_counts(corpus.records, channel);
            weights = weights && g.edge_count() == oracle.size();
            for (const auto& [u, v, w] : g.canonical_edges()) weights = weights && oracle.count({u, v}) && oracle.at({u, v}) == w;
            reference.push_back(g);
        }
        Rng rng(c);
        for (int shuffle = 0; shuffle < 3; ++shuffle) {
            rng.shuffle(corpus.records);
            const auto channels = list_channels(corpus.records);
            for (std::size_t i = 0; i < channels.size(); ++i) order = order && build_co_commenter_graph(corpus.records, channels[i]) == reference[i];
        }
        weight_ok += weights;
        order_ok += order;
    }
    return {weight_ok == corpora && order_ok == corpora, fmt("weights match oracle on %d/%d corpora; order-invariant on %d/%d", weight_ok, corpora, order_ok, corpora)};
}

} // namespace

int main() {
    report("AC1", "end-to-end synthetic reproduction", ac1);
    report("AC2", "WL isomorphism invariance", ac2);
    report("AC3", "clique oracle equivalence", ac3);
    report("AC4", "metric oracles", ac4);
    report("AC5", "single-linkage correctness", ac5);
    report("AC6", "embedding separation and gradient check", ac6);
    report("AC7", "UMAP structure preservation", ac7);
    report("AC8", "determinism", ac8);
    report("AC9", "GEXF round-trip", ac9);
    report("AC10", "co-commenter weights", ac10);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
