#include "mobgraph/gexf.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mobgraph;
using namespace mobgraph::testing;

namespace {

std::string to_gexf(const CoCommenterGraph& g) {
    std::ostringstream out;
    write_gexf(g, out);
    return out.str();
}

CoCommenterGraph from_gexf(const std::string& text) {
    std::istringstream in(text);
    return read_gexf(in);
}

ErrorKind read_error(const std::string& text) {
    try {
        from_gexf(text);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "accepted: " << text;
    return ErrorKind::Io;
}

std::string wrap(const std::string& graph_attrs, const std::string& body) {
    return "<?xml version=\"1.0\"?><gexf xmlns=\"http://gexf.net/1.2\" version=\"1.2\"><graph " + graph_attrs + ">" + body +
           "</graph></gexf>";
}

} // namespace

TEST(Gexf, EmptyGraphRoundTrips) {
    const CoCommenterGraph g("empty", {}, {});
    const auto text = to_gexf(g);
    EXPECT_TRUE(gexf_structure_problems(text).empty());
    EXPECT_EQ(from_gexf(text), g);
}

TEST(Gexf, TriangleWeightsPreserved) {
    using E = std::tuple<std::string, std::string, std::uint64_t>;
    const CoCommenterGraph g("tri", {}, std::vector<E>{{"a", "b", 1}, {"b", "c", 2}, {"a", "c", 3}});
    const auto back = from_gexf(to_gexf(g));
    EXPECT_EQ(back.canonical_edges(), g.canonical_edges());
    EXPECT_EQ(back.channel_id(), "tri");
}

TEST(Gexf, EscapesAwkwardIds) {
    using E = std::tuple<std::string, std::string, std::uint64_t>;
    const CoCommenterGraph g("ch <&> \"q\" 'x'", {"lonely"}, std::vector<E>{{"a&b", "<c>", 7}, {"\"d\"", "e'", 1}});
    const auto text = to_gexf(g);
    EXPECT_TRUE(gexf_structure_problems(text).empty());
    EXPECT_EQ(from_gexf(text), g);
}

TEST(Gexf, HundredRandomRoundTrips) {
    Rng rng(2024);
    for (int i = 0; i < 100; ++i) {
        const auto g = random_graph(rng, rng.index(30), rng.uniform(), 50, "g" + std::to_string(i));
        const auto text = to_gexf(g);
        const auto problems = gexf_structure_problems(text);
        EXPECT_TRUE(problems.empty()) << problems.front();
        const auto back = from_gexf(text);
        EXPECT_EQ(back.nodes(), g.nodes());
        EXPECT_EQ(back.canonical_edges(), g.canonical_edges());
        EXPECT_EQ(back, g);
    }
}

TEST(Gexf, ReadsForeignLayout) {
    // Attribute order, whitespace, an explicit edge type and float-formatted weights from other tools.
    const auto g = from_gexf("<gexf version=\"1.2\" xmlns=\"http://gexf.net/1.2\">\n"
                             "<meta><description>chan</description></meta>\n"
                             "<graph defaultedgetype=\"undirected\" mode=\"static\">\n"
                             "<nodes><node label=\"A\" id=\"a\"/><node id=\"b\" label=\"B\"/></nodes>\n"
                             "<edges><edge target=\"a\" source=\"b\" id=\"e0\" type=\"undirected\" weight=\"3.0\"/></edges>\n"
                             "</graph></gexf>");
    EXPECT_EQ(g.channel_id(), "chan");
    ASSERT_EQ(g.edge_count(), 1U);
    EXPECT_EQ(g.edges()[0].weight, 3U);
}

TEST(Gexf, MissingWeightDefaultsToOne) {
    const auto g = from_gexf(wrap("defaultedgetype=\"undirected\"", "<nodes><node id=\"a\"/><node id=\"b\"/></nodes>"
                                                                    "<edges><edge id=\"0\" source=\"a\" target=\"b\"/></edges>"));
    EXPECT_EQ(g.edges().at(0).weight, 1U);
}

TEST(Gexf, Errors) {
    EXPECT_EQ(read_error("<gexf><graph"), ErrorKind::MalformedGexf);
    EXPECT_EQ(read_error("<graphml/>"), ErrorKind::MalformedGexf);
    EXPECT_EQ(read_error("<gexf version=\"1.2\"></gexf>"), ErrorKind::MalformedGexf);
    EXPECT_EQ(read_error(wrap("defaultedgetype=\"directed\"", "")), ErrorKind::DirectedGraphUnsupported);
    EXPECT_EQ(read_error(wrap("defaultedgetype=\"undirected\"", "<nodes><node id=\"a\"/><node id=\"b\"/></nodes>"
                                                                "<edges><edge id=\"0\" source=\"a\" target=\"b\" type=\"directed\"/></edges>")),
              ErrorKind::DirectedGraphUnsupported);
    EXPECT_EQ(read_error(wrap("defaultedgetype=\"undirected\"", "<nodes><node id=\"a\"/><node id=\"a\"/></nodes>")), ErrorKind::MalformedGexf);
    EXPECT_EQ(read_error(wrap("defaultedgetype=\"undirected\"", "<nodes><node id=\"a\"/></nodes>"
                                                                "<edges><edge id=\"0\" source=\"a\" target=\"zz\"/></edges>")),
              ErrorKind::MalformedGexf);
    for (const char* weight : {"abc", "0", "-2", "1.5", ""}) {
        EXPECT_EQ(read_error(wrap("defaultedgetype=\"undirected\"", std::string("<nodes><node id=\"a\"/><node id=\"b\"/></nodes>"
                                                                                "<edges><edge id=\"0\" source=\"a\" target=\"b\" weight=\"") +
                                                                        weight + "\"/></edges>")),
                  ErrorKind::MalformedGexf)
            << weight;
    }
    EXPECT_EQ(read_error(wrap("defaultedgetype=\"undirected\"", "<nodes><node id=\"a\"/></nodes>"
                                                                "<edges><edge id=\"0\" source=\"a\" target=\"a\"/></edges>")),
              ErrorKind::MalformedGexf);
}

TEST(Gexf, ValidatorCatchesBrokenDocuments) {
    EXPECT_FALSE(gexf_structure_problems("<gexf/>").empty());
    EXPECT_FALSE(gexf_structure_problems(wrap("defaultedgetype=\"undirected\"", "<nodes><node id=\"a\" label=\"a\"/></nodes>"
                                                                                "<edges><edge id=\"0\" source=\"a\" target=\"b\"/></edges>"))
                     .empty());
}
