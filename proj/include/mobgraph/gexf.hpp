#ifndef MOBGRAPH_GEXF_HPP
#define MOBGRAPH_GEXF_HPP

#include "common.hpp"
#include "ingest.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

/**
 * @file gexf.hpp
 *
 * @brief GEXF 1.2 persistence for co-commenter graphs.
 *
 * The channel id is stored in `<meta><description>`; weights use the
 * standard `weight` edge attribute. Only undirected graphs are accepted.
 */

namespace mobgraph {

namespace detail {

inline std::string xml_escape(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    for (char c : value) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

inline std::uint64_t parse_gexf_weight(const std::string& text) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::MalformedGexf, "non-numeric weight '" + text + "'");
    }
    if (!(value >= 1.0) || value != static_cast<double>(static_cast<std::uint64_t>(value))) {
        throw Error(ErrorKind::MalformedGexf, "weight must be a positive integer, got '" + text + "'");
    }
    return static_cast<std::uint64_t>(value);
}

} // namespace detail

inline void write_gexf(const CoCommenterGraph& graph, std::ostream& out) {
    using detail::xml_escape;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<gexf xmlns=\"http://gexf.net/1.2\" version=\"1.2\">\n";
    out << "  <meta>\n";
    out << "    <creator>mobgraph " << version << "</creator>\n";
    out << "    <description>" << xml_escape(graph.channel_id()) << "</description>\n";
    out << "  </meta>\n";
    out << "  <graph mode=\"static\" defaultedgetype=\"undirected\">\n";
    out << "    <nodes>\n";
    for (const auto& id : graph.nodes()) {
        const auto escaped = xml_escape(id);
        out << "      <node id=\"" << escaped << "\" label=\"" << escaped << "\"/>\n";
    }
    out << "    </nodes>\n";
    out << "    <edges>\n";
    std::size_t edge_id = 0;
    for (const auto& e : graph.edges()) {
        out << "      <edge id=\"" << edge_id++ << "\" source=\"" << xml_escape(graph.nodes()[e.source]) << "\" target=\""
            << xml_escape(graph.nodes()[e.target]) << "\" weight=\"" << e.weight << "\"/>\n";
    }
    out << "    </edges>\n";
    out << "  </graph>\n";
    out << "</gexf>\n";
}

inline CoCommenterGraph read_gexf(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree doc;
    try {
        pt::read_xml(in, doc);
    } catch (const pt::xml_parser_error& e) {
        throw Error(ErrorKind::MalformedGexf, e.what());
    }

    const auto root = doc.get_child_optional("gexf");
    if (!root) {
        throw Error(ErrorKind::MalformedGexf, "missing <gexf> root");
    }
    const auto graph = root->get_child_optional("graph");
    if (!graph) {
        throw Error(ErrorKind::MalformedGexf, "missing <graph> element");
    }
    const auto default_type = graph->get<std::string>("<xmlattr>.defaultedgetype", "undirected");
    if (default_type != "undirected") {
        throw Error(ErrorKind::DirectedGraphUnsupported, "defaultedgetype=\"" + default_type + "\"");
    }

    const std::string channel = root->get<std::string>("meta.description", "");

    std::vector<std::string> nodes;
    if (const auto node_list = graph->get_child_optional("nodes")) {
        for (const auto& [tag, node] : *node_list) {
            if (tag != "node") {
                continue;
            }
            const auto id = node.get_optional<std::string>("<xmlattr>.id");
            if (!id) {
                throw Error(ErrorKind::MalformedGexf, "node without id");
            }
            nodes.push_back(*id);
        }
    }
    const std::set<std::string> declared(nodes.begin(), nodes.end());
    if (declared.size() != nodes.size()) {
        throw Error(ErrorKind::MalformedGexf, "duplicate node id");
    }

    std::vector<std::tuple<std::string, std::string, std::uint64_t>> edges;
    if (const auto edge_list = graph->get_child_optional("edges")) {
        for (const auto& [tag, edge] : *edge_list) {
            if (tag != "edge") {
                continue;
            }
            const auto type = edge.get<std::string>("<xmlattr>.type", "undirected");
            if (type != "undirected") {
                throw Error(ErrorKind::DirectedGraphUnsupported, "edge of type \"" + type + "\"");
            }
            const auto source = edge.get_optional<std::string>("<xmlattr>.source");
            const auto target = edge.get_optional<std::string>("<xmlattr>.target");
            if (!source || !target) {
                throw Error(ErrorKind::MalformedGexf, "edge without source or target");
            }
            if (!declared.count(*source) || !declared.count(*target)) {
                throw Error(ErrorKind::MalformedGexf, "edge references undeclared node");
            }
            const auto weight = detail::parse_gexf_weight(edge.get<std::string>("<xmlattr>.weight", "1"));
            edges.emplace_back(*source, *target, weight);
        }
    }

    CoCommenterGraph result;
    try {
        result = CoCommenterGraph(channel, nodes, edges);
    } catch (const Error& e) {
        throw Error(ErrorKind::MalformedGexf, e.what());
    }
    return result;
}

} // namespace mobgraph

#endif // MOBGRAPH_GEXF_HPP
