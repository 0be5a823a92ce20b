#ifndef MOBGRAPH_INGEST_HPP
#define MOBGRAPH_INGEST_HPP

#include "common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

/**
 * @file ingest.hpp
 *
 * @brief Comment-record parsing and co-commenter network construction.
 */

namespace mobgraph {

/**
 * One comment event. `text` is carried through but never analyzed.
 */
struct CommentRecord {
    std::string channel_id;
    std::string video_id;
    std::string commenter_id;
    std::string comment_id;
    std::optional<std::string> published_at;
    std::optional<std::string> text;

    friend bool operator==(const CommentRecord&, const CommentRecord&) = default;
};

enum class CommentFormat { Csv, JsonLines };

struct ParseOptions {
    /// When true, a repeated comment_id is an error instead of being dropped with a warning.
    bool strict_duplicates = false;
};

struct ParsedComments {
    std::vector<CommentRecord> records;
    std::vector<std::string> warnings;
};

namespace detail {

// Splits one RFC-4180 record starting at the current stream position.
// Returns false at end of input. `lines_consumed` counts physical lines.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& lines_consumed, bool& malformed) {
    fields.clear();
    lines_consumed = 0;
    malformed = false;
    if (in.peek() == std::char_traits<char>::eof()) {
        return false;
    }

    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    int ch;
    while (true) {
        ch = in.get();
        if (ch == std::char_traits<char>::eof()) {
            if (in_quotes) {
                malformed = true;
            }
            fields.push_back(std::move(field));
            ++lines_consumed;
            return true;
        }
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++lines_consumed;
                }
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            if (!field.empty() || field_was_quoted) {
                malformed = true;
            }
            in_quotes = true;
            field_was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (c == '\r' && in.peek() == '\n') {
            continue;
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            ++lines_consumed;
            return true;
        } else {
            if (field_was_quoted) {
                malformed = true;
            }
            field.push_back(c);
        }
    }
}

inline void strip_bom(std::istream& in) {
    if (in.peek() == 0xEF) {
        char bom[3];
        in.read(bom, 3);
        if (!(static_cast<unsigned char>(bom[1]) == 0xBB && static_cast<unsigned char>(bom[2]) == 0xBF)) {
            for (int i = 2; i >= 0; --i) {
                in.putback(bom[i]);
            }
        }
    }
}

class DuplicateFilter {
public:
    DuplicateFilter(const ParseOptions& options, ParsedComments& out) : options_(options), out_(out) {}

    void add(CommentRecord record, std::size_t line) {
        if (!seen_.insert(record.comment_id).second) {
            if (options_.strict_duplicates) {
                throw Error(ErrorKind::DuplicateCommentId, record.comment_id);
            }
            out_.warnings.push_back("duplicate comment_id '" + record.comment_id + "' on line " + std::to_string(line) + " dropped");
            return;
        }
        out_.records.push_back(std::move(record));
    }

private:
    const ParseOptions& options_;
    ParsedComments& out_;
    std::unordered_set<std::string> seen_;
};

inline ParsedComments parse_csv(std::istream& in, const ParseOptions& options) {
    ParsedComments out;
    strip_bom(in);

    std::vector<std::string> fields;
    std::size_t consumed = 0;
    bool malformed = false;
    if (!read_csv_record(in, fields, consumed, malformed) || malformed) {
        throw Error(ErrorKind::MissingColumn, "missing CSV header row");
    }

    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        column.emplace(fields[i], i);
    }
    const char* required[] = {"channel_id", "video_id", "commenter_id", "comment_id"};
    for (const char* name : required) {
        if (!column.count(name)) {
            throw Error(ErrorKind::MissingColumn, name);
        }
    }
    auto optional_column = [&](const char* name) -> std::optional<std::size_t> {
        auto it = column.find(name);
        if (it == column.end()) {
            return std::nullopt;
        }
        return it->second;
    };
    const auto published_col = optional_column("published_at");
    const auto text_col = optional_column("text");
    const std::size_t width = fields.size();

    DuplicateFilter filter(options, out);
    std::size_t line = consumed + 1;
    while (read_csv_record(in, fields, consumed, malformed)) {
        const std::size_t row_line = line;
        line += consumed;
        if (fields.size() == 1 && fields[0].empty() && !malformed) {
            continue;
        }
        if (malformed) {
            throw Error(ErrorKind::MalformedRow, "line " + std::to_string(row_line) + ": bad quoting");
        }
        if (fields.size() != width) {
            throw Error(ErrorKind::MalformedRow, "line " + std::to_string(row_line) + ": expected " + std::to_string(width) +
                                                     " fields, found " + std::to_string(fields.size()));
        }
        CommentRecord record;
        record.channel_id = fields[column["channel_id"]];
        record.video_id = fields[column["video_id"]];
        record.commenter_id = fields[column["commenter_id"]];
        record.comment_id = fields[column["comment_id"]];
        for (const char* name : required) {
            if (fields[column[name]].empty()) {
                throw Error(ErrorKind::MalformedRow, "line " + std::to_string(row_line) + ": empty " + name);
            }
        }
        if (published_col && !fields[*published_col].empty()) {
            record.published_at = fields[*published_col];
        }
        if (text_col && !fields[*text_col].empty()) {
            record.text = fields[*text_col];
        }
        filter.add(std::move(record), row_line);
    }
    return out;
}

inline ParsedComments parse_json_lines(std::istream& in, const ParseOptions& options) {
    ParsedComments out;
    DuplicateFilter filter(options, out);
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') {
            text.pop_back();
        }
        if (text.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const auto where = "line " + std::to_string(line);
        nlohmann::json obj = nlohmann::json::parse(text, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            throw Error(ErrorKind::MalformedRow, where + ": not a JSON object");
        }
        auto required = [&](const char* key) {
            auto it = obj.find(key);
            if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
                throw Error(ErrorKind::MalformedRow, where + ": missing or empty " + key);
            }
            return it->get<std::string>();
        };
        auto optional = [&](const char* key) -> std::optional<std::string> {
            auto it = obj.find(key);
            if (it == obj.end() || it->is_null()) {
                return std::nullopt;
            }
            if (!it->is_string()) {
                throw Error(ErrorKind::MalformedRow, where + ": " + key + " must be a string");
            }
            return it->get<std::string>();
        };
        CommentRecord record;
        record.channel_id = required("channel_id");
        record.video_id = required("video_id");
        record.commenter_id = required("commenter_id");
        record.comment_id = required("comment_id");
        record.published_at = optional("published_at");
        record.text = optional("text");
        filter.add(std::move(record), line);
    }
    return out;
}

inline std::string csv_escape(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

} // namespace detail

/**
 * Parses comment records in input order. Malformed rows abort with their 1-based line number.
 */
inline ParsedComments parse_comments(std::istream& in, CommentFormat format, const ParseOptions& options = {}) {
    return format == CommentFormat::Csv ? detail::parse_csv(in, options) : detail::parse_json_lines(in, options);
}

/**
 * Writes records as the comment CSV consumed by `parse_comments`.
 */
inline void write_comments_csv(const std::vector<CommentRecord>& records, std::ostream& out) {
    out << "channel_id,video_id,commenter_id,comment_id,published_at,text\n";
    for (const auto& r : records) {
        out << detail::csv_escape(r.channel_id) << ',' << detail::csv_escape(r.video_id) << ','
            << detail::csv_escape(r.commenter_id) << ',' << detail::csv_escape(r.comment_id) << ','
            << detail::csv_escape(r.published_at.value_or("")) << ',' << detail::csv_escape(r.text.value_or("")) << '\n';
    }
}

/// Distinct channel ids, sorted.
inline std::vector<std::string> list_channels(const std::vector<CommentRecord>& records) {
    std::set<std::string> ids;
    for (const auto& r : records) {
        ids.insert(r.channel_id);
    }
    return {ids.begin(), ids.end()};
}

struct WeightedEdge {
    std::size_t source; ///< index into `nodes`, always < target
    std::size_t target;
    std::uint64_t weight;

    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
    friend auto operator<=>(const WeightedEdge&, const WeightedEdge&) = default;
};

/**
 * @brief Weighted undirected commenter graph for one channel.
 *
 * Nodes are kept sorted by id and edges sorted by (source, target) with
 * source < target, so two graphs with the same content compare equal.
 */
class CoCommenterGraph {
public:
    CoCommenterGraph() = default;

    /**
     * Builds a graph from explicit nodes and string-keyed edges.
     * Nodes referenced by edges are added automatically.
     */
    CoCommenterGraph(std::string channel_id, std::vector<std::string> nodes,
                     const std::vector<std::tuple<std::string, std::string, std::uint64_t>>& edges)
        : channel_id_(std::move(channel_id)) {
        for (const auto& [u, v, w] : edges) {
            nodes.push_back(u);
            nodes.push_back(v);
        }
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        nodes_ = std::move(nodes);

        std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> merged;
        for (const auto& [u, v, w] : edges) {
            if (u == v) {
                throw Error(ErrorKind::InvalidConfig, "self-loop on '" + u + "'");
            }
            if (w == 0) {
                throw Error(ErrorKind::InvalidConfig, "edge weight must be positive");
            }
            auto a = index_of(u).value();
            auto b = index_of(v).value();
            if (a > b) {
                std::swap(a, b);
            }
            if (!merged.emplace(std::make_pair(a, b), w).second) {
                throw Error(ErrorKind::InvalidConfig, "duplicate edge '" + u + "'-'" + v + "'");
            }
        }
        edges_.reserve(merged.size());
        for (const auto& [key, w] : merged) {
            edges_.push_back({key.first, key.second, w});
        }
    }

    const std::string& channel_id() const { return channel_id_; }
    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<WeightedEdge>& edges() const { return edges_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    std::optional<std::size_t> index_of(const std::string& id) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
        if (it == nodes_.end() || *it != id) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - nodes_.begin());
    }

    /// Sorted neighbor indices for every node.
    std::vector<std::vector<std::size_t>> adjacency() const {
        std::vector<std::vector<std::size_t>> adj(nodes_.size());
        for (const auto& e : edges_) {
            adj[e.source].push_back(e.target);
            adj[e.target].push_back(e.source);
        }
        for (auto& list : adj) {
            std::sort(list.begin(), list.end());
        }
        return adj;
    }

    /// Edge list keyed by node ids, sorted; the form used for structural comparison.
    std::vector<std::tuple<std::string, std::string, std::uint64_t>> canonical_edges() const {
        std::vector<std::tuple<std::string, std::string, std::uint64_t>> out;
        out.reserve(edges_.size());
        for (const auto& e : edges_) {
            out.emplace_back(nodes_[e.source], nodes_[e.target], e.weight);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    friend bool operator==(const CoCommenterGraph&, const CoCommenterGraph&) = default;

private:
    std::string channel_id_;
    std::vector<std::string> nodes_;
    std::vector<WeightedEdge> edges_;
};

struct GraphOptions {
    std::uint64_t min_shared_videos = 1;
    /// Keep commenters that end up with no retained edge.
    bool keep_isolated = false;
};

namespace detail {

// Builds a graph from commenter-by-video incidence. `videos` maps a video key to its commenters.
inline CoCommenterGraph build_from_incidence(std::string graph_id, const std::map<std::string, std::set<std::string>>& videos,
                                             const GraphOptions& options) {
    std::set<std::string> commenters;
    for (const auto& [video, who] : videos) {
        commenters.insert(who.begin(), who.end());
    }
    std::vector<std::string> all(commenters.begin(), commenters.end());
    std::unordered_map<std::string, std::uint32_t> index;
    index.reserve(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        index.emplace(all[i], static_cast<std::uint32_t>(i));
    }

    std::unordered_map<std::uint64_t, std::uint64_t> shared;
    std::vector<std::uint32_t> members;
    for (const auto& [video, who] : videos) {
        members.clear();
        for (const auto& c : who) {
            members.push_back(index.at(c));
        }
        // `who` is sorted by id, and ids map to increasing indices.
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                ++shared[(static_cast<std::uint64_t>(members[i]) << 32) | members[j]];
            }
        }
    }

    std::vector<std::tuple<std::string, std::string, std::uint64_t>> edges;
    std::vector<std::string> nodes;
    std::vector<char> touched(all.size(), 0);
    for (const auto& [key, count] : shared) {
        if (count < options.min_shared_videos) {
            continue;
        }
        const auto a = static_cast<std::uint32_t>(key >> 32);
        const auto b = static_cast<std::uint32_t>(key & 0xffffffffU);
        touched[a] = touched[b] = 1;
        edges.emplace_back(all[a], all[b], count);
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (options.keep_isolated || touched[i]) {
            nodes.push_back(all[i]);
        }
    }
    return CoCommenterGraph(std::move(graph_id), std::move(nodes), edges);
}

} // namespace detail

/**
 * Builds the co-commenter network of one channel: commenters are linked when
 * they commented on the same video, weighted by the number of such videos.
 * Repeat comments by one commenter on one video count once.
 */
inline CoCommenterGraph build_co_commenter_graph(const std::vector<CommentRecord>& records, const std::string& channel,
                                                 const GraphOptions& options = {}) {
    if (options.min_shared_videos < 1) {
        throw Error(ErrorKind::InvalidConfig, "min_shared_videos must be >= 1");
    }
    std::map<std::string, std::set<std::string>> videos;
    for (const auto& r : records) {
        if (r.channel_id == channel) {
            videos[r.video_id].insert(r.commenter_id);
        }
    }
    if (videos.empty()) {
        throw Error(ErrorKind::EmptyChannel, channel);
    }
    return detail::build_from_incidence(channel, videos, options);
}

/**
 * Single network over the whole corpus; videos are keyed by (channel, video)
 * so commenters co-occurring anywhere are linked.
 */
inline CoCommenterGraph build_merged_co_commenter_graph(const std::vector<CommentRecord>& records, const std::string& graph_id,
                                                        const GraphOptions& options = {}) {
    if (options.min_shared_videos < 1) {
        throw Error(ErrorKind::InvalidConfig, "min_shared_videos must be >= 1");
    }
    std::map<std::string, std::set<std::string>> videos;
    for (const auto& r : records) {
        videos[r.channel_id + '\x1f' + r.video_id].insert(r.commenter_id);
    }
    if (videos.empty()) {
        throw Error(ErrorKind::EmptyChannel, graph_id);
    }
    return detail::build_from_incidence(graph_id, videos, options);
}

} // namespace mobgraph

#endif // MOBGRAPH_INGEST_HPP
