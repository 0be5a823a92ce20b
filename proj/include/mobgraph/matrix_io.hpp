#ifndef MOBGRAPH_MATRIX_IO_HPP
#define MOBGRAPH_MATRIX_IO_HPP

#include "common.hpp"
#include "ingest.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace mobgraph {

/**
 * @brief Matrix whose rows are keyed by graph (channel) id.
 *
 * Used for both the 128-d embeddings and the reduced coordinates.
 */
struct LabeledMatrix {
    std::vector<std::string> ids;
    Matrix values;

    friend bool operator==(const LabeledMatrix&, const LabeledMatrix&) = default;
};

using EmbeddingMatrix = LabeledMatrix;
using ReducedMatrix = LabeledMatrix;

/// CSV with header `graph_id,<prefix>0,<prefix>1,...`.
inline void write_matrix_csv(const LabeledMatrix& m, const std::string& column_prefix, std::ostream& out) {
    out << "graph_id";
    for (std::size_t c = 0; c < m.values.cols(); ++c) {
        out << ',' << column_prefix << c;
    }
    out << '\n';
    for (std::size_t r = 0; r < m.values.rows(); ++r) {
        out << detail::csv_escape(m.ids[r]);
        for (std::size_t c = 0; c < m.values.cols(); ++c) {
            out << ',' << format_double(m.values(r, c));
        }
        out << '\n';
    }
}

inline LabeledMatrix read_matrix_csv(std::istream& in) {
    std::vector<std::string> fields;
    std::size_t consumed = 0;
    bool malformed = false;
    if (!detail::read_csv_record(in, fields, consumed, malformed) || malformed || fields.empty() || fields[0] != "graph_id") {
        throw Error(ErrorKind::MissingColumn, "matrix CSV must start with a graph_id column");
    }
    const std::size_t cols = fields.size() - 1;
    std::vector<std::string> ids;
    std::vector<double> values;
    std::size_t line = consumed + 1;
    while (detail::read_csv_record(in, fields, consumed, malformed)) {
        const auto row_line = line;
        line += consumed;
        if (fields.size() == 1 && fields[0].empty()) {
            continue;
        }
        if (malformed || fields.size() != cols + 1) {
            throw Error(ErrorKind::MalformedRow, "line " + std::to_string(row_line));
        }
        ids.push_back(fields[0]);
        for (std::size_t c = 1; c <= cols; ++c) {
            double v = 0;
            const auto& f = fields[c];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size()) {
                throw Error(ErrorKind::MalformedRow, "line " + std::to_string(row_line) + ": bad number '" + f + "'");
            }
            values.push_back(v);
        }
    }
    LabeledMatrix m{ids, Matrix(ids.size(), cols)};
    m.values.data() = std::move(values);
    return m;
}

inline nlohmann::json matrix_to_json(const LabeledMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.values.rows(); ++r) {
        auto row = m.values.row(r);
        rows.push_back({{"graph_id", m.ids[r]}, {"vector", std::vector<double>(row.begin(), row.end())}});
    }
    return {{"dim", m.values.cols()}, {"rows", rows}};
}

} // namespace mobgraph

#endif // MOBGRAPH_MATRIX_IO_HPP
