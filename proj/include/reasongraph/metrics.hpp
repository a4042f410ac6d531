#pragma once
// Structural metrics over a reasoning graph. Edges live on unordered pairs
// i < j, oriented earlier step -> later step; both support and contradict
// edges count toward degrees and density.

#include <optional>
#include <string>
#include <vector>

#include "reasongraph/errors.hpp"
#include "reasongraph/graph.hpp"
#include "reasongraph/trace.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

struct DegreeStats {
    std::vector<size_t> out_degree; // d-: edges (i, j), j > i, from node i
    std::vector<size_t> in_degree;  // d+: edges (i, j), j > i, into node j
    std::vector<size_t> total_degree;
};

inline DegreeStats degrees(const ReasoningGraph& g) {
    validate_graph(g);
    size_t k = g.node_count();
    DegreeStats d;
    d.out_degree.assign(k, 0);
    d.in_degree.assign(k, 0);
    d.total_degree.assign(k, 0);
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = i + 1; j < k; ++j) {
            if (g.adjacency[i][j] != 0) {
                d.out_degree[i]++;
                d.in_degree[j]++;
            }
        }
    }
    for (size_t i = 0; i < k; ++i) d.total_degree[i] = d.out_degree[i] + d.in_degree[i];
    return d;
}

inline size_t edge_count(const ReasoningGraph& g) {
    size_t edges = 0;
    for (size_t i = 0; i < g.node_count(); ++i)
        for (size_t j = i + 1; j < g.node_count(); ++j)
            if (g.adjacency[i][j] != 0) ++edges;
    return edges;
}

inline double exploration_density(const ReasoningGraph& g) {
    validate_graph(g);
    size_t k = g.node_count();
    if (k < 2) throw UndefinedMetric("exploration density needs at least 2 nodes");
    return static_cast<double>(edge_count(g)) / (static_cast<double>(k) * static_cast<double>(k - 1));
}

inline double branching_ratio(const ReasoningGraph& g) {
    auto d = degrees(g);
    size_t k = g.node_count();
    if (k == 0) return 0.0;
    size_t branching = 0;
    for (size_t i = 0; i < k; ++i)
        if (d.out_degree[i] > 1) ++branching;
    return static_cast<double>(branching) / static_cast<double>(k);
}

inline double convergence_ratio(const ReasoningGraph& g) {
    auto d = degrees(g);
    size_t k = g.node_count();
    if (k == 0) return 0.0;
    size_t converging = 0;
    for (size_t i = 0; i < k; ++i)
        if (d.in_degree[i] > 1) ++converging;
    return static_cast<double>(converging) / static_cast<double>(k);
}

inline double linearity(const ReasoningGraph& g) {
    auto d = degrees(g);
    size_t k = g.node_count();
    if (k == 0) return 1.0;
    size_t busy = 0;
    for (size_t i = 0; i < k; ++i)
        if (d.total_degree[i] > 2) ++busy;
    return 1.0 - static_cast<double>(busy) / static_cast<double>(k);
}

struct GraphMetrics {
    size_t node_count = 0;
    size_t edge_count = 0;
    std::optional<double> exploration_density; // absent for K < 2
    double branching_ratio = 0.0;
    double convergence_ratio = 0.0;
    double linearity = 1.0;
    size_t support_edge_count = 0;
    size_t contradict_edge_count = 0;
};

inline GraphMetrics metrics(const ReasoningGraph& g) {
    validate_graph(g);
    GraphMetrics m;
    m.node_count = g.node_count();
    m.edge_count = edge_count(g);
    for (size_t i = 0; i < g.node_count(); ++i) {
        for (size_t j = i + 1; j < g.node_count(); ++j) {
            if (g.adjacency[i][j] > 0) m.support_edge_count++;
            if (g.adjacency[i][j] < 0) m.contradict_edge_count++;
        }
    }
    if (m.node_count >= 2) m.exploration_density = exploration_density(g);
    m.branching_ratio = branching_ratio(g);
    m.convergence_ratio = convergence_ratio(g);
    m.linearity = linearity(g);
    return m;
}

// One metrics.csv row; column layout is documented in FORMATS.md.
struct MetricRow {
    std::string trace_id;
    std::string model_id;
    PromptRegime prompt_regime = PromptRegime::zero_shot;
    unsigned shot_count = 0;
    std::optional<bool> correct;
    size_t step_count = 0;
    size_t edge_count = 0;
    std::optional<double> rho_e;
    double gamma_b = 0.0;
    double gamma_c = 0.0;
    double linearity = 1.0;
    size_t support_edges = 0;
    size_t contradict_edges = 0;
    std::optional<double> total_tokens; // joined from trace metadata, never serialized
};

// Builds the CSV row from a graph whose provenance carries the trace
// metadata, so the row is identical whether computed in-pipeline or from a
// graph file on disk.
inline MetricRow metric_row(const ReasoningGraph& g) {
    GraphMetrics m = metrics(g);
    MetricRow row;
    row.trace_id = g.provenance.trace_id;
    row.model_id = g.provenance.model_id;
    auto regime = prompt_regime_from_string(g.provenance.prompt_regime);
    row.prompt_regime = regime.value_or(PromptRegime::zero_shot);
    row.shot_count = g.provenance.shot_count;
    row.correct = g.provenance.correct;
    row.step_count = m.node_count;
    row.edge_count = m.edge_count;
    row.rho_e = m.exploration_density;
    row.gamma_b = m.branching_ratio;
    row.gamma_c = m.convergence_ratio;
    row.linearity = m.linearity;
    row.support_edges = m.support_edge_count;
    row.contradict_edges = m.contradict_edge_count;
    if (g.provenance.trace_token_count > 0)
        row.total_tokens = static_cast<double>(g.provenance.trace_token_count);
    return row;
}

inline std::string metrics_csv_header() {
    return "trace_id,model_id,prompt_regime,shot_count,correct,K,edges,rho_E,gamma_B,gamma_C,"
           "linearity,support_edges,contradict_edges";
}

inline std::string metric_row_to_csv(const MetricRow& row) {
    std::string out;
    out += csv_escape(row.trace_id);
    out += ',';
    out += csv_escape(row.model_id);
    out += ',';
    out += to_string(row.prompt_regime);
    out += ',';
    out += std::to_string(row.shot_count);
    out += ',';
    out += row.correct ? (*row.correct ? "true" : "false") : "";
    out += ',';
    out += std::to_string(row.step_count);
    out += ',';
    out += std::to_string(row.edge_count);
    out += ',';
    out += row.rho_e ? format_general(*row.rho_e) : "";
    out += ',';
    out += format_general(row.gamma_b);
    out += ',';
    out += format_general(row.gamma_c);
    out += ',';
    out += format_general(row.linearity);
    out += ',';
    out += std::to_string(row.support_edges);
    out += ',';
    out += std::to_string(row.contradict_edges);
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

} // namespace detail

inline std::vector<MetricRow> parse_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("metrics CSV is empty", 0);
    if (trim(line) != metrics_csv_header())
        throw ParseError("metrics CSV header does not match the documented layout", 1);

    std::vector<MetricRow> rows;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 13) throw ParseError("expected 13 fields", line_no);
        MetricRow row;
        try {
            row.trace_id = fields[0];
            row.model_id = fields[1];
            auto regime = prompt_regime_from_string(fields[2]);
            if (!regime) throw ParseError("unknown prompt_regime '" + fields[2] + "'", line_no);
            row.prompt_regime = *regime;
            row.shot_count = static_cast<unsigned>(std::stoul(fields[3]));
            if (fields[4] == "true") row.correct = true;
            else if (fields[4] == "false") row.correct = false;
            else if (!fields[4].empty()) throw ParseError("correct must be true/false/empty", line_no);
            row.step_count = std::stoull(fields[5]);
            row.edge_count = std::stoull(fields[6]);
            if (!fields[7].empty()) row.rho_e = std::stod(fields[7]);
            row.gamma_b = std::stod(fields[8]);
            row.gamma_c = std::stod(fields[9]);
            row.linearity = std::stod(fields[10]);
            row.support_edges = std::stoull(fields[11]);
            row.contradict_edges = std::stoull(fields[12]);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad numeric field: ") + e.what(), line_no);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace reasongraph
