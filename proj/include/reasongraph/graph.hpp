#pragma once
// Core reasoning-graph types shared by the clustering, estimation and metric
// layers, plus their JSON and Graphviz serializations.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/errors.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

enum class Relation : int { contradict = -1, independent = 0, support = 1 };

inline std::string to_string(Relation r) {
    switch (r) {
        case Relation::support: return "support";
        case Relation::contradict: return "contradict";
        case Relation::independent: return "independent";
    }
    return "independent";
}

inline std::optional<Relation> relation_from_string(std::string_view s) {
    if (s == "support") return Relation::support;
    if (s == "contradict") return Relation::contradict;
    if (s == "independent") return Relation::independent;
    return std::nullopt;
}

// A contiguous run of reasoning units; one node of the graph.
struct ReasoningStep {
    size_t index = 0;
    std::string title;
    std::string content; // delimiter-joined text of the member units
    std::vector<size_t> unit_indices;
    size_t token_count = 0;
};

// Running label tallies for one ordered pair (i, j), i < j.
struct EdgeEstimate {
    size_t i = 0;
    size_t j = 0;
    // counts[0] -> label -1, counts[1] -> label 0, counts[2] -> label +1
    std::array<std::uint64_t, 3> counts{0, 0, 0};
    std::uint64_t samples_seen = 0;
    std::array<double, 3> p_hat{0.0, 0.0, 0.0};
    double standard_error = 0.0;
    double signed_confidence = 0.0;

    std::uint64_t count(Relation r) const { return counts[static_cast<int>(r) + 1]; }
};

struct EstimatorConfig {
    double epsilon = 0.05;
    unsigned r_max = 20;
    unsigned r_min = 3;
    double tau_pos = 0.4;
    double tau_neg = 0.3;

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("estimator.epsilon must be in (0, 1)");
        if (!(tau_pos > 0.0 && tau_pos <= 1.0)) throw ConfigError("estimator.tau_pos must be in (0, 1]");
        if (!(tau_neg > 0.0 && tau_neg <= 1.0)) throw ConfigError("estimator.tau_neg must be in (0, 1]");
        if (r_min == 0 || r_max == 0 || r_min > r_max) throw ConfigError("estimator requires 0 < r_min <= r_max");
    }
};

struct GraphProvenance {
    std::string trace_id;
    // trace metadata carried through so downstream stages work from graph
    // files alone
    std::string model_id;
    std::string prompt_regime = "zero_shot";
    unsigned shot_count = 0;
    std::optional<bool> correct;
    std::string task_id;
    std::uint64_t trace_token_count = 0;
    double clustering_composite = 0.0;
    EstimatorConfig estimator;
    std::uint64_t total_samples = 0;
    std::uint64_t rejected_samples = 0;
    std::string backend_id;
    std::string embedder_id;
};

struct ReasoningGraph {
    std::vector<ReasoningStep> steps;
    std::vector<std::vector<int>> adjacency; // K x K, entries in {-1, 0, +1}
    std::vector<std::vector<double>> weights; // K x K, antisymmetric
    std::vector<EdgeEstimate> estimates; // one per pair i < j
    GraphProvenance provenance;

    size_t node_count() const { return steps.size(); }
};

inline void validate_graph(const ReasoningGraph& g) {
    size_t k = g.steps.size();
    if (g.adjacency.size() != k || g.weights.size() != k)
        throw InvalidGraph("adjacency/weights size does not match step count");
    for (size_t i = 0; i < k; ++i) {
        if (g.adjacency[i].size() != k || g.weights[i].size() != k)
            throw InvalidGraph("adjacency/weights rows must be K wide");
        if (g.adjacency[i][i] != 0 || g.weights[i][i] != 0.0)
            throw InvalidGraph("diagonal must be zero");
        for (size_t j = 0; j < k; ++j) {
            int a = g.adjacency[i][j];
            double w = g.weights[i][j];
            if (a != -1 && a != 0 && a != 1) throw InvalidGraph("adjacency entries must be -1, 0 or +1");
            if (w < -1.0 || w > 1.0) throw InvalidGraph("weights must lie in [-1, 1]");
            if (g.adjacency[j][i] != -a) throw InvalidGraph("adjacency must be antisymmetric");
            if (g.weights[j][i] != -w) throw InvalidGraph("weights must be antisymmetric");
            if (a != 0 && a * w <= 0.0) throw InvalidGraph("nonzero adjacency must share the weight's sign");
        }
    }
}

inline nlohmann::ordered_json graph_to_json(const ReasoningGraph& g) {
    nlohmann::ordered_json doc;
    doc["trace_id"] = g.provenance.trace_id;
    auto steps = nlohmann::ordered_json::array();
    for (const auto& s : g.steps) {
        steps.push_back({{"index", s.index},
                         {"title", s.title},
                         {"content", s.content},
                         {"unit_indices", s.unit_indices}});
    }
    doc["steps"] = std::move(steps);
    doc["adjacency"] = g.adjacency;
    doc["weights"] = g.weights;
    auto estimates = nlohmann::ordered_json::array();
    for (const auto& e : g.estimates) {
        estimates.push_back({{"pair", {e.i, e.j}},
                             {"counts",
                              {{"-1", e.counts[0]}, {"0", e.counts[1]}, {"1", e.counts[2]}}},
                             {"se", e.standard_error},
                             {"w", e.signed_confidence}});
    }
    doc["estimates"] = std::move(estimates);
    doc["provenance"] = {{"trace_id", g.provenance.trace_id},
                         {"model_id", g.provenance.model_id},
                         {"prompt_regime", g.provenance.prompt_regime},
                         {"shot_count", g.provenance.shot_count},
                         {"correct", g.provenance.correct ? nlohmann::ordered_json(*g.provenance.correct)
                                                          : nlohmann::ordered_json(nullptr)},
                         {"task_id", g.provenance.task_id},
                         {"trace_token_count", g.provenance.trace_token_count},
                         {"clustering_composite", g.provenance.clustering_composite},
                         {"estimator_config",
                          {{"epsilon", g.provenance.estimator.epsilon},
                           {"r_max", g.provenance.estimator.r_max},
                           {"r_min", g.provenance.estimator.r_min},
                           {"tau_pos", g.provenance.estimator.tau_pos},
                           {"tau_neg", g.provenance.estimator.tau_neg}}},
                         {"total_samples", g.provenance.total_samples},
                         {"rejected_samples", g.provenance.rejected_samples},
                         {"backend_id", g.provenance.backend_id},
                         {"embedder_id", g.provenance.embedder_id}};
    return doc;
}

inline ReasoningGraph graph_from_json(const nlohmann::json& doc) {
    ReasoningGraph g;
    try {
        g.provenance.trace_id = doc.at("trace_id").get<std::string>();
        for (const auto& s : doc.at("steps")) {
            ReasoningStep step;
            step.index = s.at("index").get<size_t>();
            step.title = s.at("title").get<std::string>();
            step.content = s.at("content").get<std::string>();
            step.unit_indices = s.at("unit_indices").get<std::vector<size_t>>();
            step.token_count = count_whitespace_tokens(step.content);
            g.steps.push_back(std::move(step));
        }
        g.adjacency = doc.at("adjacency").get<std::vector<std::vector<int>>>();
        g.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
        if (doc.contains("estimates")) {
            for (const auto& e : doc.at("estimates")) {
                EdgeEstimate est;
                est.i = e.at("pair").at(0).get<size_t>();
                est.j = e.at("pair").at(1).get<size_t>();
                est.counts[0] = e.at("counts").at("-1").get<std::uint64_t>();
                est.counts[1] = e.at("counts").at("0").get<std::uint64_t>();
                est.counts[2] = e.at("counts").at("1").get<std::uint64_t>();
                est.samples_seen = est.counts[0] + est.counts[1] + est.counts[2];
                est.standard_error = e.at("se").get<double>();
                est.signed_confidence = e.at("w").get<double>();
                if (est.samples_seen > 0)
                    for (int c = 0; c < 3; ++c)
                        est.p_hat[c] = static_cast<double>(est.counts[c]) / static_cast<double>(est.samples_seen);
                g.estimates.push_back(est);
            }
        }
        if (doc.contains("provenance")) {
            const auto& p = doc.at("provenance");
            g.provenance.model_id = p.value("model_id", std::string());
            g.provenance.prompt_regime = p.value("prompt_regime", std::string("zero_shot"));
            g.provenance.shot_count = p.value("shot_count", 0u);
            if (p.contains("correct") && !p.at("correct").is_null())
                g.provenance.correct = p.at("correct").get<bool>();
            g.provenance.task_id = p.value("task_id", std::string());
            g.provenance.trace_token_count = p.value("trace_token_count", 0ull);
            g.provenance.clustering_composite = p.value("clustering_composite", 0.0);
            g.provenance.total_samples = p.value("total_samples", 0ull);
            g.provenance.rejected_samples = p.value("rejected_samples", 0ull);
            g.provenance.backend_id = p.value("backend_id", std::string());
            g.provenance.embedder_id = p.value("embedder_id", std::string());
            if (p.contains("estimator_config")) {
                const auto& c = p.at("estimator_config");
                g.provenance.estimator.epsilon = c.value("epsilon", 0.05);
                g.provenance.estimator.r_max = c.value("r_max", 20u);
                g.provenance.estimator.r_min = c.value("r_min", 3u);
                g.provenance.estimator.tau_pos = c.value("tau_pos", 0.4);
                g.provenance.estimator.tau_neg = c.value("tau_neg", 0.3);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("graph JSON: ") + e.what(), 0);
    }
    validate_graph(g);
    return g;
}

// Builds a structurally valid graph around a bare ternary matrix (weights
// mirror the adjacency signs, steps are placeholders). Used by validators
// and tests that only care about topology.
inline ReasoningGraph graph_from_adjacency(const std::vector<std::vector<int>>& adjacency,
                                           const std::string& trace_id = "synthetic") {
    ReasoningGraph g;
    size_t k = adjacency.size();
    for (size_t i = 0; i < k; ++i) {
        ReasoningStep s;
        s.index = i;
        s.title = "step " + std::to_string(i);
        s.content = "step " + std::to_string(i);
        s.unit_indices = {i};
        s.token_count = 2;
        g.steps.push_back(std::move(s));
    }
    g.adjacency = adjacency;
    g.weights.assign(k, std::vector<double>(k, 0.0));
    for (size_t i = 0; i < k; ++i)
        for (size_t j = 0; j < k; ++j) g.weights[i][j] = static_cast<double>(adjacency[i][j]);
    g.provenance.trace_id = trace_id;
    validate_graph(g);
    return g;
}

inline std::string dot_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    return out;
}

// One directed edge per pair (i, j), i < j, with A_ij != 0. Support edges are
// solid, contradict edges dashed; labels carry w_ij to two decimals.
inline std::string graph_to_dot(const ReasoningGraph& g) {
    std::string out = "digraph reasoning {\n  rankdir=TB;\n  node [shape=box];\n";
    for (const auto& s : g.steps) {
        out += "  n" + std::to_string(s.index) + " [label=\"s" + std::to_string(s.index) + ": " +
               dot_escape(s.title) + "\"];\n";
    }
    size_t k = g.node_count();
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = i + 1; j < k; ++j) {
            int a = g.adjacency[i][j];
            if (a == 0) continue;
            out += "  n" + std::to_string(i) + " -> n" + std::to_string(j) +
                   " [style=" + (a > 0 ? std::string("solid") : std::string("dashed")) + ", label=\"" +
                   format_double(g.weights[i][j], 2) + "\"];\n";
        }
    }
    out += "}\n";
    return out;
}

} // namespace reasongraph
