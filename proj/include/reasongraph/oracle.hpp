#pragma once
// First-principles validators: a seeded stochastic semantics backend with
// known ground-truth label probabilities, a brute-force metric computation,
// and an independent candidate selector. These deliberately share no logic
// with the modules they cross-check, so agreement is evidence.

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/clustering.hpp"
#include "reasongraph/embedding.hpp"
#include "reasongraph/errors.hpp"
#include "reasongraph/gateway.hpp"
#include "reasongraph/metrics.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

struct PairTruth {
    double p_support = 0.0;
    double p_contradict = 0.0;
    double p_independent = 1.0;

    void validate() const {
        for (double p : {p_support, p_contradict, p_independent})
            if (p < 0.0 || p > 1.0) throw ConfigError("pair probabilities must lie in [0, 1]");
        if (std::abs(p_support + p_contradict + p_independent - 1.0) > 1e-12)
            throw ConfigError("pair probabilities must sum to 1");
    }
};

struct EdgeGroundTruth {
    size_t step_count = 0;
    std::map<std::pair<size_t, size_t>, PairTruth> pairs;

    void validate() const {
        if (step_count < 2) throw ConfigError("ground truth needs at least 2 steps");
        for (const auto& [pair, truth] : pairs) {
            if (!(pair.first < pair.second) || pair.second >= step_count)
                throw ConfigError("ground-truth pairs must satisfy i < j < K");
            truth.validate();
        }
    }

    // Uniform truth for every pair of a K-step graph.
    static EdgeGroundTruth uniform(size_t step_count, PairTruth truth) {
        EdgeGroundTruth gt;
        gt.step_count = step_count;
        for (size_t i = 0; i < step_count; ++i)
            for (size_t j = i + 1; j < step_count; ++j) gt.pairs[{i, j}] = truth;
        gt.validate();
        return gt;
    }
};

// Backend whose semantics responses draw each pair's label independently
// from its ground-truth distribution. Draws are reproducible under the seed
// and i.i.d. across pairs and rounds. One instance per estimation run; the
// internal generator is not synchronized.
class SimulatedSemanticsBackend final : public LlmBackend {
public:
    SimulatedSemanticsBackend(EdgeGroundTruth truth, std::uint64_t seed)
        : truth_(std::move(truth)), rng_(seed) {
        truth_.validate();
    }

    std::string complete(const PromptRequest& request) override {
        if (request.template_id != TemplateId::semantics)
            throw BackendUnavailable("simulated backend only answers semantics prompts");
        nlohmann::ordered_json doc;
        for (const auto& [pair, truth] : truth_.pairs) {
            double u = uniform01(rng_);
            Relation label;
            if (u < truth.p_support) label = Relation::support;
            else if (u < truth.p_support + truth.p_contradict) label = Relation::contradict;
            else label = Relation::independent;
            doc["(" + std::to_string(pair.first) + "," + std::to_string(pair.second) + ")"] = to_string(label);
        }
        return doc.dump();
    }

    std::string id() const override { return "simulated-semantics"; }

private:
    EdgeGroundTruth truth_;
    std::mt19937_64 rng_;
};

inline std::shared_ptr<LlmBackend> simulate_sampler(const EdgeGroundTruth& truth, std::uint64_t seed) {
    return std::make_shared<SimulatedSemanticsBackend>(truth, seed);
}

// Metric computation from an explicit edge list, written independently of
// the production metric code: scan all ordered pairs, collect edges, count
// degrees per node straight from the list.
inline GraphMetrics brute_force_metrics(const std::vector<std::vector<int>>& adjacency) {
    size_t k = adjacency.size();
    for (size_t i = 0; i < k; ++i) {
        if (adjacency[i].size() != k) throw InvalidGraph("matrix must be square");
        for (size_t j = 0; j < k; ++j) {
            if (adjacency[i][j] < -1 || adjacency[i][j] > 1) throw InvalidGraph("entries must be ternary");
            if (adjacency[i][j] != -adjacency[j][i]) throw InvalidGraph("matrix must be antisymmetric");
        }
        if (adjacency[i][i] != 0) throw InvalidGraph("diagonal must be zero");
    }

    struct Edge {
        size_t from, to;
        int sign;
    };
    std::vector<Edge> edges;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = 0; j < k; ++j)
            if (i < j && adjacency[i][j] != 0) edges.push_back({i, j, adjacency[i][j]});

    GraphMetrics m;
    m.node_count = k;
    m.edge_count = edges.size();
    for (const auto& e : edges) (e.sign > 0 ? m.support_edge_count : m.contradict_edge_count)++;

    size_t branching = 0, converging = 0, busy = 0;
    for (size_t node = 0; node < k; ++node) {
        size_t out = 0, in = 0;
        for (const auto& e : edges) {
            if (e.from == node) ++out;
            if (e.to == node) ++in;
        }
        if (out > 1) ++branching;
        if (in > 1) ++converging;
        if (out + in > 2) ++busy;
    }
    if (k >= 2)
        m.exploration_density =
            static_cast<double>(edges.size()) / (static_cast<double>(k) * static_cast<double>(k - 1));
    if (k > 0) {
        m.branching_ratio = static_cast<double>(branching) / static_cast<double>(k);
        m.convergence_ratio = static_cast<double>(converging) / static_cast<double>(k);
        m.linearity = 1.0 - static_cast<double>(busy) / static_cast<double>(k);
    }
    return m;
}

namespace oracle_detail {

inline double raw_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

} // namespace oracle_detail

// Random upper-triangle draw mirrored antisymmetrically.
inline std::vector<std::vector<int>> random_antisymmetric(size_t k, std::mt19937_64& rng) {
    std::vector<std::vector<int>> a(k, std::vector<int>(k, 0));
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = i + 1; j < k; ++j) {
            int value = static_cast<int>(uniform_below(rng, 3)) - 1;
            a[i][j] = value;
            a[j][i] = -value;
        }
    }
    return a;
}

// All 3^(k(k-1)/2) antisymmetric ternary matrices; k must stay small.
inline std::vector<std::vector<std::vector<int>>> enumerate_antisymmetric(size_t k) {
    size_t pairs = k * (k - 1) / 2;
    size_t total = 1;
    for (size_t p = 0; p < pairs; ++p) total *= 3;
    std::vector<std::vector<std::vector<int>>> all;
    all.reserve(total);
    for (size_t code = 0; code < total; ++code) {
        std::vector<std::vector<int>> a(k, std::vector<int>(k, 0));
        size_t rest = code;
        for (size_t i = 0; i < k; ++i) {
            for (size_t j = i + 1; j < k; ++j) {
                int value = static_cast<int>(rest % 3) - 1;
                rest /= 3;
                a[i][j] = value;
                a[j][i] = -value;
            }
        }
        all.push_back(std::move(a));
    }
    return all;
}

// Synthetic unit list plus a set of random contiguous partitions of it, for
// cross-checking candidate selection.
struct SyntheticCandidates {
    std::vector<ReasoningUnit> units;
    std::vector<std::vector<ReasoningStep>> candidates;
};

inline SyntheticCandidates random_candidate_set(std::mt19937_64& rng, size_t unit_count,
                                                size_t candidate_count) {
    SyntheticCandidates out;
    const char* words[] = {"angle",  "triangle", "equals", "therefore", "check", "radius",
                           "sum",    "compute",  "verify", "substitute", "factor", "bound"};
    for (size_t i = 0; i < unit_count; ++i) {
        ReasoningUnit u;
        u.index = i;
        size_t len = 3 + uniform_below(rng, 5);
        for (size_t w = 0; w < len; ++w) {
            if (!u.text.empty()) u.text += " ";
            u.text += words[uniform_below(rng, 12)];
        }
        u.token_count = count_whitespace_tokens(u.text);
        out.units.push_back(std::move(u));
    }
    for (size_t c = 0; c < candidate_count; ++c) {
        size_t k = 1 + uniform_below(rng, unit_count);
        std::vector<size_t> cuts;
        while (cuts.size() + 1 < k) {
            size_t cut = 1 + uniform_below(rng, unit_count - 1);
            if (std::find(cuts.begin(), cuts.end(), cut) == cuts.end()) cuts.push_back(cut);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.push_back(unit_count);
        std::vector<ReasoningStep> steps;
        size_t begin = 0;
        for (size_t s = 0; s < cuts.size(); ++s) {
            ReasoningStep step;
            step.index = s;
            step.title = "part " + std::to_string(s);
            for (size_t u = begin; u < cuts[s]; ++u) {
                step.unit_indices.push_back(u);
                if (!step.content.empty()) step.content += "\n\n";
                step.content += out.units[u].text;
            }
            step.token_count = count_whitespace_tokens(step.content);
            steps.push_back(std::move(step));
            begin = cuts[s];
        }
        out.candidates.push_back(std::move(steps));
    }
    return out;
}

// Scores every candidate straight from the three criteria definitions and
// returns the argmax index with the same tie-break rule (fewer steps, then
// earlier candidate).
inline size_t brute_force_select(const std::vector<std::vector<ReasoningStep>>& candidates,
                                 const std::vector<ReasoningUnit>& units, const ScoringWeights& weights,
                                 EmbeddingProvider& embedder) {
    if (candidates.empty()) throw Error("brute_force_select: no candidates");

    std::vector<std::string> unit_texts;
    size_t total_tokens = 0;
    for (const auto& u : units) {
        unit_texts.push_back(u.text);
        total_tokens += u.token_count;
    }
    auto unit_embeddings = embedder.embed_texts(unit_texts);

    double root = std::ceil(std::sqrt(static_cast<double>(units.size())));
    double k_target = root < 3.0 ? 3.0 : (root > 30.0 ? 30.0 : root);
    double mu_ref = static_cast<double>(total_tokens) / k_target;

    size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    size_t best_k = 0;
    for (size_t c = 0; c < candidates.size(); ++c) {
        const auto& steps = candidates[c];
        size_t k = steps.size();

        double coherence = 0.0;
        for (const auto& step : steps) {
            const auto& members = step.unit_indices;
            if (members.size() < 2) {
                coherence += 1.0;
                continue;
            }
            double sum = 0.0;
            size_t pairs = 0;
            for (size_t a = 0; a < members.size(); ++a) {
                for (size_t b = 0; b < members.size(); ++b) {
                    if (a < b) {
                        sum += oracle_detail::raw_cosine(unit_embeddings[members[a]].values,
                                                         unit_embeddings[members[b]].values);
                        ++pairs;
                    }
                }
            }
            coherence += sum / static_cast<double>(pairs);
        }
        coherence /= static_cast<double>(k);

        double separation = 0.0;
        if (k >= 2) {
            std::vector<Embedding> step_embeddings;
            for (const auto& step : steps) step_embeddings.push_back(embedder.embed_text(step.content));
            for (size_t j = 0; j + 1 < k; ++j)
                separation += 1.0 - oracle_detail::raw_cosine(step_embeddings[j].values,
                                                              step_embeddings[j + 1].values);
            separation /= static_cast<double>(k - 1);
        }

        double tokens = 0.0;
        for (const auto& step : steps) tokens += static_cast<double>(step.token_count);
        double length_term = 1.0 - std::abs(tokens / static_cast<double>(k) / mu_ref - 1.0);

        double score = weights.w_ic * coherence + weights.w_sep * separation + weights.w_len * length_term;
        if (score > best_score || (score == best_score && k < best_k)) {
            best = c;
            best_score = score;
            best_k = k;
        }
    }
    return best;
}

} // namespace reasongraph
