#pragma once
// Ensemble clustering of reasoning units into steps: candidate sampling via
// the gateway, alignment of responses back onto units, the three quality
// criteria, and argmax selection of the final node set.

#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/embedding.hpp"
#include "reasongraph/errors.hpp"
#include "reasongraph/gateway.hpp"
#include "reasongraph/graph.hpp"
#include "reasongraph/prompts.hpp"
#include "reasongraph/trace.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

struct ScoringWeights {
    double w_ic = 1.0 / 3.0;
    double w_sep = 1.0 / 3.0;
    double w_len = 1.0 / 3.0;

    void validate() const {
        if (w_ic < 0.0 || w_sep < 0.0 || w_len < 0.0)
            throw ConfigError("scoring weights must be nonnegative");
        if (std::abs(w_ic + w_sep + w_len - 1.0) > 1e-12)
            throw ConfigError("scoring weights must sum to 1");
    }
};

struct CandidateScores {
    double phi_ic = 0.0;
    double phi_sep = 0.0;
    double phi_len = 0.0;
    double composite = 0.0;
};

struct SampleSource {
    double temperature = 0.0;
    std::uint64_t seed = 0;
    std::string backend_id;
};

struct CandidateClustering {
    std::vector<ReasoningStep> steps;
    SampleSource source_sample;
    CandidateScores scores;

    size_t step_count() const { return steps.size(); }
};

// Maps each response step back onto a contiguous run of units by greedy
// longest-prefix matching on whitespace-collapsed text, then canonicalizes
// step content from the matched units (the units are ground truth; the LLM
// text may be paraphrased). Fails if the runs do not partition the units.
inline std::vector<ReasoningStep> align_steps_to_units(const ClusteringResponse& response,
                                                       const std::vector<ReasoningUnit>& units,
                                                       std::string_view delimiter = kDefaultDelimiter) {
    if (units.empty()) throw Error("align_steps_to_units: units must be nonempty");
    std::vector<std::string> normalized;
    normalized.reserve(units.size());
    for (const auto& u : units) normalized.push_back(collapse_whitespace(u.text));

    std::vector<ReasoningStep> steps;
    steps.reserve(response.steps.size());
    size_t cursor = 0;
    for (size_t idx = 0; idx < response.steps.size(); ++idx) {
        if (cursor >= units.size())
            throw AlignmentFailure("step s" + std::to_string(idx) + " has no units left to consume");
        const std::string target = collapse_whitespace(response.steps[idx].content);

        // extend the run while the joined units remain a word-aligned prefix
        size_t taken = 0;
        std::string acc;
        for (size_t next = cursor; next < units.size(); ++next) {
            std::string extended = acc.empty() ? normalized[next] : acc + " " + normalized[next];
            if (extended.size() > target.size()) break;
            if (target.compare(0, extended.size(), extended) != 0) break;
            if (extended.size() < target.size() && target[extended.size()] != ' ') break;
            acc = std::move(extended);
            taken = next - cursor + 1;
        }
        if (taken == 0)
            throw AlignmentFailure("step s" + std::to_string(idx) +
                                   " content does not start with the next reasoning unit");

        ReasoningStep step;
        step.index = idx;
        step.title = trim(response.steps[idx].title);
        for (size_t u = cursor; u < cursor + taken; ++u) {
            step.unit_indices.push_back(u);
            if (!step.content.empty()) step.content += std::string(delimiter);
            step.content += units[u].text;
        }
        step.token_count = count_whitespace_tokens(step.content);
        steps.push_back(std::move(step));
        cursor += taken;
    }
    if (cursor != units.size())
        throw AlignmentFailure("steps cover " + std::to_string(cursor) + " of " +
                               std::to_string(units.size()) + " units");
    return steps;
}

// Criteria 1: mean within-step pairwise cosine. Singleton steps contribute
// 1.0 (the inner term is 0/0 there and a lone unit is trivially coherent).
inline double phi_intra_coherence(const std::vector<ReasoningStep>& steps,
                                  std::span<const Embedding> unit_embeddings) {
    if (steps.empty()) throw Error("phi_intra_coherence: empty clustering");
    double total = 0.0;
    for (const auto& step : steps) {
        size_t n = step.unit_indices.size();
        if (n <= 1) {
            total += 1.0;
            continue;
        }
        double pair_sum = 0.0;
        for (size_t a = 0; a < n; ++a)
            for (size_t b = a + 1; b < n; ++b)
                pair_sum += cosine(unit_embeddings[step.unit_indices[a]], unit_embeddings[step.unit_indices[b]]);
        total += 2.0 * pair_sum / (static_cast<double>(n) * static_cast<double>(n - 1));
    }
    return total / static_cast<double>(steps.size());
}

// Criteria 2: mean adjacent-step dissimilarity; 0 for a single step, which
// correctly penalizes the all-in-one clustering.
inline double phi_separation(std::span<const Embedding> step_embeddings) {
    size_t k = step_embeddings.size();
    if (k == 0) throw Error("phi_separation: empty clustering");
    if (k == 1) return 0.0;
    double total = 0.0;
    for (size_t j = 0; j + 1 < k; ++j) total += 1.0 - cosine(step_embeddings[j], step_embeddings[j + 1]);
    return total / static_cast<double>(k - 1);
}

// Reference mean step length: total tokens over a square-root step-count
// target clamped to [3, 30].
inline double compute_mu_ref(size_t total_tokens, size_t unit_count) {
    if (total_tokens == 0 || unit_count == 0) throw Error("compute_mu_ref requires N >= 1 and M >= 1");
    double root = std::ceil(std::sqrt(static_cast<double>(unit_count)));
    double k_target = std::min(std::max(3.0, root), 30.0);
    return static_cast<double>(total_tokens) / k_target;
}

// Criteria 3: 1 - |mean_step_tokens / mu_ref - 1|, left unclamped so extreme
// segmentations keep distinct (negative) scores.
inline double phi_length_regularity(const std::vector<ReasoningStep>& steps, double mu_ref) {
    if (steps.empty()) throw Error("phi_length_regularity: empty clustering");
    if (!(mu_ref > 0.0)) throw Error("phi_length_regularity: mu_ref must be positive");
    double token_sum = 0.0;
    for (const auto& step : steps) token_sum += static_cast<double>(step.token_count);
    double mean = token_sum / static_cast<double>(steps.size());
    return 1.0 - std::abs(mean / mu_ref - 1.0);
}

inline double composite_score(const CandidateScores& scores, const ScoringWeights& weights) {
    return weights.w_ic * scores.phi_ic + weights.w_sep * scores.phi_sep + weights.w_len * scores.phi_len;
}

inline CandidateScores score_candidate(const std::vector<ReasoningStep>& steps,
                                       std::span<const Embedding> unit_embeddings,
                                       EmbeddingProvider& embedder, double mu_ref,
                                       const ScoringWeights& weights) {
    std::vector<std::string> contents;
    contents.reserve(steps.size());
    for (const auto& s : steps) contents.push_back(s.content);
    auto step_embeddings = embedder.embed_texts(contents);

    CandidateScores scores;
    scores.phi_ic = phi_intra_coherence(steps, unit_embeddings);
    scores.phi_sep = phi_separation(step_embeddings);
    scores.phi_len = phi_length_regularity(steps, mu_ref);
    scores.composite = composite_score(scores, weights);
    return scores;
}

struct EnsembleConfig {
    unsigned sample_count = 5; // B
    ScoringWeights weights;
    unsigned resample_cap = 3; // extra attempts per slot after the first
    double temperature_lo = 0.3;
    double temperature_hi = 0.7;

    void validate() const {
        if (sample_count == 0) throw ConfigError("cluster.B must be >= 1");
        if (!(temperature_lo <= temperature_hi)) throw ConfigError("temperature range is inverted");
        weights.validate();
    }
};

// Audit record for one gateway sample (accepted or not).
struct EnsembleAttempt {
    unsigned slot = 0;
    unsigned attempt = 0; // 0 = first try for the slot
    double temperature = 0.0;
    std::uint64_t seed = 0;
    bool accepted = false;
    std::string reject_reason;
    std::optional<CandidateClustering> candidate;
};

struct EnsembleResult {
    CandidateClustering selected;
    size_t selected_attempt = 0; // index into attempts
    std::vector<EnsembleAttempt> attempts;
    unsigned filled_slots = 0;
    double mu_ref = 0.0;
};

// Draws B candidate clusterings, scores each with the composite criteria and
// returns the argmax. Ties break toward fewer steps, then the earlier sample.
inline EnsembleResult run_ensemble(const std::vector<ReasoningUnit>& units, const EnsembleConfig& config,
                                   LlmBackend& backend, EmbeddingProvider& embedder, std::mt19937_64& rng,
                                   GatewayTelemetry* telemetry = nullptr) {
    config.validate();
    if (units.empty()) throw Error("run_ensemble: units must be nonempty");

    std::vector<std::string> unit_texts;
    size_t total_tokens = 0;
    for (const auto& u : units) {
        unit_texts.push_back(u.text);
        total_tokens += u.token_count;
    }
    auto unit_embeddings = embedder.embed_texts(unit_texts);
    double mu_ref = compute_mu_ref(total_tokens, units.size());
    std::string prompt = render_clustering_prompt(units);

    EnsembleResult result;
    result.mu_ref = mu_ref;
    std::optional<size_t> best_index; // into result.attempts

    for (unsigned slot = 0; slot < config.sample_count; ++slot) {
        for (unsigned attempt = 0; attempt <= config.resample_cap; ++attempt) {
            EnsembleAttempt record;
            record.slot = slot;
            record.attempt = attempt;
            record.temperature = uniform_in(rng, config.temperature_lo, config.temperature_hi);
            record.seed = rng();

            PromptRequest request;
            request.template_id = TemplateId::clustering;
            request.rendered_prompt = prompt;
            request.temperature = record.temperature;
            request.seed = record.seed;
            request.backend_id = backend.id();
            if (telemetry) telemetry->count_request(TemplateId::clustering);

            std::string raw = backend.complete(request);
            try {
                ClusteringResponse parsed = parse_clustering(raw, units.size());
                CandidateClustering candidate;
                candidate.steps = align_steps_to_units(parsed, units);
                candidate.source_sample = {record.temperature, record.seed, backend.id()};
                candidate.scores =
                    score_candidate(candidate.steps, unit_embeddings, embedder, mu_ref, config.weights);
                record.accepted = true;
                record.candidate = std::move(candidate);
            } catch (const MalformedOutput& e) {
                record.reject_reason = e.what();
            } catch (const AlignmentFailure& e) {
                record.reject_reason = e.what();
            }

            bool accepted = record.accepted;
            result.attempts.push_back(std::move(record));
            if (accepted) {
                size_t index = result.attempts.size() - 1;
                const auto& cand = *result.attempts[index].candidate;
                if (!best_index) {
                    best_index = index;
                } else {
                    const auto& best = *result.attempts[*best_index].candidate;
                    if (cand.scores.composite > best.scores.composite ||
                        (cand.scores.composite == best.scores.composite &&
                         cand.step_count() < best.step_count())) {
                        best_index = index;
                    }
                }
                result.filled_slots++;
                break;
            }
            if (telemetry) telemetry->count_rejection(TemplateId::clustering);
        }
    }

    if (!best_index) throw NoValidCandidate("all " + std::to_string(config.sample_count) +
                                            " ensemble slots produced rejected samples");
    result.selected = *result.attempts[*best_index].candidate;
    result.selected_attempt = *best_index;
    return result;
}

inline nlohmann::ordered_json ensemble_audit_to_json(const EnsembleResult& result,
                                                     const EnsembleConfig& config,
                                                     const std::string& trace_id,
                                                     const std::string& embedder_id) {
    nlohmann::ordered_json doc;
    doc["trace_id"] = trace_id;
    doc["embedder_id"] = embedder_id;
    doc["B"] = config.sample_count;
    doc["filled_slots"] = result.filled_slots;
    doc["mu_ref"] = result.mu_ref;
    doc["weights"] = {{"w_ic", config.weights.w_ic},
                      {"w_sep", config.weights.w_sep},
                      {"w_len", config.weights.w_len}};
    doc["selected_attempt"] = result.selected_attempt;
    auto attempts = nlohmann::ordered_json::array();
    for (const auto& a : result.attempts) {
        nlohmann::ordered_json rec;
        rec["slot"] = a.slot;
        rec["attempt"] = a.attempt;
        rec["temperature"] = a.temperature;
        rec["seed"] = a.seed;
        rec["accepted"] = a.accepted;
        if (a.accepted) {
            rec["K"] = a.candidate->step_count();
            rec["phi_ic"] = a.candidate->scores.phi_ic;
            rec["phi_sep"] = a.candidate->scores.phi_sep;
            rec["phi_len"] = a.candidate->scores.phi_len;
            rec["composite"] = a.candidate->scores.composite;
        } else {
            rec["reject_reason"] = a.reject_reason;
        }
        attempts.push_back(std::move(rec));
    }
    doc["attempts"] = std::move(attempts);
    return doc;
}

} // namespace reasongraph
