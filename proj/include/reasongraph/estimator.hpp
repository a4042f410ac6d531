#pragma once
// Adaptive edge estimation: repeatedly sample full pairwise-relation
// matrices, pool label counts per ordered pair, stop once every pooled
// standard error falls below epsilon (with an r_min floor and an R_max cap),
// then threshold signed confidences into the consensus adjacency.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "reasongraph/errors.hpp"
#include "reasongraph/gateway.hpp"
#include "reasongraph/graph.hpp"
#include "reasongraph/prompts.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

// Pooled label tallies for all ordered pairs i < j of a K-step trace.
class EdgeEstimateTable {
public:
    explicit EdgeEstimateTable(size_t step_count) : step_count_(step_count) {
        for (size_t i = 0; i < step_count; ++i) {
            for (size_t j = i + 1; j < step_count; ++j) {
                EdgeEstimate e;
                e.i = i;
                e.j = j;
                estimates_.push_back(e);
            }
        }
    }

    size_t step_count() const { return step_count_; }
    std::uint64_t samples_seen() const { return samples_; }
    const std::vector<EdgeEstimate>& estimates() const { return estimates_; }

    void apply_sample(const SemanticsResponse& sample) {
        size_t required = estimates_.size();
        if (sample.labels.size() != required)
            throw KMismatch("sample covers " + std::to_string(sample.labels.size()) + " pairs, table has " +
                            std::to_string(required));
        for (const auto& [pair, label] : sample.labels) {
            if (pair.second >= step_count_)
                throw KMismatch("sample pair (" + std::to_string(pair.first) + "," +
                                std::to_string(pair.second) + ") exceeds table K=" + std::to_string(step_count_));
        }
        ++samples_;
        size_t slot = 0;
        for (size_t i = 0; i < step_count_; ++i) {
            for (size_t j = i + 1; j < step_count_; ++j, ++slot) {
                auto& est = estimates_[slot];
                Relation label = sample.labels.at({i, j});
                est.counts[static_cast<int>(label) + 1]++;
                est.samples_seen = samples_;
                recompute(est);
            }
        }
    }

    double max_standard_error() const {
        double max_se = 0.0;
        for (const auto& e : estimates_) max_se = std::max(max_se, e.standard_error);
        return max_se;
    }

private:
    static void recompute(EdgeEstimate& est) {
        double r = static_cast<double>(est.samples_seen);
        for (int c = 0; c < 3; ++c) est.p_hat[c] = static_cast<double>(est.counts[c]) / r;
        est.signed_confidence = est.p_hat[2] - est.p_hat[0];
        est.standard_error =
            std::sqrt((est.p_hat[2] * (1.0 - est.p_hat[2]) + est.p_hat[0] * (1.0 - est.p_hat[0])) / r);
    }

    size_t step_count_;
    std::vector<EdgeEstimate> estimates_;
    std::uint64_t samples_ = 0;
};

inline bool should_stop(const EdgeEstimateTable& table, const EstimatorConfig& config) {
    std::uint64_t r = table.samples_seen();
    if (r == 0) return false;
    if (r >= config.r_max) return true;
    return r >= config.r_min && table.max_standard_error() <= config.epsilon;
}

// Dual-threshold consensus with inclusive boundaries; the result is
// antisymmetric with a zero diagonal, and W preserves every signed
// confidence whether or not it crossed a threshold.
inline void consensus(const EdgeEstimateTable& table, const EstimatorConfig& config,
                      std::vector<std::vector<int>>& adjacency, std::vector<std::vector<double>>& weights) {
    size_t k = table.step_count();
    adjacency.assign(k, std::vector<int>(k, 0));
    weights.assign(k, std::vector<double>(k, 0.0));
    for (const auto& est : table.estimates()) {
        double w = est.signed_confidence;
        int a = 0;
        if (w >= config.tau_pos) a = 1;
        else if (w <= -config.tau_neg) a = -1;
        adjacency[est.i][est.j] = a;
        adjacency[est.j][est.i] = -a;
        weights[est.i][est.j] = w;
        weights[est.j][est.i] = (w == 0.0) ? 0.0 : -w;
    }
}

// Runs the sampling loop against the gateway. Malformed samples are rejected
// and do not count toward R; a run where every attempt is rejected fails with
// SamplingExhausted. Single-step inputs yield a trivial edgeless graph.
inline ReasoningGraph estimate_edges(const std::vector<ReasoningStep>& steps, LlmBackend& backend,
                                     const EstimatorConfig& config, std::mt19937_64& rng,
                                     GatewayTelemetry* telemetry = nullptr, double temperature_lo = 0.3,
                                     double temperature_hi = 0.7) {
    config.validate();
    ReasoningGraph graph;
    graph.steps = steps;
    graph.provenance.backend_id = backend.id();
    graph.provenance.estimator = config;

    size_t k = steps.size();
    if (k < 2) {
        graph.adjacency.assign(k, std::vector<int>(k, 0));
        graph.weights.assign(k, std::vector<double>(k, 0.0));
        return graph;
    }

    std::string prompt = render_semantics_prompt(steps);
    EdgeEstimateTable table(k);
    std::uint64_t rejected = 0;
    // Reject budget: enough headroom for flaky output without losing the
    // termination guarantee.
    const std::uint64_t max_rejects = 3ull * config.r_max;

    while (!should_stop(table, config)) {
        PromptRequest request;
        request.template_id = TemplateId::semantics;
        request.rendered_prompt = prompt;
        request.temperature = uniform_in(rng, temperature_lo, temperature_hi);
        request.seed = rng();
        request.backend_id = backend.id();
        if (telemetry) telemetry->count_request(TemplateId::semantics);

        std::string raw = backend.complete(request);
        try {
            SemanticsResponse sample = parse_semantics(raw, k);
            table.apply_sample(sample);
        } catch (const MalformedOutput&) {
            ++rejected;
            if (telemetry) telemetry->count_rejection(TemplateId::semantics);
            if (table.samples_seen() == 0 && rejected >= config.r_max)
                throw SamplingExhausted("all " + std::to_string(rejected) +
                                        " adjacency samples were rejected as malformed");
            if (rejected >= max_rejects) break;
        }
    }

    consensus(table, config, graph.adjacency, graph.weights);
    graph.estimates = table.estimates();
    graph.provenance.total_samples = table.samples_seen();
    graph.provenance.rejected_samples = rejected;
    return graph;
}

} // namespace reasongraph
