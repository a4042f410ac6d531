#pragma once
// End-to-end wiring: component construction from a RunConfig, the per-trace
// segment -> cluster -> estimate pipeline, a bounded worker pool over traces,
// and file emission for every stage artifact.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/clustering.hpp"
#include "reasongraph/config.hpp"
#include "reasongraph/embedding.hpp"
#include "reasongraph/estimator.hpp"
#include "reasongraph/gateway.hpp"
#include "reasongraph/http_backends.hpp"
#include "reasongraph/metrics.hpp"
#include "reasongraph/mock_backend.hpp"
#include "reasongraph/report.hpp"
#include "reasongraph/trace.hpp"

namespace reasongraph {

struct PipelineComponents {
    std::shared_ptr<LlmBackend> backend;
    std::shared_ptr<EmbeddingProvider> embedder;
    std::shared_ptr<GatewayTelemetry> telemetry;
};

inline PipelineComponents build_components(const RunConfig& cfg) {
    cfg.validate();
    PipelineComponents parts;
    parts.telemetry = std::make_shared<GatewayTelemetry>();

    if (cfg.embedding.provider == "offline") {
        parts.embedder = std::make_shared<HashedBowEmbedder>(cfg.embedding.dim);
    } else {
        parts.embedder = std::make_shared<HttpEmbeddingProvider>(cfg.embedding.endpoint, cfg.embedding.model,
                                                                 cfg.embedding.api_key_env, cfg.embedding.dim);
    }
    if (!cfg.embedding.cache_dir.empty())
        parts.embedder = std::make_shared<CachingProvider>(parts.embedder, cfg.embedding.cache_dir);

    if (cfg.llm.backend == "mock") {
        parts.backend = std::make_shared<ScriptedBackend>(deterministic_mock_rule(), "mock");
    } else if (cfg.llm.backend == "fixture") {
        parts.backend = std::make_shared<FixtureBackend>(cfg.llm.fixture_dir);
    } else {
        std::shared_ptr<TokenBucket> bucket;
        if (cfg.llm.rate_limit_per_second > 0.0)
            bucket = std::make_shared<TokenBucket>(cfg.llm.rate_limit_per_second, cfg.llm.rate_limit_per_second);
        auto live = std::make_shared<HttpChatBackend>(cfg.llm.endpoint, cfg.llm.model, cfg.llm.api_key_env,
                                                      cfg.llm.max_concurrency, bucket);
        parts.backend = std::make_shared<RetryingBackend>(live, parts.telemetry);
    }
    return parts;
}

struct TraceResult {
    ReasoningTrace trace;
    ReasoningGraph graph;
    nlohmann::ordered_json audit;
    MetricRow row;
};

// Per-trace randomness derives from (run seed, trace_id), so results do not
// depend on scheduling order.
inline TraceResult run_trace_pipeline(const ReasoningTrace& trace, const RunConfig& cfg,
                                      const PipelineComponents& parts) {
    auto units = segment_units(trace);
    auto rng = seeded_rng(cfg.seed, trace.trace_id);

    EnsembleConfig ensemble_cfg;
    ensemble_cfg.sample_count = cfg.cluster.sample_count;
    ensemble_cfg.weights = cfg.cluster.weights;
    ensemble_cfg.resample_cap = cfg.cluster.resample_cap;
    ensemble_cfg.temperature_lo = cfg.llm.temperature_lo;
    ensemble_cfg.temperature_hi = cfg.llm.temperature_hi;

    auto ensemble = run_ensemble(units, ensemble_cfg, *parts.backend, *parts.embedder, rng,
                                 parts.telemetry.get());

    ReasoningGraph graph = estimate_edges(ensemble.selected.steps, *parts.backend, cfg.estimator, rng,
                                          parts.telemetry.get(), cfg.llm.temperature_lo, cfg.llm.temperature_hi);
    graph.provenance.trace_id = trace.trace_id;
    graph.provenance.model_id = trace.model_id;
    graph.provenance.prompt_regime = to_string(trace.prompt_regime);
    graph.provenance.shot_count = trace.shot_count;
    graph.provenance.correct = trace.correct;
    graph.provenance.task_id = trace.task_id;
    graph.provenance.trace_token_count = trace.token_count;
    graph.provenance.clustering_composite = ensemble.selected.scores.composite;
    graph.provenance.embedder_id = parts.embedder->id();
    validate_graph(graph);

    TraceResult result;
    result.trace = trace;
    result.row = metric_row(graph);
    result.audit = ensemble_audit_to_json(ensemble, ensemble_cfg, trace.trace_id, parts.embedder->id());
    result.graph = std::move(graph);
    return result;
}

struct TraceFailure {
    std::string trace_id;
    std::string error;
};

struct CorpusRunResult {
    std::vector<TraceResult> results;   // input order, failures removed
    std::vector<TraceFailure> failures; // input order
};

inline CorpusRunResult run_corpus(const std::vector<ReasoningTrace>& traces, const RunConfig& cfg,
                                  const PipelineComponents& parts) {
    std::vector<std::optional<TraceResult>> slots(traces.size());
    std::vector<std::optional<TraceFailure>> errors(traces.size());

    auto work_one = [&](size_t index) {
        try {
            slots[index] = run_trace_pipeline(traces[index], cfg, parts);
        } catch (const std::exception& e) {
            errors[index] = TraceFailure{traces[index].trace_id, e.what()};
        }
    };

    unsigned workers = std::min<unsigned>(cfg.parallelism, static_cast<unsigned>(traces.size()));
    if (workers <= 1) {
        for (size_t i = 0; i < traces.size(); ++i) work_one(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    size_t index = next.fetch_add(1);
                    if (index >= traces.size()) return;
                    work_one(index);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    CorpusRunResult out;
    for (size_t i = 0; i < traces.size(); ++i) {
        if (slots[i]) out.results.push_back(std::move(*slots[i]));
        if (errors[i]) out.failures.push_back(std::move(*errors[i]));
    }
    return out;
}

inline std::string sanitize_filename(std::string_view raw) {
    std::string out(raw);
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') c = '-';
    return out.empty() ? std::string("unnamed") : out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

// graphs/<trace_id>.graph.json + .dot + .audit.json, quarantined failures in
// errors.jsonl, and metrics.csv over the successful traces.
inline void write_corpus_artifacts(const CorpusRunResult& run, const std::filesystem::path& out_dir) {
    for (const auto& r : run.results) {
        std::string stem = sanitize_filename(r.trace.trace_id);
        write_text_file(out_dir / "graphs" / (stem + ".graph.json"), graph_to_json(r.graph).dump(2) + "\n");
        write_text_file(out_dir / "graphs" / (stem + ".dot"), graph_to_dot(r.graph));
        write_text_file(out_dir / "graphs" / (stem + ".audit.json"), r.audit.dump(2) + "\n");
    }
    if (!run.failures.empty()) {
        std::string lines;
        for (const auto& f : run.failures) {
            nlohmann::ordered_json rec;
            rec["trace_id"] = f.trace_id;
            rec["error"] = f.error;
            lines += rec.dump() + "\n";
        }
        write_text_file(out_dir / "errors.jsonl", lines);
    }
    std::string csv = metrics_csv_header() + "\n";
    for (const auto& r : run.results) csv += metric_row_to_csv(r.row) + "\n";
    write_text_file(out_dir / "metrics.csv", csv);
}

inline void write_report_bundle(const std::vector<MetricRow>& rows, const std::filesystem::path& report_dir,
                                ReportFormat format = ReportFormat::markdown_table) {
    auto aggs = aggregate(rows);

    std::optional<CorrelationReport> per_trace;
    try {
        per_trace = correlate_metrics_with_accuracy(rows);
    } catch (const DegenerateInput&) {
    }
    std::optional<CorrelationReport> per_condition;
    try {
        per_condition = correlate_conditions_with_accuracy(aggs);
    } catch (const DegenerateInput&) {
    }

    std::vector<StepCountDistribution> distributions;
    for (const auto& agg : aggs) distributions.push_back(step_count_distribution(rows, agg.key));

    render_report(aggs, per_trace, per_condition, distributions, format, report_dir);
}

inline std::uint64_t hash_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir)) return 0;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a64("dir");
    for (const auto& f : files) {
        h = fnv1a64(std::filesystem::relative(f, dir).generic_string(), h);
        std::ifstream in(f, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        h = fnv1a64(content, h);
    }
    return h;
}

// Provenance manifest written next to run outputs. Contains no clock values:
// reruns of a deterministic configuration must be byte-identical.
inline void write_run_manifest(const RunConfig& cfg, const PipelineComponents& parts, size_t trace_count,
                               const std::filesystem::path& out_dir) {
    nlohmann::ordered_json doc;
    doc["config_hash"] = hex64(fnv1a64(config_to_json(cfg).dump()));
    doc["seed"] = cfg.seed;
    doc["backend_id"] = parts.backend->id();
    doc["embedder_id"] = parts.embedder->id();
    if (cfg.llm.backend == "fixture") doc["fixture_hash"] = hex64(hash_directory(cfg.llm.fixture_dir));
    doc["trace_count"] = trace_count;
    doc["telemetry"] = {{"clustering_requests", parts.telemetry->requests_clustering.load()},
                        {"clustering_rejected", parts.telemetry->rejected_clustering.load()},
                        {"clustering_accepted_rate", parts.telemetry->accepted_rate(TemplateId::clustering)},
                        {"semantics_requests", parts.telemetry->requests_semantics.load()},
                        {"semantics_rejected", parts.telemetry->rejected_semantics.load()},
                        {"semantics_accepted_rate", parts.telemetry->accepted_rate(TemplateId::semantics)},
                        {"transport_retries", parts.telemetry->retries.load()}};
    write_text_file(out_dir / "manifest.json", doc.dump(2) + "\n");
}

} // namespace reasongraph
