// Command-line front end: per-stage subcommands (segment, build-graph,
// metrics, report), the self-contained `demo` run over the shipped fixture
// corpus, and a hidden `validate` battery of first-principles checks.
//
// Exit codes: 0 success, 1 pipeline failure, 2 usage/format error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reasongraph/oracle.hpp"
#include "reasongraph/reasongraph.hpp"

namespace fs = std::filesystem;
using namespace reasongraph;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPipelineFailure = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> inputs;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string backend;
    std::optional<unsigned> parallel;
};

RunConfig resolve_config(const CommonOptions& opts) {
    RunConfig cfg;
    if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
    if (!opts.inputs.empty()) cfg.inputs = opts.inputs;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.seed) cfg.seed = *opts.seed;
    if (!opts.backend.empty()) cfg.llm.backend = opts.backend;
    if (opts.parallel) cfg.parallelism = *opts.parallel;
    cfg.validate();
    if (cfg.inputs.empty()) throw ConfigError("no input trace files given (positional args or config 'inputs')");
    return cfg;
}

std::vector<ReasoningTrace> load_all_corpora(const RunConfig& cfg) {
    std::vector<ReasoningTrace> traces;
    std::unordered_set<std::string> ids;
    for (const auto& path : cfg.inputs) {
        auto piece = load_corpus(path);
        for (auto& t : piece) {
            if (!ids.insert(t.trace_id).second)
                throw DuplicateTraceId(t.trace_id, 0);
            traces.push_back(std::move(t));
        }
    }
    return traces;
}

int cmd_segment(const CommonOptions& opts) {
    RunConfig cfg = resolve_config(opts);
    auto traces = load_all_corpora(cfg);

    std::string warnings;
    size_t written = 0;
    for (const auto& trace : traces) {
        try {
            auto units = segment_units(trace);
            write_text_file(fs::path(cfg.out_dir) / "units" / (sanitize_filename(trace.trace_id) + ".units.json"),
                            units_to_json(trace.trace_id, units).dump(2) + "\n");
            ++written;
        } catch (const EmptyTrace& e) {
            nlohmann::ordered_json rec;
            rec["trace_id"] = trace.trace_id;
            rec["warning"] = e.what();
            warnings += rec.dump() + "\n";
        }
    }
    if (!warnings.empty()) write_text_file(fs::path(cfg.out_dir) / "warnings.jsonl", warnings);
    std::cout << "segmented " << written << "/" << traces.size() << " traces into " << cfg.out_dir << "/units\n";
    return kExitOk;
}

int cmd_build_graph(const CommonOptions& opts) {
    RunConfig cfg = resolve_config(opts);
    auto traces = load_all_corpora(cfg);
    if (traces.empty()) throw ConfigError("corpus contains no traces");

    auto parts = build_components(cfg);
    auto run = run_corpus(traces, cfg, parts);
    write_corpus_artifacts(run, cfg.out_dir);
    write_run_manifest(cfg, parts, traces.size(), cfg.out_dir);

    std::cout << "built " << run.results.size() << "/" << traces.size() << " graphs into " << cfg.out_dir
              << "/graphs";
    if (!run.failures.empty()) std::cout << " (" << run.failures.size() << " quarantined in errors.jsonl)";
    std::cout << "\n";
    return run.results.empty() ? kExitPipelineFailure : kExitOk;
}

std::vector<fs::path> collect_graph_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& input : inputs) {
        fs::path p(input);
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && entry.path().string().ends_with(".graph.json"))
                    files.push_back(entry.path());
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_metrics(const std::vector<std::string>& inputs, const std::string& out_dir) {
    auto files = collect_graph_files(inputs);
    if (files.empty()) throw ConfigError("no graph files found");

    std::string csv = metrics_csv_header() + "\n";
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open graph file: " + file.string());
        nlohmann::json doc;
        try {
            in >> doc;
            ReasoningGraph graph = graph_from_json(doc);
            csv += metric_row_to_csv(metric_row(graph)) + "\n";
        } catch (const std::exception& e) {
            throw ParseError("graph file " + file.string() + ": " + e.what(), 0);
        }
    }
    write_text_file(fs::path(out_dir) / "metrics.csv", csv);
    std::cout << "wrote metrics for " << files.size() << " graphs to " << out_dir << "/metrics.csv\n";
    return kExitOk;
}

ReportFormat parse_format(const std::string& name) {
    if (name == "markdown-table" || name == "md") return ReportFormat::markdown_table;
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw ConfigError("unknown report format '" + name + "'");
}

int cmd_report(const std::string& metrics_path, const std::string& traces_path, const std::string& out_dir,
               const std::string& format) {
    std::ifstream in(metrics_path);
    if (!in) throw IoError("cannot open metrics CSV: " + metrics_path);
    auto rows = parse_metrics_csv(in);
    if (rows.empty()) throw ParseError("metrics CSV has no data rows", 1);

    if (!traces_path.empty()) {
        auto traces = load_corpus(traces_path);
        std::unordered_map<std::string, double> tokens;
        for (const auto& t : traces) tokens[t.trace_id] = static_cast<double>(t.token_count);
        for (auto& row : rows) {
            auto it = tokens.find(row.trace_id);
            if (it != tokens.end()) row.total_tokens = it->second;
        }
    }

    write_report_bundle(rows, out_dir, parse_format(format));
    std::cout << "wrote report bundle for " << rows.size() << " rows to " << out_dir << "\n";
    return kExitOk;
}

int cmd_demo(const std::string& data_dir, const std::string& out_dir, std::uint64_t seed) {
    RunConfig cfg;
    cfg.inputs = {(fs::path(data_dir) / "traces.jsonl").string()};
    cfg.out_dir = out_dir;
    cfg.seed = seed;
    cfg.llm.backend = "fixture";
    cfg.llm.fixture_dir = (fs::path(data_dir) / "fixtures").string();
    cfg.validate();

    auto traces = load_all_corpora(cfg);
    auto parts = build_components(cfg);
    auto run = run_corpus(traces, cfg, parts);
    write_corpus_artifacts(run, cfg.out_dir);
    write_run_manifest(cfg, parts, traces.size(), cfg.out_dir);
    if (!run.failures.empty()) {
        std::cerr << "demo: " << run.failures.size() << " trace(s) failed; see " << out_dir
                  << "/errors.jsonl\n";
        return kExitPipelineFailure;
    }

    std::vector<MetricRow> rows;
    for (const auto& r : run.results) rows.push_back(r.row);
    write_report_bundle(rows, fs::path(out_dir) / "report");

    std::cout << "demo complete: " << run.results.size() << " graphs, metrics.csv and report under " << out_dir
              << "\n";
    return kExitOk;
}

struct ValidationOutcome {
    bool ok = true;
    void check(bool pass, const std::string& name, const std::string& detail = "") {
        std::cout << (pass ? "PASS  " : "FAIL  ") << name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n";
        if (!pass) ok = false;
    }
};

bool metrics_equal(const GraphMetrics& a, const GraphMetrics& b) {
    return a.node_count == b.node_count && a.edge_count == b.edge_count &&
           a.exploration_density.has_value() == b.exploration_density.has_value() &&
           (!a.exploration_density || *a.exploration_density == *b.exploration_density) &&
           a.branching_ratio == b.branching_ratio && a.convergence_ratio == b.convergence_ratio &&
           a.linearity == b.linearity && a.support_edge_count == b.support_edge_count &&
           a.contradict_edge_count == b.contradict_edge_count;
}

int cmd_validate() {
    ValidationOutcome out;

    // exhaustive metric agreement for K <= 3
    {
        bool all_match = true;
        size_t cases = 0;
        for (size_t k = 1; k <= 3; ++k) {
            for (const auto& a : enumerate_antisymmetric(k)) {
                if (!metrics_equal(metrics(graph_from_adjacency(a)), brute_force_metrics(a))) all_match = false;
                ++cases;
            }
        }
        out.check(all_match, "metrics match brute force on all matrices K<=3", std::to_string(cases) + " cases");
    }

    // randomized metric agreement for K <= 6
    {
        std::mt19937_64 rng(7);
        bool all_match = true;
        for (int i = 0; i < 500; ++i) {
            size_t k = 1 + uniform_below(rng, 6);
            auto a = random_antisymmetric(k, rng);
            if (!metrics_equal(metrics(graph_from_adjacency(a)), brute_force_metrics(a))) all_match = false;
        }
        out.check(all_match, "metrics match brute force on 500 random matrices K<=6");
    }

    // estimator consistency under a known ground truth
    {
        PairTruth truth{0.6, 0.1, 0.3};
        auto gt = EdgeGroundTruth::uniform(2, truth);
        double sum_w = 0.0;
        const int runs = 400;
        for (int run = 0; run < runs; ++run) {
            auto backend = simulate_sampler(gt, 1000 + run);
            EdgeEstimateTable table(2);
            for (int r = 0; r < 50; ++r) {
                PromptRequest req;
                req.template_id = TemplateId::semantics;
                table.apply_sample(parse_semantics(backend->complete(req), 2));
            }
            sum_w += table.estimates()[0].signed_confidence;
        }
        double mean_w = sum_w / runs;
        out.check(std::abs(mean_w - 0.5) < 0.02, "signed confidence converges to p+ - p-",
                  "mean " + format_double(mean_w, 4) + " vs 0.5");
    }

    // consensus thresholds at the documented boundaries
    {
        EstimatorConfig cfg;
        auto weight_for = [&](std::uint64_t support, std::uint64_t contradict) {
            EdgeEstimateTable table(2);
            SemanticsResponse r;
            for (std::uint64_t s = 0; s < support; ++s) {
                r.labels[{0, 1}] = Relation::support;
                table.apply_sample(r);
            }
            for (std::uint64_t c = 0; c < contradict; ++c) {
                r.labels[{0, 1}] = Relation::contradict;
                table.apply_sample(r);
            }
            for (std::uint64_t i = 0; i < 100 - support - contradict; ++i) {
                r.labels[{0, 1}] = Relation::independent;
                table.apply_sample(r);
            }
            std::vector<std::vector<int>> a;
            std::vector<std::vector<double>> w;
            consensus(table, cfg, a, w);
            return a[0][1];
        };
        bool pass = weight_for(45, 0) == 1 && weight_for(40, 0) == 1 && weight_for(39, 0) == 0 &&
                    weight_for(0, 30) == -1 && weight_for(0, 29) == 0;
        out.check(pass, "dual-threshold consensus at boundary confidences");
    }

    // reference step length worked cases
    {
        bool pass = compute_mu_ref(1000, 25) == 200.0 && compute_mu_ref(90, 4) == 30.0 &&
                    compute_mu_ref(60000, 2000) == 2000.0;
        out.check(pass, "reference step length heuristic worked cases");
    }

    // selection agreement between ensemble scoring and the brute-force selector
    {
        std::mt19937_64 rng(21);
        HashedBowEmbedder embedder(64);
        ScoringWeights weights;
        bool agree = true;
        for (int set = 0; set < 10; ++set) {
            auto synth = random_candidate_set(rng, 6 + uniform_below(rng, 5), 4);
            std::vector<std::string> unit_texts;
            size_t total_tokens = 0;
            for (const auto& u : synth.units) {
                unit_texts.push_back(u.text);
                total_tokens += u.token_count;
            }
            auto unit_embeddings = embedder.embed_texts(unit_texts);
            double mu_ref = compute_mu_ref(total_tokens, synth.units.size());

            size_t best = 0;
            double best_score = -1e300;
            size_t best_k = 0;
            for (size_t c = 0; c < synth.candidates.size(); ++c) {
                auto scores = score_candidate(synth.candidates[c], unit_embeddings, embedder, mu_ref, weights);
                if (scores.composite > best_score ||
                    (scores.composite == best_score && synth.candidates[c].size() < best_k)) {
                    best = c;
                    best_score = scores.composite;
                    best_k = synth.candidates[c].size();
                }
            }
            if (best != brute_force_select(synth.candidates, synth.units, weights, embedder)) agree = false;
        }
        out.check(agree, "argmax selection agrees with brute-force scorer on 10 sets");
    }

    std::cout << (out.ok ? "validation passed\n" : "validation FAILED\n");
    return out.ok ? kExitOk : kExitPipelineFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reasoning-trace graph analytics"};
    app.require_subcommand(1);

    CommonOptions segment_opts, build_opts;
    std::vector<std::string> metrics_inputs;
    std::string metrics_out = ".";
    std::string report_metrics, report_traces, report_out = "report", report_format = "markdown-table";
    std::string demo_data = "data/demo", demo_out = "out/demo";
    std::uint64_t demo_seed = 42;

    auto add_common = [](CLI::App* cmd, CommonOptions& opts, bool pipeline_flags) {
        cmd->add_option("inputs", opts.inputs, "trace JSONL files");
        cmd->add_option("--config", opts.config_path, "run config JSON");
        cmd->add_option("--out", opts.out_dir, "output directory");
        if (pipeline_flags) {
            cmd->add_option("--seed", opts.seed, "run seed");
            cmd->add_option("--backend", opts.backend, "llm backend: live|fixture|mock");
            cmd->add_option("--parallel", opts.parallel, "worker pool size");
        }
    };

    auto* segment = app.add_subcommand("segment", "split traces into reasoning units");
    add_common(segment, segment_opts, false);

    auto* build = app.add_subcommand("build-graph", "full pipeline: segment, cluster, estimate edges");
    add_common(build, build_opts, true);

    auto* metrics_cmd = app.add_subcommand("metrics", "compute structural metrics for graph files");
    metrics_cmd->add_option("graphs", metrics_inputs, "graph JSON files or directories")->required();
    metrics_cmd->add_option("--out", metrics_out, "output directory");

    auto* report_cmd = app.add_subcommand("report", "aggregate metrics into tables and correlations");
    report_cmd->add_option("metrics", report_metrics, "metrics.csv path")->required();
    report_cmd->add_option("--traces", report_traces, "trace corpus for token-count joins");
    report_cmd->add_option("--out", report_out, "output directory");
    report_cmd->add_option("--format", report_format, "table format: markdown-table|csv|json");

    auto* demo = app.add_subcommand("demo", "run the shipped fixture corpus end to end");
    demo->add_option("--data", demo_data, "demo data directory");
    demo->add_option("--out", demo_out, "output directory");
    demo->add_option("--seed", demo_seed, "run seed");

    auto* validate = app.add_subcommand("validate", "run the oracle battery");
    validate->group(""); // hidden

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (segment->parsed()) return cmd_segment(segment_opts);
        if (build->parsed()) return cmd_build_graph(build_opts);
        if (metrics_cmd->parsed()) return cmd_metrics(metrics_inputs, metrics_out);
        if (report_cmd->parsed()) return cmd_report(report_metrics, report_traces, report_out, report_format);
        if (demo->parsed()) return cmd_demo(demo_data, demo_out, demo_seed);
        if (validate->parsed()) return cmd_validate();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DuplicateTraceId& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return kExitPipelineFailure;
    }
    return kExitUsage;
}
