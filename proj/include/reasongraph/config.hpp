#pragma once
// Run configuration: JSON file with strict unknown-key rejection, plus
// validation delegated to the owning modules' invariants.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/clustering.hpp"
#include "reasongraph/errors.hpp"
#include "reasongraph/graph.hpp"

namespace reasongraph {

struct EmbeddingSettings {
    std::string provider = "offline"; // offline | http
    size_t dim = 256;
    std::string cache_dir;
    std::string api_key_env;
    std::string endpoint;
    std::string model;
};

struct LlmSettings {
    std::string backend = "mock"; // live | fixture | mock
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    unsigned max_concurrency = 4;
    double temperature_lo = 0.3;
    double temperature_hi = 0.7;
    std::string fixture_dir = "fixtures";
    double rate_limit_per_second = 0.0; // 0 = unlimited
};

struct ClusterSettings {
    unsigned sample_count = 5; // B
    ScoringWeights weights;
    unsigned resample_cap = 3;
};

struct RunConfig {
    std::vector<std::string> inputs;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    unsigned parallelism = 1;
    EmbeddingSettings embedding;
    LlmSettings llm;
    ClusterSettings cluster;
    EstimatorConfig estimator;

    void validate() const {
        if (parallelism == 0) throw ConfigError("parallelism must be >= 1");
        if (embedding.dim == 0) throw ConfigError("embedding.dim must be >= 1");
        if (embedding.provider != "offline" && embedding.provider != "http")
            throw ConfigError("embedding.provider must be 'offline' or 'http'");
        if (llm.backend != "live" && llm.backend != "fixture" && llm.backend != "mock")
            throw ConfigError("llm.backend must be 'live', 'fixture' or 'mock'");
        if (!(llm.temperature_lo <= llm.temperature_hi) || llm.temperature_lo < 0.0 || llm.temperature_hi > 2.0)
            throw ConfigError("llm.temperature_range must satisfy 0 <= lo <= hi <= 2");
        if (cluster.sample_count == 0) throw ConfigError("cluster.B must be >= 1");
        cluster.weights.validate();
        estimator.validate();
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& scope) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key '" + (scope.empty() ? it.key() : scope + "." + it.key()) + "'");
    }
}

} // namespace detail

inline RunConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown_keys(
        doc, {"inputs", "out_dir", "seed", "parallelism", "embedding", "llm", "cluster", "estimator"}, "");

    RunConfig cfg;
    try {
        if (doc.contains("inputs")) cfg.inputs = doc["inputs"].get<std::vector<std::string>>();
        if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("parallelism")) cfg.parallelism = doc["parallelism"].get<unsigned>();

        if (doc.contains("embedding")) {
            const auto& e = doc["embedding"];
            detail::reject_unknown_keys(e, {"provider", "dim", "cache_dir", "api_key_env", "endpoint", "model"},
                                        "embedding");
            cfg.embedding.provider = e.value("provider", cfg.embedding.provider);
            cfg.embedding.dim = e.value("dim", cfg.embedding.dim);
            cfg.embedding.cache_dir = e.value("cache_dir", cfg.embedding.cache_dir);
            cfg.embedding.api_key_env = e.value("api_key_env", cfg.embedding.api_key_env);
            cfg.embedding.endpoint = e.value("endpoint", cfg.embedding.endpoint);
            cfg.embedding.model = e.value("model", cfg.embedding.model);
        }
        if (doc.contains("llm")) {
            const auto& l = doc["llm"];
            detail::reject_unknown_keys(l,
                                        {"backend", "endpoint", "model", "api_key_env", "max_concurrency",
                                         "temperature_range", "fixture_dir", "rate_limit_per_second"},
                                        "llm");
            cfg.llm.backend = l.value("backend", cfg.llm.backend);
            cfg.llm.endpoint = l.value("endpoint", cfg.llm.endpoint);
            cfg.llm.model = l.value("model", cfg.llm.model);
            cfg.llm.api_key_env = l.value("api_key_env", cfg.llm.api_key_env);
            cfg.llm.max_concurrency = l.value("max_concurrency", cfg.llm.max_concurrency);
            cfg.llm.fixture_dir = l.value("fixture_dir", cfg.llm.fixture_dir);
            cfg.llm.rate_limit_per_second = l.value("rate_limit_per_second", cfg.llm.rate_limit_per_second);
            if (l.contains("temperature_range")) {
                auto range = l["temperature_range"].get<std::vector<double>>();
                if (range.size() != 2) throw ConfigError("llm.temperature_range must be [lo, hi]");
                cfg.llm.temperature_lo = range[0];
                cfg.llm.temperature_hi = range[1];
            }
        }
        if (doc.contains("cluster")) {
            const auto& c = doc["cluster"];
            detail::reject_unknown_keys(c, {"B", "weights", "resample_cap"}, "cluster");
            cfg.cluster.sample_count = c.value("B", cfg.cluster.sample_count);
            cfg.cluster.resample_cap = c.value("resample_cap", cfg.cluster.resample_cap);
            if (c.contains("weights")) {
                const auto& w = c["weights"];
                detail::reject_unknown_keys(w, {"w_ic", "w_sep", "w_len"}, "cluster.weights");
                cfg.cluster.weights.w_ic = w.value("w_ic", cfg.cluster.weights.w_ic);
                cfg.cluster.weights.w_sep = w.value("w_sep", cfg.cluster.weights.w_sep);
                cfg.cluster.weights.w_len = w.value("w_len", cfg.cluster.weights.w_len);
            }
        }
        if (doc.contains("estimator")) {
            const auto& s = doc["estimator"];
            detail::reject_unknown_keys(s, {"epsilon", "r_max", "r_min", "tau_pos", "tau_neg"}, "estimator");
            cfg.estimator.epsilon = s.value("epsilon", cfg.estimator.epsilon);
            cfg.estimator.r_max = s.value("r_max", cfg.estimator.r_max);
            cfg.estimator.r_min = s.value("r_min", cfg.estimator.r_min);
            cfg.estimator.tau_pos = s.value("tau_pos", cfg.estimator.tau_pos);
            cfg.estimator.tau_neg = s.value("tau_neg", cfg.estimator.tau_neg);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(doc);
}

// Canonical JSON used for the run-manifest config hash.
inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["inputs"] = cfg.inputs;
    doc["out_dir"] = cfg.out_dir;
    doc["seed"] = cfg.seed;
    doc["parallelism"] = cfg.parallelism;
    doc["embedding"] = {{"provider", cfg.embedding.provider},
                        {"dim", cfg.embedding.dim},
                        {"cache_dir", cfg.embedding.cache_dir},
                        {"api_key_env", cfg.embedding.api_key_env},
                        {"endpoint", cfg.embedding.endpoint},
                        {"model", cfg.embedding.model}};
    doc["llm"] = {{"backend", cfg.llm.backend},
                  {"endpoint", cfg.llm.endpoint},
                  {"model", cfg.llm.model},
                  {"api_key_env", cfg.llm.api_key_env},
                  {"max_concurrency", cfg.llm.max_concurrency},
                  {"temperature_range", {cfg.llm.temperature_lo, cfg.llm.temperature_hi}},
                  {"fixture_dir", cfg.llm.fixture_dir},
                  {"rate_limit_per_second", cfg.llm.rate_limit_per_second}};
    doc["cluster"] = {{"B", cfg.cluster.sample_count},
                      {"weights",
                       {{"w_ic", cfg.cluster.weights.w_ic},
                        {"w_sep", cfg.cluster.weights.w_sep},
                        {"w_len", cfg.cluster.weights.w_len}}},
                      {"resample_cap", cfg.cluster.resample_cap}};
    doc["estimator"] = {{"epsilon", cfg.estimator.epsilon},
                        {"r_max", cfg.estimator.r_max},
                        {"r_min", cfg.estimator.r_min},
                        {"tau_pos", cfg.estimator.tau_pos},
                        {"tau_neg", cfg.estimator.tau_neg}};
    return doc;
}

} // namespace reasongraph
