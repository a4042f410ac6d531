#pragma once
// LLM gateway: backend abstraction (scripted mock, fixture replay, retrying
// wrapper), structured-output parsers for both templates, and run telemetry.
// Parsing failures surface as MalformedOutput so samplers can reject and
// resample rather than retry verbatim.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/errors.hpp"
#include "reasongraph/graph.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

enum class TemplateId { clustering, semantics };

inline std::string to_string(TemplateId t) {
    return t == TemplateId::clustering ? "clustering" : "semantics";
}

struct PromptRequest {
    TemplateId template_id = TemplateId::clustering;
    std::string rendered_prompt;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    std::string backend_id;
};

struct ClusteringResponseStep {
    std::string title;
    std::string content;
};

struct ClusteringResponse {
    std::vector<ClusteringResponseStep> steps;
    std::string raw;
};

struct SemanticsResponse {
    // keys satisfy i < j; missing pairs were imputed as independent
    std::map<std::pair<size_t, size_t>, Relation> labels;
    std::string raw;
};

// Counters shared across a run; accepted-sample rate is reported per template.
struct GatewayTelemetry {
    std::atomic<std::uint64_t> requests_clustering{0};
    std::atomic<std::uint64_t> requests_semantics{0};
    std::atomic<std::uint64_t> rejected_clustering{0};
    std::atomic<std::uint64_t> rejected_semantics{0};
    std::atomic<std::uint64_t> retries{0};

    void count_request(TemplateId t) {
        (t == TemplateId::clustering ? requests_clustering : requests_semantics)++;
    }
    void count_rejection(TemplateId t) {
        (t == TemplateId::clustering ? rejected_clustering : rejected_semantics)++;
    }
    double accepted_rate(TemplateId t) const {
        std::uint64_t req = t == TemplateId::clustering ? requests_clustering.load() : requests_semantics.load();
        std::uint64_t rej = t == TemplateId::clustering ? rejected_clustering.load() : rejected_semantics.load();
        if (req == 0) return 1.0;
        return static_cast<double>(req - rej) / static_cast<double>(req);
    }
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const PromptRequest& request) = 0;
    virtual std::string id() const = 0;
};

// Computes responses from a programmable rule; the workhorse for tests.
class ScriptedBackend final : public LlmBackend {
public:
    using Rule = std::function<std::string(const PromptRequest&)>;

    explicit ScriptedBackend(Rule rule, std::string backend_id = "mock")
        : rule_(std::move(rule)), id_(std::move(backend_id)) {}

    std::string complete(const PromptRequest& request) override { return rule_(request); }
    std::string id() const override { return id_; }

private:
    Rule rule_;
    std::string id_;
};

// Replays recorded responses from fixtures/<template_id>/<request-hash>.txt.
// With a recording source attached, misses are filled from the source and
// written atomically, so a live run can be captured once and replayed forever.
class FixtureBackend final : public LlmBackend {
public:
    explicit FixtureBackend(std::filesystem::path fixture_dir,
                            std::shared_ptr<LlmBackend> record_from = nullptr)
        : dir_(std::move(fixture_dir)), record_from_(std::move(record_from)) {}

    static std::string request_key(const PromptRequest& request) {
        std::uint64_t h = fnv1a64(to_string(request.template_id));
        h = fnv1a64("\x1f", h);
        h = fnv1a64(request.rendered_prompt, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(request.seed ? std::to_string(*request.seed) : std::string("none"), h);
        return hex64(h);
    }

    std::filesystem::path path_for(const PromptRequest& request) const {
        return dir_ / to_string(request.template_id) / (request_key(request) + ".txt");
    }

    std::string complete(const PromptRequest& request) override {
        auto path = path_for(request);
        {
            std::ifstream in(path, std::ios::binary);
            if (in) {
                return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
            }
        }
        if (!record_from_) {
            throw BackendUnavailable("missing fixture " + path.string() + " for " +
                                     to_string(request.template_id) + " request");
        }
        std::string response = record_from_->complete(request);
        std::lock_guard lock(write_mutex_);
        std::filesystem::create_directories(path.parent_path());
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            out << response;
        }
        std::filesystem::rename(tmp, path);
        return response;
    }

    std::string id() const override {
        return record_from_ ? "fixture-recording(" + record_from_->id() + ")" : "fixture";
    }

private:
    std::filesystem::path dir_;
    std::shared_ptr<LlmBackend> record_from_;
    std::mutex write_mutex_;
};

// Retries transport and rate-limit failures with exponential backoff.
// Malformed content never reaches this layer; it is resampled upstream.
class RetryingBackend final : public LlmBackend {
public:
    RetryingBackend(std::shared_ptr<LlmBackend> inner, std::shared_ptr<GatewayTelemetry> telemetry,
                    int max_retries = 3, std::chrono::milliseconds base_backoff = std::chrono::seconds(1))
        : inner_(std::move(inner)),
          telemetry_(std::move(telemetry)),
          max_retries_(max_retries),
          base_backoff_(base_backoff) {}

    std::string complete(const PromptRequest& request) override {
        int attempt = 0;
        auto backoff = base_backoff_;
        while (true) {
            try {
                return inner_->complete(request);
            } catch (const ContextOverflow&) {
                throw; // a longer wait cannot fix an oversized prompt
            } catch (const RateLimited& e) {
                if (!note_failure(++attempt)) throw BackendUnavailable(describe(e.what(), attempt), attempt);
            } catch (const BackendUnavailable& e) {
                if (!note_failure(++attempt)) throw BackendUnavailable(describe(e.what(), attempt), attempt);
            }
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }

    std::string id() const override { return inner_->id(); }

private:
    bool note_failure(int attempt) {
        if (telemetry_) telemetry_->retries++;
        return attempt <= max_retries_;
    }

    std::string describe(const std::string& cause, int attempt) const {
        return "backend unavailable after " + std::to_string(attempt - 1) + " retries: " + cause;
    }

    std::shared_ptr<LlmBackend> inner_;
    std::shared_ptr<GatewayTelemetry> telemetry_;
    int max_retries_;
    std::chrono::milliseconds base_backoff_;
};

// Token bucket used to pace live backends.
class TokenBucket {
public:
    TokenBucket(double capacity, double refill_per_second)
        : capacity_(capacity), tokens_(capacity), refill_per_second_(refill_per_second),
          last_refill_(std::chrono::steady_clock::now()) {}

    bool try_acquire() {
        std::lock_guard lock(mutex_);
        refill();
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return true;
        }
        return false;
    }

    void acquire() {
        while (!try_acquire()) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

private:
    void refill() {
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - last_refill_).count();
        tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_second_);
        last_refill_ = now;
    }

    double capacity_;
    double tokens_;
    double refill_per_second_;
    std::chrono::steady_clock::time_point last_refill_;
    std::mutex mutex_;
};

namespace detail {

// Models often wrap JSON in markdown fences or prose; try the raw text, then
// a fenced block, then the outermost brace span.
inline nlohmann::json parse_json_lenient(const std::string& raw) {
    auto try_parse = [](std::string_view text) -> std::optional<nlohmann::json> {
        auto parsed = nlohmann::json::parse(text, nullptr, false);
        if (parsed.is_discarded()) return std::nullopt;
        return parsed;
    };
    if (auto j = try_parse(raw)) return *j;
    size_t fence = raw.find("```");
    if (fence != std::string::npos) {
        size_t start = raw.find('\n', fence);
        size_t end = raw.find("```", fence + 3);
        if (start != std::string::npos && end != std::string::npos && start < end) {
            if (auto j = try_parse(std::string_view(raw).substr(start + 1, end - start - 1))) return *j;
        }
    }
    size_t lo = raw.find('{');
    size_t hi = raw.rfind('}');
    if (lo != std::string::npos && hi != std::string::npos && lo < hi) {
        if (auto j = try_parse(std::string_view(raw).substr(lo, hi - lo + 1))) return *j;
    }
    throw MalformedOutput("response is not parseable JSON");
}

inline std::optional<std::pair<size_t, size_t>> parse_pair_key(std::string_view key) {
    std::string cleaned = collapse_whitespace(key);
    if (cleaned.size() < 5 || cleaned.front() != '(' || cleaned.back() != ')') return std::nullopt;
    cleaned = cleaned.substr(1, cleaned.size() - 2);
    size_t comma = cleaned.find(',');
    if (comma == std::string::npos) return std::nullopt;
    std::string a = trim(cleaned.substr(0, comma));
    std::string b = trim(cleaned.substr(comma + 1));
    if (a.empty() || b.empty()) return std::nullopt;
    if (a.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    if (b.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    return std::make_pair(static_cast<size_t>(std::stoull(a)), static_cast<size_t>(std::stoull(b)));
}

} // namespace detail

// Validates the {"s0": {"title", "content"}, ...} shape: keys consecutive
// from s0, titles and contents nonempty, at most one step per unit.
inline ClusteringResponse parse_clustering(const std::string& raw, size_t unit_count) {
    if (raw.empty()) throw MalformedOutput("empty clustering response");
    nlohmann::json doc = detail::parse_json_lenient(raw);
    if (!doc.is_object() || doc.empty()) throw MalformedOutput("clustering response must be a nonempty object");

    size_t k = doc.size();
    if (k > unit_count)
        throw MalformedOutput("clustering returned " + std::to_string(k) + " steps for " +
                              std::to_string(unit_count) + " units");

    ClusteringResponse response;
    response.raw = raw;
    response.steps.reserve(k);
    for (size_t idx = 0; idx < k; ++idx) {
        std::string key = "s" + std::to_string(idx);
        if (!doc.contains(key))
            throw MalformedOutput("clustering response missing key '" + key + "' (keys must be s0..s" +
                                  std::to_string(k - 1) + ")");
        const auto& entry = doc[key];
        if (!entry.is_object() || !entry.contains("title") || !entry.contains("content") ||
            !entry["title"].is_string() || !entry["content"].is_string())
            throw MalformedOutput("step '" + key + "' must be {\"title\": str, \"content\": str}");
        ClusteringResponseStep step;
        step.title = entry["title"].get<std::string>();
        step.content = entry["content"].get<std::string>();
        if (trim(step.title).empty()) throw MalformedOutput("step '" + key + "' has empty title");
        if (trim(step.content).empty()) throw MalformedOutput("step '" + key + "' has empty content");
        response.steps.push_back(std::move(step));
    }
    return response;
}

// Accepts a sample when at least 90% of required (i, j) pairs are labeled;
// missing pairs are imputed as independent. Anything below the coverage bar,
// an unknown label, or an out-of-range key rejects the sample.
inline SemanticsResponse parse_semantics(const std::string& raw, size_t step_count,
                                         double min_coverage = 0.9) {
    if (step_count < 2) throw TooFewSteps("parse_semantics requires at least 2 steps");
    if (raw.empty()) throw MalformedOutput("empty semantics response");
    nlohmann::json doc = detail::parse_json_lenient(raw);
    if (!doc.is_object()) throw MalformedOutput("semantics response must be an object");

    SemanticsResponse response;
    response.raw = raw;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        auto pair = detail::parse_pair_key(it.key());
        if (!pair) throw MalformedOutput("bad pair key '" + it.key() + "'");
        auto [i, j] = *pair;
        if (!(i < j) || j >= step_count)
            throw MalformedOutput("pair (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") is out of range or not ordered i < j");
        if (!it.value().is_string()) throw MalformedOutput("label for pair key '" + it.key() + "' must be a string");
        auto label = relation_from_string(it.value().get<std::string>());
        if (!label)
            throw MalformedOutput("unknown label '" + it.value().get<std::string>() + "'");
        response.labels[{i, j}] = *label;
    }

    size_t required = step_count * (step_count - 1) / 2;
    double coverage = static_cast<double>(response.labels.size()) / static_cast<double>(required);
    if (coverage < min_coverage)
        throw MalformedOutput("pair coverage " + format_general(coverage) + " below required " +
                              format_general(min_coverage));
    for (size_t i = 0; i < step_count; ++i)
        for (size_t j = i + 1; j < step_count; ++j)
            response.labels.try_emplace({i, j}, Relation::independent);
    return response;
}

} // namespace reasongraph
