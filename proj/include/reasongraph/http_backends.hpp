#pragma once
// Live HTTP clients for chat completions and embeddings (OpenAI-compatible
// wire shapes). Kept in one header so the heavy httplib dependency stays out
// of the core translation units that never talk to the network.

#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "reasongraph/embedding.hpp"
#include "reasongraph/errors.hpp"
#include "reasongraph/gateway.hpp"

namespace reasongraph {

namespace detail {

// Bounded-concurrency gate for in-flight requests.
class ConcurrencyGate {
public:
    explicit ConcurrencyGate(unsigned limit) : limit_(limit == 0 ? 1 : limit) {}

    void enter() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
    }

    void leave() {
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    unsigned limit_;
    unsigned active_ = 0;
    std::mutex mutex_;
    std::condition_variable cv_;
};

struct GateGuard {
    ConcurrencyGate& gate;
    explicit GateGuard(ConcurrencyGate& g) : gate(g) { gate.enter(); }
    ~GateGuard() { gate.leave(); }
};

inline std::string resolve_api_key(const std::string& env_name) {
    if (env_name.empty()) return {};
    const char* value = std::getenv(env_name.c_str());
    return value ? std::string(value) : std::string();
}

} // namespace detail

class HttpChatBackend final : public LlmBackend {
public:
    HttpChatBackend(std::string endpoint, std::string model, const std::string& api_key_env,
                    unsigned max_concurrency = 4, std::shared_ptr<TokenBucket> bucket = nullptr)
        : endpoint_(std::move(endpoint)),
          model_(std::move(model)),
          api_key_(detail::resolve_api_key(api_key_env)),
          gate_(max_concurrency),
          bucket_(std::move(bucket)) {}

    std::string complete(const PromptRequest& request) override {
        detail::GateGuard guard(gate_);
        if (bucket_) bucket_->acquire();

        nlohmann::json body;
        body["model"] = model_;
        body["temperature"] = request.temperature;
        if (request.seed) body["seed"] = *request.seed;
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.rendered_prompt}}});

        httplib::Client client(endpoint_);
        client.set_connection_timeout(15);
        client.set_read_timeout(300);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
        if (!res) throw BackendUnavailable("chat request failed: " + httplib::to_string(res.error()));
        if (res->status == 429) throw RateLimited("chat backend rate limited");
        if (res->status == 400 || res->status == 413) {
            if (res->body.find("context") != std::string::npos)
                throw ContextOverflow("prompt exceeds backend context window");
            throw BackendUnavailable("chat backend rejected request: " + res->body.substr(0, 200));
        }
        if (res->status != 200)
            throw BackendUnavailable("chat backend returned status " + std::to_string(res->status));

        auto doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
            throw BackendUnavailable("chat backend returned an unexpected envelope");
        return doc["choices"][0]["message"]["content"].get<std::string>();
    }

    std::string id() const override { return "live:" + model_; }

private:
    std::string endpoint_;
    std::string model_;
    std::string api_key_;
    detail::ConcurrencyGate gate_;
    std::shared_ptr<TokenBucket> bucket_;
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string endpoint, std::string model, const std::string& api_key_env,
                          size_t expected_dim)
        : endpoint_(std::move(endpoint)),
          model_(std::move(model)),
          api_key_(detail::resolve_api_key(api_key_env)),
          dim_(expected_dim) {}

    std::vector<Embedding> embed_texts(std::span<const std::string> texts) override {
        if (texts.empty()) throw ProviderError("embed_texts: empty input batch");

        nlohmann::json body;
        body["model"] = model_;
        body["input"] = std::vector<std::string>(texts.begin(), texts.end());

        httplib::Client client(endpoint_);
        client.set_connection_timeout(15);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post("/v1/embeddings", headers, body.dump(), "application/json");
        if (!res)
            throw ProviderError("embedding request failed: " + httplib::to_string(res.error()), 1, true);
        if (res->status == 429) throw ProviderError("embedding backend rate limited", 1, true);
        if (res->status != 200)
            throw ProviderError("embedding backend returned status " + std::to_string(res->status), 1, false);

        auto doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("data"))
            throw ProviderError("embedding backend returned an unexpected envelope", 1, false);

        std::vector<Embedding> out;
        for (const auto& item : doc["data"]) {
            Embedding e;
            e.values = item.at("embedding").get<std::vector<double>>();
            if (e.dim() != dim_)
                throw DimensionMismatch("embedding dim " + std::to_string(e.dim()) + " != configured " +
                                        std::to_string(dim_));
            out.push_back(std::move(e));
        }
        if (out.size() != texts.size())
            throw ProviderError("embedding backend returned " + std::to_string(out.size()) + " vectors for " +
                                std::to_string(texts.size()) + " inputs", 1, false);
        return out;
    }

    size_t dim() const override { return dim_; }
    std::string id() const override { return "http:" + model_; }

private:
    std::string endpoint_;
    std::string model_;
    std::string api_key_;
    size_t dim_;
};

} // namespace reasongraph
