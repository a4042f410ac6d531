#pragma once
// Sentence-embedding abstraction. The hashed bag-of-words embedder is the
// deterministic offline default; remote providers can be layered behind the
// same interface with an on-disk cache so reruns never repeat a request.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/errors.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

struct Embedding {
    std::vector<double> values;

    size_t dim() const { return values.size(); }
};

inline double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw DimensionMismatch("cosine: dims " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    if (a.values == b.values) {
        double norm_sq = 0.0;
        for (double v : a.values) norm_sq += v * v;
        if (norm_sq == 0.0) throw ZeroVector("cosine of zero vector");
        return 1.0;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine of zero vector");
    double c = dot / std::sqrt(na * nb);
    return std::min(1.0, std::max(-1.0, c));
}

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<Embedding> embed_texts(std::span<const std::string> texts) = 0;
    virtual size_t dim() const = 0;
    virtual std::string id() const = 0;

    Embedding embed_text(const std::string& text) {
        std::vector<std::string> one{text};
        return embed_texts(one).front();
    }
};

// Deterministic offline embedder: each lowercased whitespace token hashes to
// one of dim buckets with a +-1 sign, counts are accumulated and the vector
// is L2-normalized. The embedding depends only on the multiset of lowercased
// tokens. Text with no tokens maps to a reserved unit vector on bucket 0.
class HashedBowEmbedder final : public EmbeddingProvider {
public:
    explicit HashedBowEmbedder(size_t dim = 256) : dim_(dim) {
        if (dim_ == 0) throw ConfigError("embedding dim must be positive");
    }

    std::vector<Embedding> embed_texts(std::span<const std::string> texts) override {
        if (texts.empty()) throw ProviderError("embed_texts: empty input batch");
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            if (text.empty()) throw ProviderError("embed_texts: empty string input");
            out.push_back(embed_one(text));
        }
        return out;
    }

    size_t dim() const override { return dim_; }
    std::string id() const override { return "hashed-bow-" + std::to_string(dim_); }

private:
    Embedding embed_one(const std::string& text) const {
        Embedding e;
        e.values.assign(dim_, 0.0);
        auto tokens = split_whitespace(text);
        if (tokens.empty()) {
            e.values[0] = 1.0;
            return e;
        }
        for (const auto& tok : tokens) {
            std::uint64_t h = fnv1a64(to_lower(tok));
            size_t bucket = static_cast<size_t>(h % dim_);
            double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
            e.values[bucket] += sign;
        }
        double norm_sq = 0.0;
        for (double v : e.values) norm_sq += v * v;
        if (norm_sq == 0.0) {
            // signed counts cancelled out entirely; fall back to the reserved vector
            e.values.assign(dim_, 0.0);
            e.values[0] = 1.0;
            return e;
        }
        double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : e.values) v *= inv;
        return e;
    }

    size_t dim_;
};

// Content-addressed disk cache keyed by (provider id, text). Values are
// deterministic per key, so concurrent last-writer-wins is safe.
class CachingProvider final : public EmbeddingProvider {
public:
    CachingProvider(std::shared_ptr<EmbeddingProvider> inner, std::filesystem::path cache_dir)
        : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {
        std::filesystem::create_directories(cache_dir_);
    }

    std::vector<Embedding> embed_texts(std::span<const std::string> texts) override {
        std::vector<Embedding> out(texts.size());
        std::vector<std::string> misses;
        std::vector<size_t> miss_slots;
        for (size_t i = 0; i < texts.size(); ++i) {
            if (auto hit = read_cache(texts[i])) {
                out[i] = std::move(*hit);
            } else {
                misses.push_back(texts[i]);
                miss_slots.push_back(i);
            }
        }
        if (!misses.empty()) {
            auto fresh = inner_->embed_texts(misses);
            for (size_t k = 0; k < fresh.size(); ++k) {
                write_cache(misses[k], fresh[k]);
                out[miss_slots[k]] = std::move(fresh[k]);
            }
        }
        return out;
    }

    size_t dim() const override { return inner_->dim(); }
    std::string id() const override { return inner_->id(); }

private:
    std::filesystem::path key_path(const std::string& text) const {
        std::uint64_t h = fnv1a64(text, fnv1a64(inner_->id()));
        return cache_dir_ / (hex64(h) + ".json");
    }

    std::optional<Embedding> read_cache(const std::string& text) const {
        std::lock_guard lock(mutex_);
        std::ifstream in(key_path(text));
        if (!in) return std::nullopt;
        nlohmann::json doc;
        in >> doc;
        Embedding e;
        e.values = doc.at("values").get<std::vector<double>>();
        if (e.dim() != inner_->dim()) return std::nullopt; // stale entry from another config
        return e;
    }

    void write_cache(const std::string& text, const Embedding& e) const {
        std::lock_guard lock(mutex_);
        auto path = key_path(text);
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream outf(tmp);
            nlohmann::json doc;
            doc["provider"] = inner_->id();
            doc["values"] = e.values;
            outf << doc;
        }
        std::filesystem::rename(tmp, path);
    }

    std::shared_ptr<EmbeddingProvider> inner_;
    std::filesystem::path cache_dir_;
    mutable std::mutex mutex_;
};

} // namespace reasongraph
