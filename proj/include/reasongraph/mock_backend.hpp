#pragma once
// Deterministic built-in mock: computes plausible clustering and semantics
// responses purely from the prompt text and the request seed. Backs the
// `mock` backend choice and the recorded demo fixtures.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/errors.hpp"
#include "reasongraph/gateway.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

namespace detail {

// Returns the balanced-brace JSON object that follows `marker`, respecting
// strings and escapes.
inline std::string extract_json_after(const std::string& text, std::string_view marker) {
    size_t at = text.find(marker);
    if (at == std::string::npos) throw MalformedOutput("mock: prompt marker not found");
    size_t start = text.find('{', at);
    if (start == std::string::npos) throw MalformedOutput("mock: no JSON block after marker");
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return text.substr(start, i - start + 1);
        }
    }
    throw MalformedOutput("mock: unbalanced JSON block");
}

} // namespace detail

// Partitions the prompt's units into contiguous steps. The step count and
// cut positions vary with the request seed so ensemble slots see distinct
// candidates.
inline std::string mock_clustering_response(const PromptRequest& request) {
    auto block = nlohmann::json::parse(
        detail::extract_json_after(request.rendered_prompt, "Reasoning units (JSON, in original order):"));
    std::vector<std::string> units;
    for (size_t i = 0;; ++i) {
        std::string key = "u" + std::to_string(i);
        if (!block.contains(key)) break;
        units.push_back(block[key].get<std::string>());
    }
    size_t m = units.size();
    if (m == 0) throw MalformedOutput("mock: no units found in prompt");

    std::mt19937_64 rng(request.seed.value_or(0));
    long base = static_cast<long>(std::ceil(std::sqrt(static_cast<double>(m))));
    long jitter = static_cast<long>(uniform_below(rng, 3)) - 1;
    size_t k = static_cast<size_t>(std::min<long>(std::max<long>(base + jitter, 1), static_cast<long>(m)));

    // choose k-1 distinct interior cut points
    std::vector<size_t> cuts;
    while (cuts.size() + 1 < k) {
        size_t cut = 1 + static_cast<size_t>(uniform_below(rng, m - 1));
        if (std::find(cuts.begin(), cuts.end(), cut) == cuts.end()) cuts.push_back(cut);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(m);

    nlohmann::ordered_json doc;
    size_t begin = 0;
    for (size_t step = 0; step < cuts.size(); ++step) {
        size_t end = cuts[step];
        std::string content;
        for (size_t u = begin; u < end; ++u) {
            if (!content.empty()) content += "\n\n";
            content += units[u];
        }
        auto tokens = split_whitespace(units[begin]);
        std::string title;
        for (size_t t = 0; t < tokens.size() && t < 3; ++t) {
            if (!title.empty()) title += " ";
            title += tokens[t];
        }
        if (title.empty()) title = "Step " + std::to_string(step);
        doc["s" + std::to_string(step)] = {{"title", title}, {"content", content}};
        begin = end;
    }
    return doc.dump(2);
}

// Labels each pair from a hash of the step contents: most pairs get a stable
// label (so their standard errors collapse), a minority resample noisily (so
// adaptive stopping has work to do). Adjacent steps usually support each
// other; a slice of long-range pairs supports or contradicts.
inline std::string mock_semantics_response(const PromptRequest& request) {
    auto block = nlohmann::json::parse(
        detail::extract_json_after(request.rendered_prompt, "Reasoning steps (JSON, in original order):"));
    size_t k = 0;
    std::uint64_t basis = fnv1a64("steps");
    while (block.contains("s" + std::to_string(k))) {
        basis = fnv1a64(block["s" + std::to_string(k)]["content"].get<std::string>(), basis);
        ++k;
    }
    if (k < 2) throw MalformedOutput("mock: fewer than 2 steps in prompt");

    std::uint64_t seed = request.seed.value_or(0);
    nlohmann::ordered_json doc;
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = i + 1; j < k; ++j) {
            std::uint64_t h = fnv1a64(std::to_string(i) + ":" + std::to_string(j), basis);
            std::string label;
            switch (h % 10) {
                case 7:
                case 8: {
                    // noisy support: p(support) ~ 0.8 across samples
                    std::uint64_t hs = fnv1a64(std::to_string(seed), h);
                    label = (hs % 5 < 4) ? "support" : "independent";
                    break;
                }
                case 9: {
                    // coin toss: no stable relation should emerge
                    std::uint64_t hs = fnv1a64(std::to_string(seed), h);
                    label = (hs % 2 == 0) ? "support" : "contradict";
                    break;
                }
                default: {
                    std::uint64_t hl = h / 10;
                    if (j == i + 1) label = "support";
                    else if (hl % 8 == 0) label = "support";
                    else if (hl % 11 == 0) label = "contradict";
                    else label = "independent";
                }
            }
            doc["(" + std::to_string(i) + "," + std::to_string(j) + ")"] = label;
        }
    }
    return doc.dump(2);
}

inline ScriptedBackend::Rule deterministic_mock_rule() {
    return [](const PromptRequest& request) {
        return request.template_id == TemplateId::clustering ? mock_clustering_response(request)
                                                             : mock_semantics_response(request);
    };
}

} // namespace reasongraph
