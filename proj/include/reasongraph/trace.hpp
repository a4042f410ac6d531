#pragma once
// Trace ingestion: JSONL corpus loading, metadata validation, and delimiter
// segmentation of raw chain-of-thought text into ordered reasoning units.

#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/errors.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

inline constexpr std::string_view kDefaultDelimiter = "\n\n";

enum class PromptRegime { zero_shot, minimal, concise, explanatory };

inline std::string to_string(PromptRegime r) {
    switch (r) {
        case PromptRegime::zero_shot: return "zero_shot";
        case PromptRegime::minimal: return "minimal";
        case PromptRegime::concise: return "concise";
        case PromptRegime::explanatory: return "explanatory";
    }
    return "zero_shot";
}

inline std::optional<PromptRegime> prompt_regime_from_string(std::string_view s) {
    if (s == "zero_shot") return PromptRegime::zero_shot;
    if (s == "minimal") return PromptRegime::minimal;
    if (s == "concise") return PromptRegime::concise;
    if (s == "explanatory") return PromptRegime::explanatory;
    return std::nullopt;
}

struct ReasoningTrace {
    std::string trace_id;
    std::string raw_text;
    size_t token_count = 0; // whitespace tokens of raw_text
    std::string model_id;
    PromptRegime prompt_regime = PromptRegime::zero_shot;
    unsigned shot_count = 0;
    std::optional<bool> correct;
    std::string task_id;
};

struct ReasoningUnit {
    size_t index = 0;
    std::string text; // trimmed, never contains the delimiter
    size_t token_count = 0;
};

// Splits raw_text at every delimiter occurrence (left to right), trims each
// segment, and drops segments that are empty after trimming. Runs of
// consecutive delimiters therefore act as one boundary.
inline std::vector<ReasoningUnit> segment_units(const ReasoningTrace& trace,
                                                std::string_view delimiter = kDefaultDelimiter) {
    if (delimiter.empty()) throw Error("segment_units: delimiter must be nonempty");
    if (trace.raw_text.empty()) throw EmptyTrace("trace '" + trace.trace_id + "' has empty raw_text");

    std::vector<ReasoningUnit> units;
    std::string_view rest = trace.raw_text;
    auto push_segment = [&](std::string_view seg) {
        std::string text = trim(seg);
        if (text.empty()) return;
        ReasoningUnit u;
        u.index = units.size();
        u.token_count = count_whitespace_tokens(text);
        u.text = std::move(text);
        units.push_back(std::move(u));
    };
    while (true) {
        size_t pos = rest.find(delimiter);
        if (pos == std::string_view::npos) {
            push_segment(rest);
            break;
        }
        push_segment(rest.substr(0, pos));
        rest.remove_prefix(pos + delimiter.size());
    }
    if (units.empty()) throw EmptyTrace("trace '" + trace.trace_id + "' yields zero nonempty units");
    return units;
}

inline ReasoningTrace trace_from_json(const nlohmann::json& rec, size_t line_no) {
    auto require_string = [&](const char* key) -> std::string {
        if (!rec.contains(key) || !rec[key].is_string())
            throw ParseError(std::string("missing or non-string field '") + key + "'", line_no);
        return rec[key].get<std::string>();
    };

    ReasoningTrace t;
    t.trace_id = require_string("trace_id");
    t.raw_text = require_string("raw_text");
    t.model_id = require_string("model_id");
    t.task_id = require_string("task_id");

    std::string regime = require_string("prompt_regime");
    auto parsed = prompt_regime_from_string(regime);
    if (!parsed) throw ParseError("unknown prompt_regime '" + regime + "'", line_no);
    t.prompt_regime = *parsed;

    if (!rec.contains("shot_count") || !rec["shot_count"].is_number_integer())
        throw ParseError("missing or non-integer field 'shot_count'", line_no);
    long long shots = rec["shot_count"].get<long long>();
    if (shots < 0) throw ParseError("shot_count must be nonnegative", line_no);
    t.shot_count = static_cast<unsigned>(shots);

    if ((t.shot_count == 0) != (t.prompt_regime == PromptRegime::zero_shot))
        throw ParseError("shot_count must be 0 exactly when prompt_regime is zero_shot", line_no);

    if (rec.contains("correct") && !rec["correct"].is_null()) {
        if (!rec["correct"].is_boolean()) throw ParseError("field 'correct' must be bool or null", line_no);
        t.correct = rec["correct"].get<bool>();
    }

    size_t recomputed = count_whitespace_tokens(t.raw_text);
    if (rec.contains("token_count") && !rec["token_count"].is_null()) {
        if (!rec["token_count"].is_number_integer() || rec["token_count"].get<long long>() < 0)
            throw ParseError("field 'token_count' must be a nonnegative integer", line_no);
        t.token_count = rec["token_count"].get<size_t>();
        if (t.token_count != recomputed)
            throw ParseError("token_count " + std::to_string(t.token_count) +
                                 " does not match whitespace-token count " + std::to_string(recomputed),
                             line_no);
    } else {
        t.token_count = recomputed;
    }
    return t;
}

// One JSON object per line; blank lines are skipped.
inline std::vector<ReasoningTrace> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);

    std::vector<ReasoningTrace> traces;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        if (!rec.is_object()) throw ParseError("record is not a JSON object", line_no);
        ReasoningTrace t = trace_from_json(rec, line_no);
        if (!seen_ids.insert(t.trace_id).second) throw DuplicateTraceId(t.trace_id, line_no);
        traces.push_back(std::move(t));
    }
    return traces;
}

inline nlohmann::ordered_json units_to_json(const std::string& trace_id,
                                            const std::vector<ReasoningUnit>& units,
                                            std::string_view delimiter = kDefaultDelimiter) {
    nlohmann::ordered_json doc;
    doc["trace_id"] = trace_id;
    doc["delimiter"] = std::string(delimiter);
    auto arr = nlohmann::ordered_json::array();
    for (const auto& u : units) {
        arr.push_back({{"index", u.index}, {"text", u.text}, {"token_count", u.token_count}});
    }
    doc["units"] = std::move(arr);
    return doc;
}

} // namespace reasongraph
