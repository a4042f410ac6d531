#pragma once
// Rendering of the two structured prompts: unit clustering and pairwise
// step-relation labeling. Unit and step texts are injected as JSON blocks so
// braces or quotes inside them never break the surrounding prompt.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reasongraph/errors.hpp"
#include "reasongraph/graph.hpp"
#include "reasongraph/trace.hpp"

namespace reasongraph {

inline std::string render_clustering_prompt(const std::vector<ReasoningUnit>& units) {
    if (units.empty()) throw Error("render_clustering_prompt: units must be nonempty");

    nlohmann::ordered_json block;
    for (const auto& u : units) block["u" + std::to_string(u.index)] = u.text;

    std::string prompt;
    prompt +=
        "You are given a sequence of reasoning units, each representing a contiguous fragment "
        "from a language model's chain-of-thought (CoT) output. These units have typically been "
        "segmented using raw delimiters and may be overly fine-grained or fragmented for "
        "downstream analysis.\n\n";
    prompt += "Reasoning units (JSON, in original order):\n";
    prompt += block.dump(2);
    prompt += "\n\n";
    prompt +=
        "Your task is to cluster consecutive reasoning units that are semantically connected, "
        "producing a concise and coherent set of higher-level reasoning steps. Each reasoning "
        "step should:\n"
        "- Combine all units that express a single coherent sub-task, logical inference, or "
        "closely related set of thoughts. Aim to group together units that collectively advance "
        "the same intermediate goal or logical point.\n"
        "- Ensure that each resulting reasoning step contains enough self-contained context to "
        "be analyzed independently, but avoid excessive merging that would result in overly "
        "broad or incoherent segments.\n"
        "- Maintain the original sequential order of reasoning.\n"
        "- Avoid splitting apart reasoning units that clearly belong to the same sub-problem or "
        "share strong contextual dependency.\n"
        "- Use concise yet informative titles for each reasoning step, reflecting its main "
        "logical function or purpose (e.g., \"Restate Problem\", \"Recall Known Facts\", "
        "\"Solve Equation\", \"Synthesize Solution\", etc.).\n\n";
    prompt +=
        "Expected Output Format:\n"
        "{\n"
        "  \"s0\": {\"title\": \"...\", \"content\": \"...\"},\n"
        "  \"s1\": {\"title\": \"...\", \"content\": \"...\"},\n"
        "  ...\n"
        "}\n"
        "where each \"sX\" key indexes an ordered reasoning step, with an appropriate \"title\" "
        "summarizing its logical purpose and \"content\" containing the merged, cleaned "
        "reasoning text.\n\n"
        "Please ensure the output is structured, coherent, and well-suited for subsequent "
        "semantic analysis or graph-based modeling of the reasoning process.\n";
    return prompt;
}

inline std::string render_semantics_prompt(const std::vector<ReasoningStep>& steps) {
    if (steps.size() < 2) throw TooFewSteps("semantics prompt requires at least 2 steps");

    nlohmann::ordered_json block;
    for (const auto& s : steps)
        block["s" + std::to_string(s.index)] = {{"title", s.title}, {"content", s.content}};

    std::string pair_list;
    for (size_t i = 0; i < steps.size(); ++i) {
        for (size_t j = i + 1; j < steps.size(); ++j) {
            if (!pair_list.empty()) pair_list += ", ";
            pair_list += "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
    }

    std::string prompt;
    prompt += "Given an ordered sequence of " + std::to_string(steps.size()) +
              " reasoning steps, each representing a semantically meaningful stage in a language "
              "model's chain-of-thought output, your task is to systematically assess the "
              "semantic relationship between each pair of reasoning steps.\n\n";
    prompt += "Reasoning steps (JSON, in original order):\n";
    prompt += block.dump(2);
    prompt += "\n\n";
    prompt +=
        "For every ordered pair (i, j) with i < j, decide whether step i:\n"
        "- supports step j (i.e., provides information, justification, intermediate results, or "
        "logical basis for step j),\n"
        "- contradicts step j (i.e., conflicts with, undermines, or provides an incompatible "
        "claim or result relative to step j), or\n"
        "- is independent of step j (i.e., is neither directly supportive nor contradictory; "
        "the steps are unrelated in logical content).\n\n"
        "When making your decision, consider both explicit logical connections (e.g., "
        "mathematical derivation, use of previous results, direct contradiction) and more "
        "implicit semantic dependencies (e.g., fact recall enabling downstream calculations).\n\n";
    prompt +=
        "Expected Output Format:\n"
        "{\n"
        "  \"(0,1)\": \"support\",\n"
        "  \"(0,2)\": \"independent\",\n"
        "  \"(1,2)\": \"contradict\",\n"
        "  ...\n"
        "}\n"
        "where each key \"(i,j)\" denotes an ordered pair of step indices (with i < j), and each "
        "value is one of \"support\", \"contradict\", or \"independent\".\n\n"
        "For each pair, provide only one label reflecting the most salient semantic "
        "relationship. If the relationship is unclear or borderline, default to \"independent\" "
        "unless clear evidence suggests support or contradiction.\n\n";
    prompt += "Required pairs: " + pair_list + "\n";
    prompt +=
        "Ensure that all required pairs (i, j) with i < j are covered in the output, and that "
        "your decisions are consistent and justifiable based on the provided reasoning steps.\n";
    return prompt;
}

} // namespace reasongraph
