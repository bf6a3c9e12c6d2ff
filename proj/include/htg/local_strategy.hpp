#pragma once

#include <optional>
#include <string>
#include <vector>

#include "htg/backend.hpp"
#include "htg/memory.hpp"
#include "htg/prompts.hpp"

namespace htg {

/// Structured reply of the local-selection call.
struct LocalSelection {
    NodeId selected_local_node;
    std::string rationale;
    std::string edit_plan;

    bool operator==(const LocalSelection&) const = default;
};

inline constexpr const char* kFallbackEditPlan = "apply strategy prior";

/// Children of `g` ranked by descending smoothed success rate, then
/// descending attempts, then id. Throws LookupError for an unknown global.
std::vector<const LocalNode*> local_candidates(const MemoryBank& bank, const NodeId& g);

/// Prompt with the decision state, current code, the global node memory and
/// the candidate cards (up to k evidence items each).
std::string build_local_prompt(const DecisionState& state, const CandidateImplementation& code,
                               const GlobalNode& g_memory, const std::vector<const LocalNode*>& candidates,
                               std::size_t k, const PromptTemplates& templates = PromptTemplates::defaults());

/// Reads the first fenced block (then the first balanced {...}) that parses
/// as an object with a string selected_local_node. Never throws.
std::optional<LocalSelection> parse_local_reply(const std::string& text);

struct LocalStrategyConfig {
    std::size_t evidence_k = 4;
    PromptTemplates templates = PromptTemplates::defaults();
};

struct LocalSelectionResult {
    Action action;
    bool fallback = false;
    std::string rationale;
    BackendReply reply;
};

/// One comparative backend call; replies outside the candidate set or
/// unparseable replies fall back to the top-ranked candidate. Throws
/// InvalidStepError when `g` has no children (before any backend call).
LocalSelectionResult select_local(const DecisionState& state, const CandidateImplementation& code,
                                  const NodeId& g, const MemoryBank& bank, Backend& backend,
                                  const LocalStrategyConfig& config = {});

}  // namespace htg
