#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "htg/types.hpp"

namespace htg {

/// Code-symptom hook: source text -> symptom tags.
using SymptomDetector = std::function<std::vector<std::string>(const std::string& source)>;

/// Text heuristics for the five symptom tags, in priority order.
std::vector<std::string> detect_symptoms(const std::string& source);

/// One-line structural summary of an implementation.
std::string summarize_code(const std::string& source);

struct StateConfig {
    /// Steps without a best-speedup improvement that flag stagnation.
    int stagnation_steps = 2;
    /// Length of the recent_globals / recent_locals windows.
    std::size_t history_window = 5;
    SymptomDetector symptoms = detect_symptoms;
};

/// State for step 1: no feedback yet, progress at the reference.
DecisionState initial_state(const TaskContext& task, const CandidateImplementation& code,
                            const StateConfig& config = {});

/// s_{t+1} from s_t, the implementation the next step starts from, the
/// action taken and its feedback (absent for an invalid step).
DecisionState summarize_state(const DecisionState& prev, const CandidateImplementation& next_code,
                              const Action& action, const std::optional<EvaluationFeedback>& feedback,
                              const StateConfig& config = {});

}  // namespace htg
