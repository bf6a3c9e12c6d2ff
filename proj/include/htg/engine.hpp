#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "htg/backend.hpp"
#include "htg/errors.hpp"
#include "htg/evaluator.hpp"
#include "htg/local_strategy.hpp"
#include "htg/memory.hpp"
#include "htg/policy.hpp"
#include "htg/prompts.hpp"
#include "htg/scoring.hpp"
#include "htg/state.hpp"

namespace htg {

struct EngineConfig {
    int steps = 6;
    PolicyConfig policy;
    ScoringConfig scoring;
    MemoryConfig memory;
    StateConfig state;
    std::size_t evidence_k = 4;
    /// One repair call on empty output or a compile failure.
    bool repair = true;
    /// Skip every memory write (record_outcome and future gains).
    bool freeze_memory = false;
    /// Score with the last prefix element only.
    bool no_prefix = false;
    PromptTemplates templates = PromptTemplates::defaults();

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

struct Task {
    std::string task_id;
    std::string operator_type;
    std::string input_shape_summary;
    std::string initial_code;
    /// Asked from the evaluator when absent.
    std::optional<double> reference_runtime_ms;
    /// Forced global direction per step (replays); steps beyond it sample.
    std::vector<NodeId> global_schedule;
};

struct StepUsage {
    int local_selection_calls = 0;
    int code_generation_calls = 0;
    int repair_calls = 0;
    TokenUsage local_selection;
    TokenUsage code_generation;
    TokenUsage repair;
};

struct StepRecord {
    int step = 0;
    DecisionState state;
    GlobalDistribution distribution;
    NodeId global;
    bool forced_global = false;
    /// Empty for an invalid step.
    NodeId local;
    std::string edit_plan;
    bool invalid = false;
    bool local_fallback = false;
    bool repaired = false;
    bool truncated = false;
    std::string candidate_digest;
    std::optional<EvaluationFeedback> feedback;
    std::optional<double> speedup;
    double log_gain = 0.0;
    Outcome outcome = Outcome::Neutral;
    /// Running best speedup after this step (reference counts as 1).
    double best_speedup = 1.0;
    StepUsage usage;
};

struct BestRecord {
    int step = 0;  // 0 = the reference / initial implementation
    double speedup = 1.0;
    double runtime_ms = 0.0;
    std::string candidate_digest;
};

struct TrajectoryRecord {
    std::string task_id;
    double reference_runtime_ms = 0.0;
    std::vector<StepRecord> steps;
    /// Best implementation including the reference baseline.
    BestRecord best;
    /// Fastest correct generated candidate, if any was correct.
    std::optional<BestRecord> best_generated;
    std::string best_source;
    /// Set when a transport error stopped the run early.
    std::optional<std::string> abort_reason;
    std::optional<TransportKind> abort_kind;
};

/// Called after each step (for incremental logs).
using StepObserver = std::function<void(const TrajectoryRecord&, const StepRecord&)>;

/// Prompt for the code-generation call: current code, state, edit plan, the
/// local recipe and checklist, and up to k bucket-matched evidence items.
std::string generation_request(const CandidateImplementation& code, const DecisionState& state,
                               const Action& action, const LocalNode& local_memory, std::size_t k,
                               const PromptTemplates& templates = PromptTemplates::defaults());

std::string repair_request(const std::string& failed_code, const Action& action, const std::string& failure,
                           const PromptTemplates& templates = PromptTemplates::defaults());

/// Runs the evolution loop on a writable bank. Transport errors end the run
/// with abort_reason set and the partial trajectory returned; memory written
/// by completed steps is kept.
TrajectoryRecord run_task(const Task& task, MemoryBank& bank, Backend& backend, Evaluator& evaluator,
                          const EngineConfig& config, const StepObserver& observer = {});

}  // namespace htg
