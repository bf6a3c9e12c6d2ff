#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace htg {

using NodeId = std::string;

// Symptom tags produced by the rule-based code summarizer. Order is the
// priority used when picking a dominant symptom for bucketing.
namespace symptom {
inline constexpr std::string_view kStridedAccess = "strided-access";
inline constexpr std::string_view kBranchHeavyLoop = "branch-heavy-loop";
inline constexpr std::string_view kRepeatedIndex = "repeated-index-computation";
inline constexpr std::string_view kMemoryBound = "memory-bound";
inline constexpr std::string_view kBoundaryRisk = "boundary-risk";
inline constexpr std::string_view kNone = "none";

inline constexpr std::string_view kPriority[] = {
    kBoundaryRisk, kStridedAccess, kMemoryBound, kBranchHeavyLoop, kRepeatedIndex,
};
}  // namespace symptom

/// Outcome of one candidate evaluation (o_t). Invariants:
/// correct => compile; runtime present => compile && correct && !timeout.
struct EvaluationFeedback {
    bool compile = false;
    bool correct = false;
    std::optional<double> runtime_ms;
    bool timeout = false;
    std::string failure_detail;

    bool executable() const noexcept { return compile && correct && runtime_ms.has_value(); }
    bool valid() const noexcept;

    bool operator==(const EvaluationFeedback&) const = default;
};

enum class Outcome { CompileFail, CorrectFail, Regressed, Neutral, Improved };

const char* to_string(Outcome outcome) noexcept;
Outcome outcome_from_string(std::string_view text);

struct TaskContext {
    std::string task_id;
    std::string operator_type;
    std::string input_shape_summary;
    double reference_runtime_ms = 0.0;

    bool operator==(const TaskContext&) const = default;
};

struct FeedbackSignals {
    bool compile = false;
    bool correct = false;
    std::optional<double> runtime_ms;
    std::optional<double> speedup;
    bool timeout = false;
    std::string dominant_failure = "none";  // none | compile | correctness | timeout | regression

    bool operator==(const FeedbackSignals&) const = default;
};

struct SearchProgress {
    double best_speedup = 1.0;
    double best_runtime_ms = 0.0;
    /// Runtime of the implementation the next edit starts from.
    double base_runtime_ms = 0.0;
    /// best_speedup after the last step divided by best_speedup before it.
    double recent_improvement = 1.0;
    int steps_without_improvement = 0;
    bool stagnation = false;
    int correctness_failures = 0;
    int last_correctness_failure_step = 0;  // 0 = never
    std::vector<NodeId> recent_globals;
    std::vector<NodeId> recent_locals;

    bool operator==(const SearchProgress&) const = default;
};

/// Compact decision summary s_t.
struct DecisionState {
    int step = 1;  // the evolution step this state decides
    TaskContext task;
    std::string code_summary;
    FeedbackSignals feedback;
    SearchProgress progress;
    std::vector<std::string> symptoms;

    bool operator==(const DecisionState&) const = default;
};

enum class Stage { Early, Mid, Late };
enum class CorrectnessStatus { NeverFailed, RecentlyFailed };

const char* to_string(Stage stage) noexcept;
const char* to_string(CorrectnessStatus status) noexcept;

/// Discretized state digest used to key state-conditioned edge statistics.
struct BucketKey {
    Stage stage = Stage::Early;
    std::string dominant_symptom = std::string(symptom::kNone);
    CorrectnessStatus correctness = CorrectnessStatus::NeverFailed;

    auto operator<=>(const BucketKey&) const = default;

    /// "stage|symptom|status", the persisted form.
    std::string to_string() const;
    static BucketKey parse(std::string_view text);
};

/// Steps 1-2 are early, 3-4 mid, 5+ late. A correctness failure within the
/// previous two steps marks the state as recently failed.
BucketKey bucket_key(const DecisionState& state);

std::string dominant_symptom(const std::vector<std::string>& symptoms);

struct Action {
    NodeId global;
    NodeId local;
    std::string edit_plan;

    bool operator==(const Action&) const = default;
};

struct CandidateImplementation {
    std::string source;
    int origin_step = 0;
    std::string lineage;  // digest of the parent candidate, empty for the initial code

    bool operator==(const CandidateImplementation&) const = default;
};

/// Stable 64-bit FNV-1a digest rendered as 16 hex characters.
std::string digest(std::string_view text);

}  // namespace htg
