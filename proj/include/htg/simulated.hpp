#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htg/backend.hpp"
#include "htg/evaluator.hpp"
#include "htg/types.hpp"

namespace htg {

/// Multiplicative runtime effect of one local strategy.
struct SimEffect {
    NodeId global;
    double factor = 1.0;
    /// Applications beyond the cap have factor 1.
    int cap = 1;
    /// Globals that must have been applied earlier for `factor`; otherwise
    /// `unmet_factor` applies.
    std::vector<NodeId> requires_globals;
    double unmet_factor = 1.0;
    /// When set, an unmet precondition fails correctness instead of using unmet_factor.
    bool unmet_fails = false;
};

/// Applying `local` (or any local of `global` when `local` is empty) fails
/// once any action of `after_global` has been applied.
struct SimFailureRule {
    NodeId after_global;
    NodeId global;
    NodeId local;
    /// Compile failures can be repaired; correctness failures cannot.
    bool compile_failure = false;
    std::string detail;
};

struct SimulatedEnvironmentSpec {
    double base_runtime_ms = 10.0;
    std::map<NodeId, SimEffect> effects;  // keyed by local id
    std::vector<SimFailureRule> failures;
};

/// One applied action as encoded in a candidate: "// @apply <global>/<local>"
/// with an optional " guarded" suffix once repaired.
struct AppliedAction {
    NodeId global;
    NodeId local;
    bool guarded = false;

    bool operator==(const AppliedAction&) const = default;
};

std::string encode_applied(const AppliedAction& action);
std::vector<AppliedAction> decode_applied(const std::string& source);

class SimulatedEnvironment {
public:
    explicit SimulatedEnvironment(SimulatedEnvironmentSpec spec);

    double runtime_ms() const noexcept { return runtime_ms_; }
    const std::vector<AppliedAction>& history() const noexcept { return history_; }
    const SimulatedEnvironmentSpec& spec() const noexcept { return spec_; }

    /// Effective factor of `action` given the current history (1 for unknown locals).
    double factor_for(const AppliedAction& action) const;
    /// Failure rule triggered by `action`, if any. Guarded actions skip compile rules.
    const SimFailureRule* failure_for(const AppliedAction& action) const;

    void apply(const AppliedAction& action);
    /// Every global the action requires appears somewhere in the history.
    bool preconditions_met(const AppliedAction& action) const;

private:
    SimulatedEnvironmentSpec spec_;
    double runtime_ms_;
    std::vector<AppliedAction> history_;
};

/// Applies `action` to `env`: runtime *= factor when it succeeds; on a failure
/// rule the environment is unchanged and the feedback reports the failure.
EvaluationFeedback simulated_step(SimulatedEnvironment& env, const Action& action, bool guarded = false);

/// Shipped effect table over the default bank's 16 local strategies.
SimulatedEnvironmentSpec default_simulated_spec(double base_runtime_ms = 10.0);

/// Per-task variant: base runtime and every factor's log perturbed
/// deterministically from (seed, task_id).
SimulatedEnvironmentSpec perturbed_spec(const SimulatedEnvironmentSpec& base, std::uint64_t seed,
                                        const std::string& task_id, double factor_jitter = 0.25);

/// Replays the candidate's applied-action lines on a fresh environment.
class SimulatedEvaluator final : public Evaluator {
public:
    /// Tasks without an explicit spec get perturbed_spec(base, seed, task_id).
    SimulatedEvaluator(SimulatedEnvironmentSpec base, std::uint64_t seed, double factor_jitter = 0.25);

    void set_task_spec(const std::string& task_id, SimulatedEnvironmentSpec spec);
    SimulatedEnvironmentSpec spec_for(const std::string& task_id) const;

    EvaluationFeedback evaluate(const std::string& task_id, const std::string& source) override;
    std::optional<double> reference_runtime_ms(const std::string& task_id,
                                               const std::string& initial_code) override;

private:
    SimulatedEnvironmentSpec base_;
    std::uint64_t seed_;
    double jitter_;
    std::map<std::string, SimulatedEnvironmentSpec> overrides_;
};

/// Deterministic stand-in for a model: selects the highest-ranked candidate
/// the code has not applied yet, and generates code by appending the action
/// line. Repair marks the last action as guarded.
class SimulatedBackend final : public Backend {
public:
    /// Token counts reported per call, for cost accounting.
    TokenUsage local_usage{800, 120};
    TokenUsage code_usage{1500, 1200};

protected:
    BackendReply do_complete(const BackendRequest& request) override;
};

}  // namespace htg
