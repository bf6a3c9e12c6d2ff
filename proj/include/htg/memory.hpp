#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "htg/types.hpp"

namespace htg {

inline constexpr const char* kBankSchemaVersion = "htg-1";

/// Runtime counters shared by global and local nodes.
struct NodeStats {
    std::int64_t attempts = 0;
    std::int64_t successes = 0;
    std::int64_t compile_passes = 0;
    std::int64_t correct_passes = 0;
    double gain_log_sum = 0.0;
    std::int64_t gain_count = 0;
    std::int64_t last_touched_step = 0;

    bool operator==(const NodeStats&) const = default;
};

struct GlobalPrior {
    std::string goal;
    std::vector<std::string> triggers;
    std::vector<std::string> applicable_patterns;
    std::vector<std::string> risks;
    std::vector<std::string> expected_gain_types;

    bool operator==(const GlobalPrior&) const = default;
};

struct GlobalNode {
    NodeId id;
    std::string label;
    GlobalPrior prior;
    NodeStats runtime;

    bool operator==(const GlobalNode&) const = default;
};

struct EvidenceItem {
    std::string task_id;
    std::int64_t step = 0;
    Outcome outcome = Outcome::Neutral;
    double log_gain = 0.0;
    std::string summary;
    BucketKey state_digest;

    bool operator==(const EvidenceItem&) const = default;
};

struct LocalPrior {
    std::string strategy;
    std::vector<std::string> use_when;
    std::vector<std::string> avoid_when;
    std::string edit_recipe;
    std::vector<std::string> verification_checklist;
    std::vector<std::string> common_failures;

    bool operator==(const LocalPrior&) const = default;
};

struct LocalEvidence {
    std::deque<EvidenceItem> positive;
    std::deque<EvidenceItem> negative;

    bool operator==(const LocalEvidence&) const = default;
};

struct LocalNode {
    NodeId id;
    NodeId parent_global_id;
    LocalPrior prior;
    LocalEvidence evidence;
    NodeStats runtime;

    bool operator==(const LocalNode&) const = default;
};

/// Counters behind the transition features. Every count is <= n.
struct TransitionStats {
    std::int64_t n = 0;
    double imm_gain_sum = 0.0;
    double fut_gain_sum = 0.0;
    std::int64_t pos = 0;
    std::int64_t succ = 0;
    std::int64_t comp = 0;
    std::int64_t corr = 0;
    std::int64_t safe = 0;
    std::int64_t cfail = 0;
    std::int64_t corfail = 0;
    std::int64_t neg = 0;
    /// Executable observations slower than their parent; denominator is corr.
    std::int64_t risk_events = 0;

    bool operator==(const TransitionStats&) const = default;
    TransitionStats& operator+=(const TransitionStats& other);
};

struct EdgePrior {
    std::string rationale;
    std::vector<std::string> pivot_conditions;
    std::vector<std::string> risks;

    bool operator==(const EdgePrior&) const = default;
};

struct TransitionEdgeMemory {
    NodeId src;
    NodeId dst;
    EdgePrior prior;
    TransitionStats aggregate;
    std::map<BucketKey, TransitionStats> buckets;

    bool operator==(const TransitionEdgeMemory&) const = default;
};

struct BankMeta {
    std::string schema_version = kBankSchemaVersion;
    std::string created_from;
    bool writable = false;

    bool operator==(const BankMeta&) const = default;
};

/// Tunables for the memory write path.
struct MemoryConfig {
    std::size_t evidence_cap = 32;
    std::size_t summary_max_chars = 512;
    /// Relative margin a correct candidate must beat the incumbent best by to
    /// count as improved, and the band treated as neutral.
    double timing_tolerance = 0.01;
    double gamma = 0.9;
};

using EdgeKey = std::pair<NodeId, NodeId>;

/// Hierarchical transition graph: global nodes, local nodes and the complete
/// directed edge set over globals (self-loops included).
class MemoryBank {
public:
    MemoryBank() = default;

    const std::map<NodeId, GlobalNode>& globals() const noexcept { return globals_; }
    const std::map<NodeId, LocalNode>& locals() const noexcept { return locals_; }
    const std::map<EdgeKey, TransitionEdgeMemory>& edges() const noexcept { return edges_; }
    const BankMeta& meta() const noexcept { return meta_; }
    BankMeta& meta() noexcept { return meta_; }

    bool writable() const noexcept { return meta_.writable; }

    /// Adds a global node and every edge to/from it, keeping |edges| = |globals|^2.
    void add_global(GlobalNode node);
    /// Adds a local node. Throws LookupError if the parent is missing.
    void add_local(LocalNode node);

    const GlobalNode& global(const NodeId& id) const;
    const LocalNode& local(const NodeId& id) const;
    const TransitionEdgeMemory& edge(const NodeId& src, const NodeId& dst) const;

    GlobalNode& global_mut(const NodeId& id);
    LocalNode& local_mut(const NodeId& id);
    TransitionEdgeMemory& edge_mut(const NodeId& src, const NodeId& dst);

    std::vector<NodeId> global_ids() const;
    std::vector<NodeId> children_of(const NodeId& global_id) const;

    /// Total of aggregate.n across all edges.
    std::int64_t edge_observations() const;

    bool operator==(const MemoryBank&) const = default;

private:
    std::map<NodeId, GlobalNode> globals_;
    std::map<NodeId, LocalNode> locals_;
    std::map<EdgeKey, TransitionEdgeMemory> edges_;
    BankMeta meta_;
};

/// Deep copy flagged writable.
MemoryBank fork_writable(const MemoryBank& bank);

/// Classifies one evaluation against the runtime the edit started from and the
/// incumbent best runtime.
Outcome classify_outcome(const EvaluationFeedback& feedback, double runtime_before,
                         double best_runtime_before, double tolerance);

/// ln(before/after) for executable feedback, else 0.
double immediate_log_gain(const EvaluationFeedback& feedback, double runtime_before);

/// Writes one step's outcome into the bank. The edge (g_prev, g) and its
/// bucket are only touched when `g_prev` is present. `state` is the decision
/// state the action was taken from.
void record_outcome(MemoryBank& bank, const std::string& task_id, int step,
                    const std::optional<NodeId>& g_prev, const NodeId& g, const NodeId& l,
                    const DecisionState& state, const EvaluationFeedback& feedback,
                    const MemoryConfig& config = {});

struct TrajectoryTransition {
    std::optional<NodeId> g_prev;
    NodeId g;
    DecisionState state;
    double log_gain = 0.0;
};

/// contribution[t] = sum_{k>t} gamma^(k-t) * log_gains[k].
std::vector<double> discounted_future_gains(std::span<const double> log_gains, double gamma);

/// Adds each transition's discounted future gain to its edge aggregate and
/// bucket. Call once per finished trajectory; observations are not counted.
void apply_future_gains(MemoryBank& bank, std::span<const TrajectoryTransition> trajectory,
                        double gamma);

/// Laplace-smoothed rate (count + 1) / (n + 2).
inline double smoothed_rate(std::int64_t count, std::int64_t n) {
    return (static_cast<double>(count) + 1.0) / (static_cast<double>(n) + 2.0);
}

}  // namespace htg
