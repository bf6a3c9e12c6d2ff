#include "htg/memory.hpp"

#include <cmath>
#include <cstdio>

#include "htg/errors.hpp"

namespace htg {

TransitionStats& TransitionStats::operator+=(const TransitionStats& o) {
    n += o.n;
    imm_gain_sum += o.imm_gain_sum;
    fut_gain_sum += o.fut_gain_sum;
    pos += o.pos;
    succ += o.succ;
    comp += o.comp;
    corr += o.corr;
    safe += o.safe;
    cfail += o.cfail;
    corfail += o.corfail;
    neg += o.neg;
    risk_events += o.risk_events;
    return *this;
}

void MemoryBank::add_global(GlobalNode node) {
    if (node.id.empty()) throw ConfigError("global node id must not be empty");
    if (globals_.contains(node.id)) throw ConfigError("duplicate global node '" + node.id + "'");
    const NodeId id = node.id;
    globals_.emplace(id, std::move(node));
    for (const auto& [other, _] : globals_) {
        edges_.try_emplace({id, other}, TransitionEdgeMemory{id, other, {}, {}, {}});
        edges_.try_emplace({other, id}, TransitionEdgeMemory{other, id, {}, {}, {}});
    }
}

void MemoryBank::add_local(LocalNode node) {
    if (node.id.empty()) throw ConfigError("local node id must not be empty");
    if (!globals_.contains(node.parent_global_id)) {
        throw LookupError("local node '" + node.id + "' references unknown global '" +
                          node.parent_global_id + "'");
    }
    if (locals_.contains(node.id)) throw ConfigError("duplicate local node '" + node.id + "'");
    const NodeId id = node.id;
    locals_.emplace(id, std::move(node));
}

const GlobalNode& MemoryBank::global(const NodeId& id) const {
    auto it = globals_.find(id);
    if (it == globals_.end()) throw LookupError("unknown global node '" + id + "'");
    return it->second;
}

const LocalNode& MemoryBank::local(const NodeId& id) const {
    auto it = locals_.find(id);
    if (it == locals_.end()) throw LookupError("unknown local node '" + id + "'");
    return it->second;
}

const TransitionEdgeMemory& MemoryBank::edge(const NodeId& src, const NodeId& dst) const {
    auto it = edges_.find({src, dst});
    if (it == edges_.end()) throw LookupError("unknown transition edge '" + src + "' -> '" + dst + "'");
    return it->second;
}

GlobalNode& MemoryBank::global_mut(const NodeId& id) {
    return const_cast<GlobalNode&>(std::as_const(*this).global(id));
}

LocalNode& MemoryBank::local_mut(const NodeId& id) {
    return const_cast<LocalNode&>(std::as_const(*this).local(id));
}

TransitionEdgeMemory& MemoryBank::edge_mut(const NodeId& src, const NodeId& dst) {
    return const_cast<TransitionEdgeMemory&>(std::as_const(*this).edge(src, dst));
}

std::vector<NodeId> MemoryBank::global_ids() const {
    std::vector<NodeId> ids;
    ids.reserve(globals_.size());
    for (const auto& [id, _] : globals_) ids.push_back(id);
    return ids;
}

std::vector<NodeId> MemoryBank::children_of(const NodeId& global_id) const {
    std::vector<NodeId> ids;
    for (const auto& [id, node] : locals_) {
        if (node.parent_global_id == global_id) ids.push_back(id);
    }
    return ids;
}

std::int64_t MemoryBank::edge_observations() const {
    std::int64_t total = 0;
    for (const auto& [_, e] : edges_) total += e.aggregate.n;
    return total;
}

MemoryBank fork_writable(const MemoryBank& bank) {
    MemoryBank copy = bank;
    copy.meta().writable = true;
    return copy;
}

Outcome classify_outcome(const EvaluationFeedback& feedback, double runtime_before,
                         double best_runtime_before, double tolerance) {
    if (!feedback.compile) return Outcome::CompileFail;
    if (!feedback.executable()) return Outcome::CorrectFail;
    const double after = *feedback.runtime_ms;
    if (best_runtime_before > 0.0 && best_runtime_before / after > 1.0 + tolerance) {
        return Outcome::Improved;
    }
    if (runtime_before > 0.0 && after > runtime_before * (1.0 + tolerance)) {
        return Outcome::Regressed;
    }
    return Outcome::Neutral;
}

double immediate_log_gain(const EvaluationFeedback& feedback, double runtime_before) {
    if (!feedback.executable() || !(runtime_before > 0.0)) return 0.0;
    return std::log(runtime_before / *feedback.runtime_ms);
}

namespace {

void check_writable(const MemoryBank& bank) {
    if (!bank.writable()) {
        throw WriteProtectedError("memory bank '" + bank.meta().created_from +
                                  "' is read-only; fork it before recording outcomes");
    }
}

// Cuts at a UTF-8 code point boundary.
std::string truncate_utf8(std::string text, std::size_t max_bytes) {
    if (text.size() <= max_bytes) return text;
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    text.resize(cut);
    return text;
}

std::string evidence_summary(Outcome outcome, const EvaluationFeedback& fb, double before,
                             const std::string& global, const std::string& local) {
    char buf[160];
    std::string text = std::string(to_string(outcome)) + " under " + global + "/" + local;
    if (fb.executable()) {
        if (before > 0.0) {
            std::snprintf(buf, sizeof buf, ": %.4g ms -> %.4g ms (x%.3f)", before, *fb.runtime_ms,
                          before / *fb.runtime_ms);
        } else {
            std::snprintf(buf, sizeof buf, ": %.4g ms", *fb.runtime_ms);
        }
        text += buf;
    } else if (fb.timeout) {
        text += ": timed out";
    }
    if (!fb.failure_detail.empty()) text += "; " + fb.failure_detail;
    return text;
}

void bump(NodeStats& stats, const EvaluationFeedback& fb, bool success, double gain, int step) {
    ++stats.attempts;
    stats.successes += success;
    stats.compile_passes += fb.compile;
    stats.correct_passes += fb.compile && fb.correct;
    if (fb.executable()) {
        stats.gain_log_sum += gain;
        ++stats.gain_count;
    }
    stats.last_touched_step = step;
}

void push_capped(std::deque<EvidenceItem>& list, EvidenceItem item, std::size_t cap) {
    list.push_back(std::move(item));
    while (list.size() > cap) list.pop_front();
}

}  // namespace

void record_outcome(MemoryBank& bank, const std::string& task_id, int step,
                    const std::optional<NodeId>& g_prev, const NodeId& g, const NodeId& l,
                    const DecisionState& state, const EvaluationFeedback& feedback,
                    const MemoryConfig& config) {
    check_writable(bank);
    GlobalNode& gnode = bank.global_mut(g);
    LocalNode& lnode = bank.local_mut(l);
    if (lnode.parent_global_id != g) {
        throw LookupError("local node '" + l + "' is not a child of global '" + g + "'");
    }
    TransitionEdgeMemory* edge = g_prev ? &bank.edge_mut(*g_prev, g) : nullptr;

    const double before = state.progress.base_runtime_ms;
    const double best_before = state.progress.best_runtime_ms;
    const Outcome outcome = classify_outcome(feedback, before, best_before, config.timing_tolerance);
    const double gain = immediate_log_gain(feedback, before);
    const bool success = feedback.executable() && before > 0.0 && *feedback.runtime_ms < before;

    bump(gnode.runtime, feedback, success, gain, step);
    bump(lnode.runtime, feedback, success, gain, step);

    const BucketKey key = bucket_key(state);
    if (outcome != Outcome::Neutral) {
        EvidenceItem item{task_id,
                          step,
                          outcome,
                          gain,
                          truncate_utf8(evidence_summary(outcome, feedback, before, g, l),
                                        config.summary_max_chars),
                          key};
        auto& list = outcome == Outcome::Improved ? lnode.evidence.positive : lnode.evidence.negative;
        push_capped(list, std::move(item), config.evidence_cap);
    }

    if (edge == nullptr) return;

    TransitionStats delta;
    delta.n = 1;
    delta.imm_gain_sum = gain;
    delta.pos = outcome == Outcome::Improved;
    delta.succ = success;
    delta.comp = feedback.compile;
    delta.corr = feedback.compile && feedback.correct;
    delta.safe = success && state.progress.correctness_failures == 0;
    delta.cfail = !feedback.compile;
    delta.corfail = feedback.compile && !feedback.correct;
    delta.neg = feedback.executable() && outcome == Outcome::Regressed;
    delta.risk_events = feedback.executable() && before > 0.0 && *feedback.runtime_ms > before;
    edge->aggregate += delta;
    edge->buckets[key] += delta;
}

std::vector<double> discounted_future_gains(std::span<const double> log_gains, double gamma) {
    std::vector<double> out(log_gains.size(), 0.0);
    // Backward recursion: F_t = gamma * (g_{t+1} + F_{t+1}).
    double acc = 0.0;
    for (std::size_t i = log_gains.size(); i-- > 0;) {
        out[i] = acc;
        acc = gamma * (log_gains[i] + acc);
    }
    return out;
}

void apply_future_gains(MemoryBank& bank, std::span<const TrajectoryTransition> trajectory,
                        double gamma) {
    check_writable(bank);
    std::vector<double> gains;
    gains.reserve(trajectory.size());
    for (const auto& t : trajectory) gains.push_back(t.log_gain);
    const auto future = discounted_future_gains(gains, gamma);
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const auto& t = trajectory[i];
        if (!t.g_prev) continue;
        auto& edge = bank.edge_mut(*t.g_prev, t.g);
        edge.aggregate.fut_gain_sum += future[i];
        auto it = edge.buckets.find(bucket_key(t.state));
        if (it != edge.buckets.end()) it->second.fut_gain_sum += future[i];
    }
}

}  // namespace htg
