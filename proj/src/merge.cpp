#include "htg/merge.hpp"

#include <algorithm>
#include <set>

#include "htg/errors.hpp"

namespace htg {

namespace {

template <typename Map>
std::set<std::string> key_names(const Map& m) {
    std::set<std::string> out;
    for (const auto& [k, _] : m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, EdgeKey>) {
            out.insert(k.first + "->" + k.second);
        } else {
            out.insert(k);
        }
    }
    return out;
}

void diff_into(const std::set<std::string>& a, const std::set<std::string>& b, std::vector<std::string>& out) {
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
}

void check_topology(const MemoryBank& base, const MemoryBank& fork) {
    if (base.meta().schema_version != fork.meta().schema_version) {
        throw MergeConflictError({}, "schema_version differs: '" + base.meta().schema_version + "' vs '" +
                                         fork.meta().schema_version + "'");
    }
    std::vector<std::string> ids;
    diff_into(key_names(base.globals()), key_names(fork.globals()), ids);
    diff_into(key_names(base.locals()), key_names(fork.locals()), ids);
    diff_into(key_names(base.edges()), key_names(fork.edges()), ids);
    for (const auto& [id, l] : base.locals()) {
        auto it = fork.locals().find(id);
        if (it != fork.locals().end() && it->second.parent_global_id != l.parent_global_id) ids.push_back(id);
    }
    if (!ids.empty()) {
        std::string list;
        for (const auto& id : ids) list += (list.empty() ? "" : ", ") + id;
        throw MergeConflictError(ids, "bank topology differs: " + list);
    }
}

[[noreturn]] void not_descendant(const std::string& id) {
    throw MergeConflictError({id}, "fork has fewer observations than the base at '" + id +
                                       "'; it was not forked from this base");
}

NodeStats delta(const NodeStats& fork, const NodeStats& base, const std::string& id) {
    NodeStats d;
    d.attempts = fork.attempts - base.attempts;
    d.successes = fork.successes - base.successes;
    d.compile_passes = fork.compile_passes - base.compile_passes;
    d.correct_passes = fork.correct_passes - base.correct_passes;
    d.gain_count = fork.gain_count - base.gain_count;
    d.gain_log_sum = fork.gain_log_sum - base.gain_log_sum;
    d.last_touched_step = fork.last_touched_step;
    for (auto v : {d.attempts, d.successes, d.compile_passes, d.correct_passes, d.gain_count}) {
        if (v < 0) not_descendant(id);
    }
    return d;
}

void add_node(NodeStats& into, const NodeStats& d) {
    into.attempts += d.attempts;
    into.successes += d.successes;
    into.compile_passes += d.compile_passes;
    into.correct_passes += d.correct_passes;
    into.gain_count += d.gain_count;
    into.gain_log_sum += d.gain_log_sum;
    if (d.attempts > 0) into.last_touched_step = std::max(into.last_touched_step, d.last_touched_step);
}

TransitionStats delta(const TransitionStats& fork, const TransitionStats& base, const std::string& id) {
    TransitionStats d;
    d.n = fork.n - base.n;
    d.imm_gain_sum = fork.imm_gain_sum - base.imm_gain_sum;
    d.fut_gain_sum = fork.fut_gain_sum - base.fut_gain_sum;
    d.pos = fork.pos - base.pos;
    d.succ = fork.succ - base.succ;
    d.comp = fork.comp - base.comp;
    d.corr = fork.corr - base.corr;
    d.safe = fork.safe - base.safe;
    d.cfail = fork.cfail - base.cfail;
    d.corfail = fork.corfail - base.corfail;
    d.neg = fork.neg - base.neg;
    d.risk_events = fork.risk_events - base.risk_events;
    for (auto v : {d.n, d.pos, d.succ, d.comp, d.corr, d.safe, d.cfail, d.corfail, d.neg, d.risk_events}) {
        if (v < 0) not_descendant(id);
    }
    return d;
}

// Items the fork appended after its copy of the base list, found as the
// suffix following the longest fork-prefix that equals a base-suffix.
std::vector<EvidenceItem> new_items(const std::deque<EvidenceItem>& base, const std::deque<EvidenceItem>& fork) {
    const std::size_t max_k = std::min(base.size(), fork.size());
    std::size_t overlap = 0;
    for (std::size_t k = max_k; k > 0; --k) {
        if (std::equal(fork.begin(), fork.begin() + static_cast<std::ptrdiff_t>(k),
                       base.end() - static_cast<std::ptrdiff_t>(k))) {
            overlap = k;
            break;
        }
    }
    return {fork.begin() + static_cast<std::ptrdiff_t>(overlap), fork.end()};
}

void append_capped(std::deque<EvidenceItem>& list, const std::vector<EvidenceItem>& items, std::size_t cap) {
    for (const auto& e : items) list.push_back(e);
    while (list.size() > cap) list.pop_front();
}

}  // namespace

MemoryBank merge_banks(const MemoryBank& base, const std::vector<MemoryBank>& forks, const MemoryConfig& config) {
    for (const auto& f : forks) check_topology(base, f);
    MemoryBank result = base;
    for (const auto& fork : forks) {
        for (const auto& [id, g] : fork.globals()) {
            add_node(result.global_mut(id).runtime, delta(g.runtime, base.global(id).runtime, id));
        }
        for (const auto& [id, l] : fork.locals()) {
            const LocalNode& b = base.local(id);
            LocalNode& r = result.local_mut(id);
            add_node(r.runtime, delta(l.runtime, b.runtime, id));
            append_capped(r.evidence.positive, new_items(b.evidence.positive, l.evidence.positive), config.evidence_cap);
            append_capped(r.evidence.negative, new_items(b.evidence.negative, l.evidence.negative), config.evidence_cap);
        }
        for (const auto& [key, e] : fork.edges()) {
            const std::string id = key.first + "->" + key.second;
            const TransitionEdgeMemory& b = base.edge(key.first, key.second);
            TransitionEdgeMemory& r = result.edge_mut(key.first, key.second);
            r.aggregate += delta(e.aggregate, b.aggregate, id);
            for (const auto& [bk, stats] : e.buckets) {
                auto it = b.buckets.find(bk);
                const TransitionStats zero;
                const TransitionStats d = delta(stats, it == b.buckets.end() ? zero : it->second, id);
                if (d.n > 0 || r.buckets.contains(bk)) r.buckets[bk] += d;
            }
        }
    }
    return result;
}

}  // namespace htg
