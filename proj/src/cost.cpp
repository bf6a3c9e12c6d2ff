#include "htg/cost.hpp"

#include <cmath>
#include <cstdio>

#include "htg/errors.hpp"

namespace htg {

const char* to_string(Phase phase) noexcept {
    switch (phase) {
        case Phase::LocalSelection: return "local_selection";
        case Phase::CodeGeneration: return "code_generation";
        case Phase::Repair: return "repair";
        case Phase::StateSummarization: return "state_summarization";
    }
    return "local_selection";
}

Phase phase_from_string(std::string_view name) {
    for (auto p : {Phase::LocalSelection, Phase::CodeGeneration, Phase::Repair, Phase::StateSummarization}) {
        if (name == to_string(p)) return p;
    }
    throw ParseError("", "unknown phase '" + std::string(name) + "'");
}

Money Money::from_dollars(double dollars) {
    return Money{static_cast<std::int64_t>(std::llround(dollars * 1e12))};
}

std::string format_dollars(Money m, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "$%.*f", decimals, m.dollars());
    return buf;
}

PriceSheet PriceSheet::from_dollars(std::string label, double input_per_million, double output_per_million) {
    if (!(input_per_million >= 0.0) || !(output_per_million >= 0.0) || !std::isfinite(input_per_million) ||
        !std::isfinite(output_per_million)) {
        throw ConfigError("prices must be finite and non-negative");
    }
    return PriceSheet{std::move(label), std::llround(input_per_million * 1e6),
                      std::llround(output_per_million * 1e6)};
}

Money cost_per_task(std::int64_t tokens_in, std::int64_t tokens_out, const PriceSheet& prices) {
    return Money{tokens_in * prices.input_per_million_micro + tokens_out * prices.output_per_million_micro};
}

Money campaign_cost(const CostModel& m) {
    return m.build + (m.tasks * m.steps) * (m.local_per_call + m.code_per_call) + m.repair;
}

PhaseTotals& PhaseTotals::operator+=(const PhaseTotals& o) noexcept {
    calls += o.calls;
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
}

void TokenLedger::record(Phase phase, const TokenUsage& usage) noexcept {
    add(phase, PhaseTotals{1, usage.input_tokens, usage.output_tokens});
}

void TokenLedger::add(Phase phase, const PhaseTotals& t) noexcept {
    auto& c = counters_[static_cast<std::size_t>(phase)];
    c.calls.fetch_add(t.calls, std::memory_order_relaxed);
    c.input_tokens.fetch_add(t.input_tokens, std::memory_order_relaxed);
    c.output_tokens.fetch_add(t.output_tokens, std::memory_order_relaxed);
}

void TokenLedger::merge_from(const TokenLedger& other) noexcept {
    for (std::size_t i = 0; i < kPhaseCount; ++i) add(static_cast<Phase>(i), other.totals(static_cast<Phase>(i)));
}

PhaseTotals TokenLedger::totals(Phase phase) const noexcept {
    const auto& c = counters_[static_cast<std::size_t>(phase)];
    return PhaseTotals{c.calls.load(std::memory_order_relaxed), c.input_tokens.load(std::memory_order_relaxed),
                       c.output_tokens.load(std::memory_order_relaxed)};
}

std::map<Phase, PhaseTotals> TokenLedger::snapshot() const {
    std::map<Phase, PhaseTotals> out;
    for (std::size_t i = 0; i < kPhaseCount; ++i) {
        const auto t = totals(static_cast<Phase>(i));
        if (t.calls > 0) out[static_cast<Phase>(i)] = t;
    }
    return out;
}

std::map<Phase, PhaseCost> phase_breakdown(const std::map<Phase, PhaseTotals>& totals,
                                           const PriceSheet& prices) {
    std::map<Phase, PhaseCost> out;
    Money total;
    for (const auto& [phase, t] : totals) {
        const Money cost = cost_per_task(t.input_tokens, t.output_tokens, prices);
        out[phase] = PhaseCost{t.calls, cost, 0.0};
        total += cost;
    }
    for (auto& [phase, pc] : out) {
        pc.share_percent = total.picodollars > 0
                               ? 100.0 * static_cast<double>(pc.cost.picodollars) /
                                     static_cast<double>(total.picodollars)
                               : 100.0 / static_cast<double>(out.size());
    }
    return out;
}

std::map<Phase, PhaseCost> phase_breakdown(const TokenLedger& ledger, const PriceSheet& prices) {
    return phase_breakdown(ledger.snapshot(), prices);
}

}  // namespace htg
