#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace htg {

/// Model-call phases, also the keys of the cost breakdown.
enum class Phase { LocalSelection, CodeGeneration, Repair, StateSummarization };
inline constexpr std::size_t kPhaseCount = 4;

const char* to_string(Phase phase) noexcept;
/// Throws ParseError on unknown names.
Phase phase_from_string(std::string_view name);

/// Amount of money in picodollars (1e-12 USD). Token counts times a price in
/// micro-dollars per million tokens land exactly on this unit.
struct Money {
    std::int64_t picodollars = 0;

    static Money from_dollars(double dollars);
    double dollars() const noexcept { return static_cast<double>(picodollars) * 1e-12; }

    Money& operator+=(Money o) noexcept {
        picodollars += o.picodollars;
        return *this;
    }
    friend Money operator+(Money a, Money b) noexcept { return Money{a.picodollars + b.picodollars}; }
    friend Money operator*(std::int64_t k, Money m) noexcept { return Money{k * m.picodollars}; }
    auto operator<=>(const Money&) const = default;
};

/// "$0.214419" style rendering with the given number of decimals.
std::string format_dollars(Money m, int decimals = 6);

struct PriceSheet {
    std::string label;
    /// Micro-dollars per one million tokens.
    std::int64_t input_per_million_micro = 0;
    std::int64_t output_per_million_micro = 0;

    /// Converts dollar prices, rounding to the nearest micro-dollar. Throws
    /// ConfigError on negative prices.
    static PriceSheet from_dollars(std::string label, double input_per_million, double output_per_million);
};

struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    bool operator==(const TokenUsage&) const = default;
};

/// tokens_in * input price + tokens_out * output price.
Money cost_per_task(std::int64_t tokens_in, std::int64_t tokens_out, const PriceSheet& prices);

/// C_total = C_build + N * T * (C_local + C_code) + C_repair.
struct CostModel {
    Money build;
    std::int64_t tasks = 0;
    std::int64_t steps = 0;
    Money local_per_call;
    Money code_per_call;
    Money repair;
};

Money campaign_cost(const CostModel& model);

struct PhaseTotals {
    std::int64_t calls = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    PhaseTotals& operator+=(const PhaseTotals& o) noexcept;
    bool operator==(const PhaseTotals&) const = default;
};

/// Per-phase call and token counters. Safe to share across threads.
class TokenLedger {
public:
    TokenLedger() = default;
    TokenLedger(const TokenLedger&) = delete;
    TokenLedger& operator=(const TokenLedger&) = delete;

    void record(Phase phase, const TokenUsage& usage) noexcept;
    void add(Phase phase, const PhaseTotals& totals) noexcept;
    void merge_from(const TokenLedger& other) noexcept;

    PhaseTotals totals(Phase phase) const noexcept;
    /// Phases with at least one call.
    std::map<Phase, PhaseTotals> snapshot() const;

private:
    struct Counters {
        std::atomic<std::int64_t> calls{0};
        std::atomic<std::int64_t> input_tokens{0};
        std::atomic<std::int64_t> output_tokens{0};
    };
    std::array<Counters, kPhaseCount> counters_{};
};

struct PhaseCost {
    std::int64_t calls = 0;
    Money cost;
    /// Percentage of the ledger total, 0..100.
    double share_percent = 0.0;
};

std::map<Phase, PhaseCost> phase_breakdown(const std::map<Phase, PhaseTotals>& totals,
                                           const PriceSheet& prices);
std::map<Phase, PhaseCost> phase_breakdown(const TokenLedger& ledger, const PriceSheet& prices);

}  // namespace htg
