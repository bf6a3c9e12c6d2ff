#pragma once

#include <string_view>

#include "htg/memory.hpp"

namespace htg {

namespace global_id {
inline constexpr std::string_view kMemoryAccess = "g_memory_access_optimization";
inline constexpr std::string_view kBoundary = "g_boundary_simplification";
inline constexpr std::string_view kThroughput = "g_throughput_optimization";
inline constexpr std::string_view kDataReuse = "g_data_reuse_locality";
inline constexpr std::string_view kParallelMapping = "g_parallel_mapping";
}  // namespace global_id

/// The shipped bank: five global intents, their strategy cards and all 25
/// directed edges with empty statistics. Every edge gets a generic prior;
/// with `seed_priors` the common transitions get specific rationale text.
/// The returned bank is read-only; use fork_writable before a run.
MemoryBank init_default_bank(bool seed_priors = false);

}  // namespace htg
