#pragma once

#include <vector>

#include "htg/memory.hpp"

namespace htg {

/// result = base + sum over forks of (fork - base). Counters add, evidence
/// gained by each fork is appended in fork order and re-capped. Throws
/// MergeConflictError when node/edge topology or schema differs, or a fork
/// has fewer observations than the base.
MemoryBank merge_banks(const MemoryBank& base, const std::vector<MemoryBank>& forks,
                       const MemoryConfig& config = {});

}  // namespace htg
