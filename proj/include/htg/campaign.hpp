#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "htg/config.hpp"
#include "htg/engine.hpp"
#include "htg/memory.hpp"

namespace htg {

/// Task spec document: {"tasks": [{task_id, operator_type?, input_shape_summary?,
/// initial_code | initial_code_file, reference_runtime_ms?, global_schedule?}]}.
std::vector<Task> tasks_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
std::vector<Task> load_tasks(const std::filesystem::path& path);

/// Per-task policy seed, independent of task order.
std::uint64_t task_seed(std::uint64_t run_seed, const std::string& task_id);

struct CampaignOptions {
    std::filesystem::path out_dir;
    int jobs = 1;
};

struct CampaignResult {
    std::vector<TrajectoryRecord> records;  // task-spec order
    std::vector<MemoryBank> forks;
    MemoryBank merged;
    std::map<Phase, PhaseTotals> usage;
    std::size_t aborted = 0;
};

/// Runs every task on its own fork of `base` (up to `jobs` at a time) and
/// writes out_dir/trajectories/<task>.jsonl, out_dir/forks/<task>.bank.json
/// and out_dir/bank.merged.json.
CampaignResult run_campaign(const std::vector<Task>& tasks, const MemoryBank& base, const RunSettings& settings,
                            const CampaignOptions& options);

}  // namespace htg
