#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htg/cost.hpp"
#include "htg/trajectory_log.hpp"

namespace htg {

struct CampaignMetrics {
    std::size_t tasks = 0;
    std::size_t correct = 0;
    std::size_t fast1 = 0;
    std::size_t valid = 0;
    double valid_rho = 2.0;
    /// Over correct tasks only; absent when no task is correct.
    std::optional<double> geomean;
    std::optional<double> median;
    std::optional<double> max;

    double correctness_rate() const { return tasks ? static_cast<double>(correct) / static_cast<double>(tasks) : 0.0; }
    double fast1_rate() const { return tasks ? static_cast<double>(fast1) / static_cast<double>(tasks) : 0.0; }
    double valid_rate() const { return tasks ? static_cast<double>(valid) / static_cast<double>(tasks) : 0.0; }
};

/// A task is correct when some generated candidate was correct; its speedup
/// is the best correct generated candidate's.
CampaignMetrics compute_metrics(const std::vector<LoggedTask>& tasks, double valid_rho);

/// Phase costs summed across tasks, each task priced with its own sheet.
std::map<Phase, PhaseCost> campaign_breakdown(const std::vector<LoggedTask>& tasks);

/// Reads every *.jsonl under `dir` (sorted by file name). Throws ConfigError
/// when there are none.
std::vector<LoggedTask> load_trajectory_dir(const std::filesystem::path& dir);

/// Deterministic plain-text report.
std::string render_report(const std::vector<LoggedTask>& tasks, double valid_rho);

}  // namespace htg
