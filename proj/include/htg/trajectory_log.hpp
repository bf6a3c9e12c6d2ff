#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "htg/cost.hpp"
#include "htg/engine.hpp"

namespace htg {

/// Run-level facts written into every log header.
struct RunMeta {
    int steps = 6;
    std::uint64_t seed = 0;
    double epsilon = 0.1;
    double tau = 1.0;
    double lambda = 0.5;
    bool freeze_memory = false;
    bool no_prefix = false;
    PriceSheet prices;
};

nlohmann::json step_to_json(const StepRecord& step);

/// Append-only JSONL writer: one header line, one line per step, then a
/// summary or an abort line. Every line is flushed as written.
class TrajectoryLogWriter {
public:
    /// Throws FilesystemError when the file cannot be created.
    explicit TrajectoryLogWriter(const std::filesystem::path& path);

    void header(const std::string& task_id, double reference_runtime_ms, const RunMeta& meta);
    void step(const StepRecord& step);
    /// Writes the summary line, or the abort line for an aborted record.
    void finish(const TrajectoryRecord& record);

private:
    void line(const nlohmann::json& doc);

    std::filesystem::path path_;
    std::ofstream out_;
};

/// Everything the report needs from one log.
struct LoggedStep {
    int step = 0;
    NodeId global;
    NodeId local;
    bool invalid = false;
    bool repaired = false;
    std::string outcome;
    std::optional<double> runtime_ms;
    std::optional<double> speedup;
    double best_speedup = 1.0;
};

struct LoggedTask {
    std::string task_id;
    double reference_runtime_ms = 0.0;
    RunMeta meta;
    std::vector<LoggedStep> steps;
    std::map<Phase, PhaseTotals> usage;
    std::optional<double> best_generated_speedup;
    double best_speedup = 1.0;
    bool complete = false;
    std::optional<std::string> abort_reason;
};

/// Throws ParseError ("path:line") on malformed lines.
LoggedTask read_trajectory_log(const std::filesystem::path& path);

}  // namespace htg
