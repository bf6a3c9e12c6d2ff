#include "htg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "htg/errors.hpp"

namespace htg {

CampaignMetrics compute_metrics(const std::vector<LoggedTask>& tasks, double valid_rho) {
    CampaignMetrics m;
    m.tasks = tasks.size();
    m.valid_rho = valid_rho;
    std::vector<double> speedups;
    for (const auto& t : tasks) {
        if (!t.best_generated_speedup) continue;
        const double s = *t.best_generated_speedup;
        ++m.correct;
        if (s > 1.0) ++m.fast1;
        if (s >= valid_rho) ++m.valid;
        speedups.push_back(s);
    }
    if (!speedups.empty()) {
        double log_sum = 0.0;
        for (double s : speedups) log_sum += std::log(s);
        m.geomean = std::exp(log_sum / static_cast<double>(speedups.size()));
        std::sort(speedups.begin(), speedups.end());
        const auto n = speedups.size();
        m.median = n % 2 ? speedups[n / 2] : 0.5 * (speedups[n / 2 - 1] + speedups[n / 2]);
        m.max = speedups.back();
    }
    return m;
}

std::map<Phase, PhaseCost> campaign_breakdown(const std::vector<LoggedTask>& tasks) {
    std::map<Phase, PhaseCost> out;
    Money total;
    for (const auto& t : tasks) {
        for (const auto& [phase, totals] : t.usage) {
            auto& pc = out[phase];
            pc.calls += totals.calls;
            const Money c = cost_per_task(totals.input_tokens, totals.output_tokens, t.meta.prices);
            pc.cost += c;
            total += c;
        }
    }
    for (auto& [phase, pc] : out) {
        pc.share_percent = total.picodollars > 0 ? 100.0 * static_cast<double>(pc.cost.picodollars) /
                                                       static_cast<double>(total.picodollars)
                                                 : 100.0 / static_cast<double>(out.size());
    }
    return out;
}

std::vector<LoggedTask> load_trajectory_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw FilesystemError("trajectory directory '" + dir.string() + "' does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    if (files.empty()) throw ConfigError("no trajectory logs (*.jsonl) under '" + dir.string() + "'");
    std::sort(files.begin(), files.end());
    std::vector<LoggedTask> tasks;
    for (const auto& f : files) tasks.push_back(read_trajectory_log(f));
    return tasks;
}

namespace {

std::string pct(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * rate);
    return buf;
}

std::string num(const std::optional<double>& v, const char* spec = "%.3fx") {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, spec, *v);
    return buf;
}

}  // namespace

std::string render_report(const std::vector<LoggedTask>& tasks, double valid_rho) {
    const auto m = compute_metrics(tasks, valid_rho);
    std::ostringstream o;
    char buf[256];
    o << "Tasks: " << m.tasks << "\n";
    o << "Correctness: " << pct(m.correctness_rate()) << " (" << m.correct << "/" << m.tasks << ")\n";
    o << "Fast@1: " << pct(m.fast1_rate()) << " (" << m.fast1 << "/" << m.tasks << ")\n";
    std::snprintf(buf, sizeof buf, "Valid@%.2f: ", valid_rho);
    o << buf << pct(m.valid_rate()) << " (" << m.valid << "/" << m.tasks << ")\n";
    o << "GeoM speedup*: " << num(m.geomean) << "\n";
    o << "Median speedup*: " << num(m.median) << "\n";
    o << "Max speedup*: " << num(m.max) << "\n";
    o << "* over correct tasks only; tasks without a correct candidate are excluded from GeoM/median/max "
         "but count in every rate denominator.\n";

    const auto breakdown = campaign_breakdown(tasks);
    o << "\nCost by phase\n";
    if (breakdown.empty()) {
        o << "  (no model calls recorded)\n";
    } else {
        std::snprintf(buf, sizeof buf, "  %-20s %6s %12s %7s\n", "phase", "calls", "cost", "share");
        o << buf;
        Money total;
        std::int64_t calls = 0;
        for (const auto& [phase, pc] : breakdown) {
            std::snprintf(buf, sizeof buf, "  %-20s %6lld %12s %6.1f%%\n", to_string(phase),
                          static_cast<long long>(pc.calls), format_dollars(pc.cost).c_str(), pc.share_percent);
            o << buf;
            total += pc.cost;
            calls += pc.calls;
        }
        std::snprintf(buf, sizeof buf, "  %-20s %6lld %12s %6.1f%%\n", "total", static_cast<long long>(calls),
                      format_dollars(total).c_str(), 100.0);
        o << buf;
    }

    for (const auto& t : tasks) {
        o << "\nTask " << t.task_id;
        std::snprintf(buf, sizeof buf, " (reference %.4g ms)", t.reference_runtime_ms);
        o << buf;
        if (t.abort_reason) o << " [aborted: " << *t.abort_reason << "]";
        o << "\n";
        std::snprintf(buf, sizeof buf, "  %4s  %-30s  %-36s  %-12s  %10s  %8s  %8s\n", "step", "global", "local",
                      "outcome", "runtime", "speedup", "best");
        o << buf;
        std::snprintf(buf, sizeof buf, "  %4d  %-30s  %-36s  %-12s  %10s  %8s  %8s\n", 0, "(reference)", "-", "-",
                      num(t.reference_runtime_ms, "%.4g ms").c_str(), "1.000x", "1.000x");
        o << buf;
        for (const auto& s : t.steps) {
            std::string outcome = s.invalid ? "invalid" : s.outcome;
            if (s.repaired) outcome += "+r";
            std::snprintf(buf, sizeof buf, "  %4d  %-30s  %-36s  %-12s  %10s  %8s  %8s\n", s.step, s.global.c_str(),
                          s.invalid ? "-" : s.local.c_str(), outcome.c_str(), num(s.runtime_ms, "%.4g ms").c_str(),
                          num(s.speedup).c_str(), num(s.best_speedup).c_str());
            o << buf;
        }
        o << "  best correct candidate: " << num(t.best_generated_speedup) << "\n";
    }
    return o.str();
}

}  // namespace htg
