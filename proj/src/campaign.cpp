#include "htg/campaign.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "htg/bank_io.hpp"
#include "htg/errors.hpp"
#include "htg/json_read.hpp"
#include "htg/merge.hpp"
#include "htg/trajectory_log.hpp"

namespace htg {

namespace {

bool safe_file_stem(const std::string& id) {
    if (id.empty() || id == "." || id == "..") return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

}  // namespace

std::vector<Task> tasks_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    const Field list = Field(doc)["tasks"];
    std::vector<Task> tasks;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const Field f = list[i];
        Task t;
        t.task_id = f["task_id"].as_string();
        if (!safe_file_stem(t.task_id)) {
            throw ParseError(f["task_id"].display_path(), "task_id may only contain letters, digits, '_', '-', '.'");
        }
        if (!ids.insert(t.task_id).second) throw ParseError(f.display_path(), "duplicate task_id '" + t.task_id + "'");
        if (f.has("operator_type")) t.operator_type = f["operator_type"].as_string();
        if (f.has("input_shape_summary")) t.input_shape_summary = f["input_shape_summary"].as_string();
        if (f.has("initial_code")) {
            t.initial_code = f["initial_code"].as_string();
        } else {
            const std::filesystem::path p(f["initial_code_file"].as_string());
            t.initial_code = read_text_file(p.is_absolute() ? p : base_dir / p);
        }
        if (f.has("reference_runtime_ms")) {
            t.reference_runtime_ms = f["reference_runtime_ms"].as_double();
            if (!(*t.reference_runtime_ms > 0.0)) {
                throw ParseError(f["reference_runtime_ms"].display_path(), "must be positive");
            }
        }
        if (f.has("global_schedule")) t.global_schedule = f["global_schedule"].as_strings();
        tasks.push_back(std::move(t));
    }
    return tasks;
}

std::vector<Task> load_tasks(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    try {
        return tasks_from_json(parse_json_document(text, path.string()), path.parent_path());
    } catch (const ParseError& err) {
        if (err.location().rfind(path.string(), 0) == 0) throw;
        throw ParseError(path.string() + ":" + err.location(), err.message());
    }
}

std::uint64_t task_seed(std::uint64_t run_seed, const std::string& task_id) {
    std::uint64_t z = run_seed ^ std::stoull(digest(task_id), nullptr, 16);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

CampaignResult run_campaign(const std::vector<Task>& tasks, const MemoryBank& base, const RunSettings& settings,
                            const CampaignOptions& options) {
    namespace fs = std::filesystem;
    const fs::path traj_dir = options.out_dir / "trajectories";
    const fs::path fork_dir = options.out_dir / "forks";
    std::error_code ec;
    fs::create_directories(traj_dir, ec);
    if (!ec) fs::create_directories(fork_dir, ec);
    if (ec) throw FilesystemError("cannot create output directory '" + options.out_dir.string() + "': " + ec.message());

    // Build adapters up front so configuration errors stop the run before any task.
    (void)make_backend(settings);
    (void)make_evaluator(settings);

    CampaignResult result;
    result.records.resize(tasks.size());
    result.forks.resize(tasks.size());
    TokenLedger ledger;
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                const Task& task = tasks[i];
                auto backend = make_backend(settings);
                auto evaluator = make_evaluator(settings);
                backend->attach_ledger(&ledger);
                EngineConfig config = settings.engine;
                config.policy.seed = task_seed(settings.engine.policy.seed, task.task_id);

                MemoryBank fork = fork_writable(base);
                RunMeta meta{config.steps,
                             config.policy.seed,
                             config.policy.epsilon,
                             config.policy.tau,
                             config.scoring.lambda,
                             config.freeze_memory,
                             config.no_prefix,
                             settings.prices};
                TrajectoryLogWriter log(traj_dir / (task.task_id + ".jsonl"));
                bool header_written = false;
                auto observer = [&](const TrajectoryRecord& rec, const StepRecord& step) {
                    if (!header_written) {
                        log.header(rec.task_id, rec.reference_runtime_ms, meta);
                        header_written = true;
                    }
                    log.step(step);
                };
                TrajectoryRecord rec = run_task(task, fork, *backend, *evaluator, config, observer);
                if (!header_written) log.header(rec.task_id, rec.reference_runtime_ms, meta);
                log.finish(rec);
                save_bank(fork, fork_dir / (task.task_id + ".bank.json"));
                result.records[i] = std::move(rec);
                result.forks[i] = std::move(fork);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(tasks.size());
                return;
            }
        }
    };

    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(std::max<std::size_t>(1, tasks.size()))));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    for (const auto& r : result.records) result.aborted += r.abort_reason.has_value();
    result.merged = merge_banks(base, result.forks, settings.engine.memory);
    save_bank(result.merged, options.out_dir / "bank.merged.json");
    result.usage = ledger.snapshot();
    return result;
}

}  // namespace htg
