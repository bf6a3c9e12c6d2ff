// htg: command-line front end for the transition-graph memory engine.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "htg/ablation.hpp"
#include "htg/bank_io.hpp"
#include "htg/campaign.hpp"
#include "htg/config.hpp"
#include "htg/cost.hpp"
#include "htg/default_bank.hpp"
#include "htg/errors.hpp"
#include "htg/merge.hpp"
#include "htg/report.hpp"

namespace fs = std::filesystem;
using namespace htg;

namespace {

enum Exit : int {
    kOk = 0,
    kUsage = 1,
    kConfig = 2,
    kTransport = 3,
    kPartial = 4,
    kFilesystem = 5,
    kMergeConflict = 6,
};

struct InitOptions {
    std::string out;
    bool seed_priors = false;
    bool force = false;
};

struct RunOptions {
    std::string tasks, bank, config, out;
    std::optional<int> steps;
    std::optional<double> epsilon, tau, lambda;
    std::optional<std::uint64_t> seed;
    bool freeze_memory = false, no_prefix = false, flat_alpha = false;
    int jobs = 1;
};

struct ReportOptions {
    std::string dir;
    double valid_rho = 2.0;
};

struct MergeOptions {
    std::string base, out;
    std::vector<std::string> forks;
};

struct CostOptions {
    std::int64_t input_tokens = 0, output_tokens = 0;
    double price_in = 0.0, price_out = 0.0;
    std::int64_t tasks = 1;
    double build = 0.0, repair = 0.0;
};

struct AblationOptions {
    int runs = 200, tasks = 20, steps = 6;
    std::uint64_t seed = 1;
};

int cmd_init(const InitOptions& o) {
    if (fs::exists(o.out) && !o.force) {
        std::cerr << "error: '" << o.out << "' already exists (use --force to overwrite)\n";
        return kFilesystem;
    }
    const MemoryBank bank = init_default_bank(o.seed_priors);
    save_bank(bank, o.out);
    std::cout << "wrote " << o.out << ": " << bank.globals().size() << " globals, " << bank.locals().size()
              << " locals, " << bank.edges().size() << " edges\n";
    return kOk;
}

int cmd_run(const RunOptions& o) {
    RunSettings settings = o.config.empty() ? RunSettings{} : load_run_settings(o.config);
    auto& e = settings.engine;
    if (o.steps) e.steps = *o.steps;
    if (o.epsilon) e.policy.epsilon = *o.epsilon;
    if (o.tau) e.policy.tau = *o.tau;
    if (o.lambda) e.scoring.lambda = *o.lambda;
    if (o.seed) e.policy.seed = *o.seed;
    if (o.flat_alpha) e.scoring.lambda = 0.0;
    e.freeze_memory = o.freeze_memory;
    e.no_prefix = o.no_prefix;
    e.validate();

    const auto tasks = load_tasks(o.tasks);
    const MemoryBank base = o.bank.empty() ? init_default_bank() : load_bank(o.bank);
    const auto result = run_campaign(tasks, base, settings, CampaignOptions{o.out, o.jobs});

    double log_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& r : result.records) {
        std::printf("%-32s best %.3fx", r.task_id.c_str(), r.best.speedup);
        if (r.best_generated) {
            ++correct;
            log_sum += std::log(r.best_generated->speedup);
            std::printf("  (best correct candidate %.3fx at step %d)", r.best_generated->speedup, r.best_generated->step);
        } else {
            std::printf("  (no correct candidate)");
        }
        if (r.abort_reason) std::printf("  ABORTED: %s", r.abort_reason->c_str());
        std::printf("\n");
    }
    if (correct > 0) {
        std::printf("GeoM speedup over %zu correct task(s): %.3fx\n", correct,
                    std::exp(log_sum / static_cast<double>(correct)));
    } else {
        std::printf("GeoM speedup: - (no correct task)\n");
    }
    std::printf("logs: %s\n", (fs::path(o.out) / "trajectories").string().c_str());
    if (result.aborted > 0) {
        std::cerr << result.aborted << " task(s) aborted on transport errors\n";
        return kPartial;
    }
    return kOk;
}

int cmd_report(const ReportOptions& o) {
    std::cout << render_report(load_trajectory_dir(o.dir), o.valid_rho);
    return kOk;
}

int cmd_merge(const MergeOptions& o) {
    const MemoryBank base = load_bank(o.base);
    std::vector<MemoryBank> forks;
    for (const auto& f : o.forks) forks.push_back(load_bank(f));
    const MemoryBank merged = merge_banks(base, forks);
    save_bank(merged, o.out);
    std::cout << "merged " << forks.size() << " fork(s): edge observations " << base.edge_observations() << " -> "
              << merged.edge_observations() << "\n";
    return kOk;
}

int cmd_cost(const CostOptions& o) {
    if (o.input_tokens < 0 || o.output_tokens < 0 || o.tasks < 0) throw ConfigError("counts must be non-negative");
    const PriceSheet prices = PriceSheet::from_dollars("", o.price_in, o.price_out);
    const Money per_task = cost_per_task(o.input_tokens, o.output_tokens, prices);
    // Per-task tokens already cover all steps, so the per-step terms fold into one.
    const CostModel model{Money::from_dollars(o.build), o.tasks, 1, per_task, Money{}, Money::from_dollars(o.repair)};
    std::cout << "per task: " << format_dollars(per_task) << "\n";
    std::cout << "campaign (" << o.tasks << " tasks): " << format_dollars(campaign_cost(model), 2) << "\n";
    return kOk;
}

int cmd_ablation(const AblationOptions& o) {
    AblationConfig config;
    config.runs = o.runs;
    config.tasks_per_run = o.tasks;
    config.seed = o.seed;
    config.engine.steps = o.steps;
    const auto result = run_ablation(config);
    std::cout << render_ablation(result);
    const double full = result.variant("full").mean;
    const double flat = result.variant("flat-alpha").mean;
    const double nopre = result.variant("no-prefix").mean;
    const double frozen = result.variant("freeze-memory").mean;
    std::printf("full - flat-alpha = %+.4f\nflat-alpha - no-prefix = %+.4f\nfull - freeze-memory = %+.4f\n",
                full - flat, flat - nopre, full - frozen);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical transition-graph memory engine for multi-step operator optimization"};
    app.require_subcommand(1);

    InitOptions init;
    auto* init_cmd = app.add_subcommand("init-memory", "Write the default memory bank");
    init_cmd->add_option("out", init.out, "Output bank file")->required();
    init_cmd->add_flag("--seed-priors", init.seed_priors, "Add specific priors on common transitions");
    init_cmd->add_flag("--force", init.force, "Overwrite an existing file");

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run the optimization loop over a task spec");
    run_cmd->add_option("--tasks", run.tasks, "Task spec file")->required();
    run_cmd->add_option("--bank", run.bank, "Memory bank to fork (default: built-in bank)");
    run_cmd->add_option("--config", run.config, "Run configuration file");
    run_cmd->add_option("--out", run.out, "Output directory")->required();
    run_cmd->add_option("--steps", run.steps, "Evolution steps per task");
    run_cmd->add_option("--epsilon", run.epsilon, "Exploration mixing weight");
    run_cmd->add_option("--tau", run.tau, "Softmax temperature");
    run_cmd->add_option("--lambda", run.lambda, "Prefix decay rate");
    run_cmd->add_option("--seed", run.seed, "Policy seed");
    run_cmd->add_flag("--freeze-memory", run.freeze_memory, "Do not write outcomes to memory");
    run_cmd->add_flag("--no-prefix", run.no_prefix, "Score with the last direction only");
    run_cmd->add_flag("--flat-alpha", run.flat_alpha, "Uniform prefix weights (lambda = 0)");
    run_cmd->add_option("--jobs", run.jobs, "Concurrent tasks")->check(CLI::PositiveNumber);

    ReportOptions report;
    auto* report_cmd = app.add_subcommand("report", "Summarize trajectory logs");
    report_cmd->add_option("dir", report.dir, "Directory with *.jsonl logs")->required();
    report_cmd->add_option("--valid", report.valid_rho, "Speedup threshold for Valid@rho");

    MergeOptions merge;
    auto* merge_cmd = app.add_subcommand("merge", "Merge forked banks into their base");
    merge_cmd->add_option("--base", merge.base, "Base bank")->required();
    merge_cmd->add_option("--out", merge.out, "Merged bank output")->required();
    merge_cmd->add_option("forks", merge.forks, "Fork banks, merged in order")->required();

    CostOptions cost;
    auto* cost_cmd = app.add_subcommand("cost", "Estimate API cost from token counts");
    cost_cmd->add_option("--input-tokens", cost.input_tokens, "Input tokens per task")->required();
    cost_cmd->add_option("--output-tokens", cost.output_tokens, "Output tokens per task")->required();
    cost_cmd->add_option("--price-in", cost.price_in, "USD per million input tokens")->required();
    cost_cmd->add_option("--price-out", cost.price_out, "USD per million output tokens")->required();
    cost_cmd->add_option("--tasks", cost.tasks, "Number of tasks");
    cost_cmd->add_option("--build", cost.build, "One-off memory build cost in USD");
    cost_cmd->add_option("--repair", cost.repair, "Total repair cost in USD");

    AblationOptions ablation;
    auto* ablation_cmd = app.add_subcommand("ablation", "Compare memory ablations on the simulated environment");
    ablation_cmd->add_option("--runs", ablation.runs, "Seeded campaigns per variant")->check(CLI::PositiveNumber);
    ablation_cmd->add_option("--tasks", ablation.tasks, "Tasks per campaign")->check(CLI::PositiveNumber);
    ablation_cmd->add_option("--steps", ablation.steps, "Steps per task")->check(CLI::PositiveNumber);
    ablation_cmd->add_option("--seed", ablation.seed, "First environment seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*init_cmd) return cmd_init(init);
        if (*run_cmd) return cmd_run(run);
        if (*report_cmd) return cmd_report(report);
        if (*merge_cmd) return cmd_merge(merge);
        if (*cost_cmd) return cmd_cost(cost);
        if (*ablation_cmd) return cmd_ablation(ablation);
    } catch (const MergeConflictError& e) {
        std::cerr << "merge conflict: " << e.what() << "\n";
        return kMergeConflict;
    } catch (const TransportError& e) {
        std::cerr << "transport error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return kTransport;
    } catch (const FilesystemError& e) {
        std::cerr << "filesystem error: " << e.what() << "\n";
        return kFilesystem;
    } catch (const htg::Error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kUsage;
}
