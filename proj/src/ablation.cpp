#include "htg/ablation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "htg/campaign.hpp"
#include "htg/default_bank.hpp"
#include "htg/errors.hpp"

namespace htg {

std::vector<AblationVariant> default_ablation_variants() {
    return {{"full", false, false, false},
            {"flat-alpha", true, false, false},
            {"no-prefix", false, true, false},
            {"freeze-memory", false, false, true}};
}

const VariantResult& AblationResult::variant(const std::string& name) const {
    for (const auto& v : variants) {
        if (v.name == name) return v;
    }
    throw LookupError("no ablation variant '" + name + "'");
}

namespace {

// Reference implementation every simulated task starts from.
constexpr const char* kSimulatedSeedCode =
    "__global__ void op_kernel(const float* x, float* y, int n) {\n"
    "  int i = blockIdx.x * blockDim.x + threadIdx.x;\n"
    "  if (i < n) y[i] = x[i];\n"
    "}\n";

double run_one(const AblationConfig& config, const AblationVariant& variant, int run) {
    const std::uint64_t env_seed = config.seed + static_cast<std::uint64_t>(run);
    SimulatedEvaluator evaluator(config.environment, env_seed, config.factor_jitter);
    SimulatedBackend backend;
    EngineConfig engine = config.engine;
    engine.freeze_memory = variant.freeze_memory;
    engine.no_prefix = variant.no_prefix;
    if (variant.flat_alpha) engine.scoring.lambda = 0.0;

    // Carrying one writable bank through the campaign is the single-fork case
    // of fork -> run -> merge.
    MemoryBank bank = fork_writable(init_default_bank());
    double sum = 0.0;
    for (int i = 0; i < config.tasks_per_run; ++i) {
        Task task;
        task.task_id = "sim_" + std::to_string(run) + "_" + std::to_string(i);
        task.operator_type = "elementwise";
        task.initial_code = kSimulatedSeedCode;
        engine.policy.seed = task_seed(env_seed, task.task_id);
        const auto rec = run_task(task, bank, backend, evaluator, engine);
        sum += rec.best.speedup;
    }
    return sum / static_cast<double>(config.tasks_per_run);
}

}  // namespace

AblationResult run_ablation(const AblationConfig& config, const std::vector<AblationVariant>& variants) {
    if (config.runs < 1 || config.tasks_per_run < 1) throw ConfigError("ablation needs runs >= 1 and tasks >= 1");
    AblationResult result;
    for (const auto& v : variants) {
        VariantResult vr;
        vr.name = v.name;
        for (int r = 0; r < config.runs; ++r) vr.per_run.push_back(run_one(config, v, r));
        double sum = 0.0;
        for (double x : vr.per_run) sum += x;
        vr.mean = sum / static_cast<double>(vr.per_run.size());
        double ss = 0.0;
        for (double x : vr.per_run) ss += (x - vr.mean) * (x - vr.mean);
        if (vr.per_run.size() > 1) {
            vr.stderr_mean = std::sqrt(ss / static_cast<double>(vr.per_run.size() - 1) /
                                       static_cast<double>(vr.per_run.size()));
        }
        result.variants.push_back(std::move(vr));
    }
    return result;
}

std::string render_ablation(const AblationResult& result) {
    std::ostringstream o;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %6s %12s %10s\n", "variant", "runs", "mean best", "std err");
    o << buf;
    for (const auto& v : result.variants) {
        std::snprintf(buf, sizeof buf, "%-16s %6zu %11.4fx %10.4f\n", v.name.c_str(), v.per_run.size(), v.mean,
                      v.stderr_mean);
        o << buf;
    }
    return o.str();
}

}  // namespace htg
