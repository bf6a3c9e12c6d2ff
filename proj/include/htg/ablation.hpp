#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htg/engine.hpp"
#include "htg/simulated.hpp"

namespace htg {

struct AblationConfig {
    int runs = 200;
    int tasks_per_run = 20;
    std::uint64_t seed = 1;
    EngineConfig engine;
    SimulatedEnvironmentSpec environment = default_simulated_spec();
    double factor_jitter = 0.25;
};

struct AblationVariant {
    std::string name;
    bool flat_alpha = false;
    bool no_prefix = false;
    bool freeze_memory = false;
};

/// full, flat-alpha, no-prefix, freeze-memory.
std::vector<AblationVariant> default_ablation_variants();

struct VariantResult {
    std::string name;
    /// Mean over a run's tasks of the best speedup, one entry per run.
    std::vector<double> per_run;
    double mean = 0.0;
    double stderr_mean = 0.0;
};

struct AblationResult {
    std::vector<VariantResult> variants;

    const VariantResult& variant(const std::string& name) const;
};

/// Each run is a campaign of sequential simulated tasks on one bank that
/// carries memory from task to task. Variants share environments and policy
/// seeds run by run.
AblationResult run_ablation(const AblationConfig& config,
                            const std::vector<AblationVariant>& variants = default_ablation_variants());

std::string render_ablation(const AblationResult& result);

}  // namespace htg
