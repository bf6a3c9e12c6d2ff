#include "htg/simulated.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "htg/default_bank.hpp"
#include "htg/errors.hpp"
#include "htg/local_strategy.hpp"

namespace htg {

namespace {

constexpr std::string_view kApplyTag = "// @apply ";
constexpr std::string_view kGuardedSuffix = " guarded";

}  // namespace

std::string encode_applied(const AppliedAction& a) {
    return std::string(kApplyTag) + a.global + "/" + a.local + (a.guarded ? std::string(kGuardedSuffix) : "");
}

std::vector<AppliedAction> decode_applied(const std::string& source) {
    std::vector<AppliedAction> out;
    std::istringstream in(source);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(kApplyTag, 0) != 0) continue;
        std::string body = line.substr(kApplyTag.size());
        AppliedAction a;
        if (body.size() >= kGuardedSuffix.size() &&
            body.compare(body.size() - kGuardedSuffix.size(), kGuardedSuffix.size(), kGuardedSuffix) == 0) {
            a.guarded = true;
            body.resize(body.size() - kGuardedSuffix.size());
        }
        const auto slash = body.find('/');
        if (slash == std::string::npos) continue;
        a.global = body.substr(0, slash);
        a.local = body.substr(slash + 1);
        out.push_back(std::move(a));
    }
    return out;
}

SimulatedEnvironment::SimulatedEnvironment(SimulatedEnvironmentSpec spec)
    : spec_(std::move(spec)), runtime_ms_(spec_.base_runtime_ms) {
    if (!(runtime_ms_ > 0.0)) throw ConfigError("simulated base runtime must be positive");
}

double SimulatedEnvironment::factor_for(const AppliedAction& action) const {
    auto it = spec_.effects.find(action.local);
    if (it == spec_.effects.end()) return 1.0;
    const SimEffect& e = it->second;
    const auto uses = std::count_if(history_.begin(), history_.end(),
                                    [&](const AppliedAction& h) { return h.local == action.local; });
    if (uses >= e.cap) return 1.0;
    double f = preconditions_met(action) ? e.factor : e.unmet_factor;
    // A guarded (repaired) edit keeps only part of the gain.
    if (action.guarded) f = std::sqrt(f);
    return f;
}

bool SimulatedEnvironment::preconditions_met(const AppliedAction& action) const {
    auto it = spec_.effects.find(action.local);
    if (it == spec_.effects.end()) return true;
    return std::all_of(it->second.requires_globals.begin(), it->second.requires_globals.end(), [&](const NodeId& g) {
        return std::any_of(history_.begin(), history_.end(), [&](const AppliedAction& h) { return h.global == g; });
    });
}

const SimFailureRule* SimulatedEnvironment::failure_for(const AppliedAction& action) const {
    if (auto it = spec_.effects.find(action.local);
        it != spec_.effects.end() && it->second.unmet_fails && !preconditions_met(action)) {
        static const SimFailureRule unmet{"", "", "", false, "missing prerequisite transformation"};
        return &unmet;
    }
    for (const auto& r : spec_.failures) {
        if (std::none_of(history_.begin(), history_.end(),
                         [&](const AppliedAction& h) { return h.global == r.after_global; })) {
            continue;
        }
        if (!r.local.empty() ? r.local != action.local : r.global != action.global) continue;
        if (r.compile_failure && action.guarded) continue;
        return &r;
    }
    return nullptr;
}

void SimulatedEnvironment::apply(const AppliedAction& action) {
    runtime_ms_ *= factor_for(action);
    history_.push_back(action);
}

EvaluationFeedback simulated_step(SimulatedEnvironment& env, const Action& action, bool guarded) {
    const AppliedAction applied{action.global, action.local, guarded};
    EvaluationFeedback fb;
    if (const SimFailureRule* rule = env.failure_for(applied)) {
        fb.compile = !rule->compile_failure;
        fb.correct = false;
        fb.failure_detail = rule->detail;
        return fb;
    }
    env.apply(applied);
    fb.compile = true;
    fb.correct = true;
    fb.runtime_ms = env.runtime_ms();
    return fb;
}

SimulatedEnvironmentSpec default_simulated_spec(double base_runtime_ms) {
    const NodeId ma(global_id::kMemoryAccess), bd(global_id::kBoundary), tp(global_id::kThroughput),
        dr(global_id::kDataReuse), pm(global_id::kParallelMapping);
    SimulatedEnvironmentSpec s;
    s.base_runtime_ms = base_runtime_ms;
    auto add = [&s](const char* local, const NodeId& g, double factor, std::vector<NodeId> req = {},
                    double unmet = 1.0, bool unmet_fails = false) {
        s.effects[local] = SimEffect{g, factor, 1, std::move(req), unmet, unmet_fails};
    };
    // A vectorized main loop without tail handling, and shared-memory tiles
    // without a matching thread mapping, produce wrong results.
    add("l_g_mem_aligned_vec4_main_tail", ma, 0.80, {bd}, 1.0, true);
    add("l_g_mem_ldg_readonly_texture_path", ma, 0.94);
    add("l_g_mem_stride_aware_restructure", ma, 0.86, {pm}, 1.04);
    add("l_g_mem_register_micro_tiling", ma, 0.90, {dr}, 1.05);
    add("l_g_bound_fast_path_predicate", bd, 0.97);
    add("l_g_bound_tail_isolation", bd, 0.95);
    add("l_g_bound_shape_specialized_dispatch", bd, 0.97);
    add("l_g_tput_small_factor_unroll", tp, 0.90, {ma}, 1.01);
    add("l_g_tput_register_accumulation", tp, 0.91, {dr}, 1.03);
    add("l_g_tput_invariant_hoisting", tp, 0.96);
    add("l_g_reuse_shared_memory_tiling", dr, 0.86, {pm}, 1.0, true);
    add("l_g_reuse_staged_reuse", dr, 0.93);
    add("l_g_reuse_light_epilogue_fusion", dr, 0.91);
    add("l_g_par_output_aligned_blocks", pm, 0.92);
    add("l_g_par_warp_lane_remap", pm, 0.95);
    add("l_g_par_thread_coarsening", pm, 0.91, {ma}, 1.03);

    // Conflicts persist once the earlier transformation is in the code.
    s.failures = {
        {tp, dr, "", false, "staging buffer races with the unrolled accumulation"},
        {dr, pm, "", false, "remapped threads read stale shared-memory tiles"},
        {bd, tp, "", true, "unrolled body references the removed boundary guard"},
    };
    return s;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, const std::string& task_id) {
    std::uint64_t h = std::stoull(digest(task_id), nullptr, 16);
    // splitmix64 finalizer over the combination
    std::uint64_t z = seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

SimulatedEnvironmentSpec perturbed_spec(const SimulatedEnvironmentSpec& base, std::uint64_t seed,
                                        const std::string& task_id, double factor_jitter) {
    std::mt19937_64 rng(mix_seed(seed, task_id));
    auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    // Box-Muller from the portable uniform draw.
    auto normal = [&] {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };
    SimulatedEnvironmentSpec s = base;
    s.base_runtime_ms = base.base_runtime_ms * std::exp(0.5 * normal());
    for (auto& [id, e] : s.effects) {
        e.factor = std::exp(std::log(e.factor) * std::exp(factor_jitter * normal()));
        e.unmet_factor = std::exp(std::log(e.unmet_factor) * std::exp(factor_jitter * normal()));
    }
    return s;
}

SimulatedEvaluator::SimulatedEvaluator(SimulatedEnvironmentSpec base, std::uint64_t seed, double factor_jitter)
    : base_(std::move(base)), seed_(seed), jitter_(factor_jitter) {}

void SimulatedEvaluator::set_task_spec(const std::string& task_id, SimulatedEnvironmentSpec spec) {
    overrides_[task_id] = std::move(spec);
}

SimulatedEnvironmentSpec SimulatedEvaluator::spec_for(const std::string& task_id) const {
    if (auto it = overrides_.find(task_id); it != overrides_.end()) return it->second;
    return perturbed_spec(base_, seed_, task_id, jitter_);
}

EvaluationFeedback SimulatedEvaluator::evaluate(const std::string& task_id, const std::string& source) {
    if (source.find_first_not_of(" \t\r\n") == std::string::npos) {
        EvaluationFeedback fb;
        fb.failure_detail = "empty source";
        return fb;
    }
    SimulatedEnvironment env(spec_for(task_id));
    EvaluationFeedback fb;
    fb.compile = fb.correct = true;
    fb.runtime_ms = env.runtime_ms();
    for (const auto& a : decode_applied(source)) {
        fb = simulated_step(env, Action{a.global, a.local, {}}, a.guarded);
        if (!fb.executable()) return fb;
    }
    return fb;
}

std::optional<double> SimulatedEvaluator::reference_runtime_ms(const std::string& task_id, const std::string&) {
    return spec_for(task_id).base_runtime_ms;
}

BackendReply SimulatedBackend::do_complete(const BackendRequest& request) {
    BackendReply reply;
    switch (request.phase) {
        case Phase::LocalSelection: {
            reply.usage = local_usage;
            const auto applied = decode_applied(request.current_code);
            NodeId pick = request.candidate_ids.empty() ? NodeId() : request.candidate_ids.front();
            for (const auto& id : request.candidate_ids) {
                const bool used = std::any_of(applied.begin(), applied.end(),
                                              [&](const AppliedAction& a) { return a.local == id; });
                if (!used) {
                    pick = id;
                    break;
                }
            }
            nlohmann::json body{{"selected_local_node", pick},
                                {"rationale", "first unapplied strategy in rank order"},
                                {"edit_plan", "apply " + pick}};
            reply.text = "```json\n" + body.dump() + "\n```";
            break;
        }
        case Phase::CodeGeneration: {
            reply.usage = code_usage;
            std::string code = request.current_code;
            if (request.action) {
                if (!code.empty() && code.back() != '\n') code += '\n';
                code += encode_applied({request.action->global, request.action->local, false});
            }
            reply.text = "```\n" + code + "\n```";
            break;
        }
        case Phase::Repair: {
            reply.usage = code_usage;
            std::string code = request.current_code;
            // Guard the most recent action line.
            const auto pos = code.rfind(kApplyTag);
            if (pos != std::string::npos) {
                auto end = code.find('\n', pos);
                if (end == std::string::npos) end = code.size();
                if (code.compare(end - kGuardedSuffix.size(), kGuardedSuffix.size(), kGuardedSuffix) != 0) {
                    code.insert(end, kGuardedSuffix);
                }
            }
            reply.text = "```\n" + code + "\n```";
            break;
        }
        case Phase::StateSummarization:
            reply.text = "";
            break;
    }
    return reply;
}

}  // namespace htg
