#include "htg/engine.hpp"

#include <cmath>

#include "htg/errors.hpp"

namespace htg {

void EngineConfig::validate() const {
    if (steps < 1) throw ConfigError("steps must be >= 1");
    policy.validate();
    scoring.weights.validate();
    if (!(scoring.lambda >= 0.0) || !std::isfinite(scoring.lambda)) throw ConfigError("lambda must be finite and >= 0");
    if (scoring.n_min < 1) throw ConfigError("n_min must be >= 1");
    if (!(memory.gamma >= 0.0 && memory.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (!(memory.timing_tolerance >= 0.0)) throw ConfigError("timing_tolerance must be >= 0");
    if (memory.evidence_cap < 1) throw ConfigError("evidence cap must be >= 1");
    if (state.stagnation_steps < 1) throw ConfigError("stagnation_steps must be >= 1");
}

namespace {

std::string bullet_list(const std::vector<std::string>& items) {
    if (items.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += "\n";
        out += "- " + items[i];
    }
    return out;
}

}  // namespace

std::string generation_request(const CandidateImplementation& code, const DecisionState& state,
                               const Action& action, const LocalNode& local_memory, std::size_t k,
                               const PromptTemplates& templates) {
    const auto evidence = matching_evidence(local_memory, bucket_key(state), k);
    return render_template(templates.code_generation,
                           {{"state", render_state_block(state)},
                            {"global_id", action.global},
                            {"local_id", action.local},
                            {"edit_plan", action.edit_plan.empty() ? "-" : action.edit_plan},
                            {"recipe", local_memory.prior.edit_recipe},
                            {"checklist", bullet_list(local_memory.prior.verification_checklist)},
                            {"evidence", render_evidence(evidence)},
                            {"code", code.source}});
}

std::string repair_request(const std::string& failed_code, const Action& action, const std::string& failure,
                           const PromptTemplates& templates) {
    return render_template(templates.repair, {{"global_id", action.global},
                                              {"local_id", action.local},
                                              {"edit_plan", action.edit_plan.empty() ? "-" : action.edit_plan},
                                              {"failure", failure.empty() ? "(no detail)" : failure},
                                              {"code", failed_code}});
}

namespace {

void add_usage(TokenUsage& into, const TokenUsage& u) {
    into.input_tokens += u.input_tokens;
    into.output_tokens += u.output_tokens;
}

EvaluationFeedback evaluate_code(Evaluator& evaluator, const std::string& task_id, const std::string& code) {
    if (code.empty()) {
        EvaluationFeedback fb;
        fb.failure_detail = "backend returned no code";
        return fb;
    }
    return evaluator.evaluate(task_id, code);
}

}  // namespace

TrajectoryRecord run_task(const Task& task, MemoryBank& bank, Backend& backend, Evaluator& evaluator,
                          const EngineConfig& config, const StepObserver& observer) {
    config.validate();
    if (!config.freeze_memory && !bank.writable()) {
        throw WriteProtectedError("run_task needs a writable fork of the memory bank");
    }
    for (const auto& g : task.global_schedule) {
        if (!bank.globals().contains(g)) {
            throw ConfigError("task '" + task.task_id + "' schedules unknown global '" + g + "'");
        }
    }

    TrajectoryRecord rec;
    rec.task_id = task.task_id;
    const bool write_memory = !config.freeze_memory;
    std::vector<TrajectoryTransition> transitions;

    try {
        std::optional<double> reference = task.reference_runtime_ms;
        if (!reference) reference = evaluator.reference_runtime_ms(task.task_id, task.initial_code);
        if (!reference || !(*reference > 0.0)) {
            throw ConfigError("task '" + task.task_id + "' has no positive reference runtime");
        }
        rec.reference_runtime_ms = *reference;

        const TaskContext ctx{task.task_id, task.operator_type, task.input_shape_summary, *reference};
        CandidateImplementation current{task.initial_code, 0, ""};
        DecisionState state = initial_state(ctx, current, config.state);
        rec.best = BestRecord{0, 1.0, *reference, digest(task.initial_code)};
        rec.best_source = task.initial_code;

        std::vector<NodeId> prefix;
        PolicyRng rng(config.policy.seed);
        const LocalStrategyConfig local_config{config.evidence_k, config.templates};

        for (int t = 1; t <= config.steps; ++t) {
            StepRecord sr;
            sr.step = t;
            sr.state = state;

            std::vector<NodeId> scoring_prefix = prefix;
            if (config.no_prefix && scoring_prefix.size() > 1) scoring_prefix = {prefix.back()};
            const auto scores = score_all_globals(scoring_prefix, state, bank, config.scoring);
            sr.distribution = global_distribution(scores, config.policy);
            // The draw is always taken so forced steps keep the stream aligned.
            const NodeId sampled = sample_global(sr.distribution, rng);
            const auto idx = static_cast<std::size_t>(t - 1);
            sr.forced_global = idx < task.global_schedule.size();
            const NodeId g = sr.forced_global ? task.global_schedule[idx] : sampled;
            sr.global = g;
            const std::optional<NodeId> g_prev =
                prefix.empty() ? std::nullopt : std::optional<NodeId>(prefix.back());

            LocalSelectionResult selection;
            try {
                selection = select_local(state, current, g, bank, backend, local_config);
            } catch (const InvalidStepError&) {
                sr.invalid = true;
                transitions.push_back({std::nullopt, g, state, 0.0});
                prefix.push_back(g);
                state = summarize_state(state, current, Action{g, "", ""}, std::nullopt, config.state);
                sr.best_speedup = rec.best.speedup;
                rec.steps.push_back(std::move(sr));
                if (observer) observer(rec, rec.steps.back());
                continue;
            }
            sr.usage.local_selection_calls = 1;
            add_usage(sr.usage.local_selection, selection.reply.usage);
            sr.truncated = selection.reply.truncated;
            const Action action = selection.action;
            sr.local = action.local;
            sr.edit_plan = action.edit_plan;
            sr.local_fallback = selection.fallback;

            BackendRequest gen;
            gen.phase = Phase::CodeGeneration;
            gen.step = t;
            gen.task_id = task.task_id;
            gen.prompt = generation_request(current, state, action, bank.local(action.local), config.evidence_k,
                                            config.templates);
            gen.current_code = current.source;
            gen.action = action;
            const BackendReply gen_reply = backend.complete(gen);
            sr.usage.code_generation_calls = 1;
            add_usage(sr.usage.code_generation, gen_reply.usage);
            sr.truncated = sr.truncated || gen_reply.truncated;

            CandidateImplementation candidate{extract_code(gen_reply.text), t, digest(current.source)};
            EvaluationFeedback fb = evaluate_code(evaluator, task.task_id, candidate.source);

            if (config.repair && !fb.compile) {
                BackendRequest fix;
                fix.phase = Phase::Repair;
                fix.step = t;
                fix.task_id = task.task_id;
                fix.prompt = repair_request(candidate.source, action, fb.failure_detail, config.templates);
                fix.current_code = candidate.source;
                fix.action = action;
                const BackendReply fix_reply = backend.complete(fix);
                sr.usage.repair_calls = 1;
                add_usage(sr.usage.repair, fix_reply.usage);
                sr.repaired = true;
                candidate.source = extract_code(fix_reply.text);
                fb = evaluate_code(evaluator, task.task_id, candidate.source);
            }

            const double before = state.progress.base_runtime_ms;
            sr.candidate_digest = digest(candidate.source);
            sr.outcome = classify_outcome(fb, before, state.progress.best_runtime_ms, config.memory.timing_tolerance);
            sr.log_gain = immediate_log_gain(fb, before);
            if (fb.executable()) {
                const double runtime = *fb.runtime_ms;
                sr.speedup = *reference / runtime;
                const BestRecord here{t, *sr.speedup, runtime, sr.candidate_digest};
                if (runtime < rec.best.runtime_ms) {
                    rec.best = here;
                    rec.best_source = candidate.source;
                }
                if (!rec.best_generated || runtime < rec.best_generated->runtime_ms) rec.best_generated = here;
            }
            sr.feedback = fb;

            if (write_memory) {
                record_outcome(bank, task.task_id, t, g_prev, g, action.local, state, fb, config.memory);
            }
            transitions.push_back({g_prev, g, state, sr.log_gain});
            prefix.push_back(g);
            if (fb.executable()) current = candidate;
            state = summarize_state(state, current, action, fb, config.state);

            sr.best_speedup = rec.best.speedup;
            rec.steps.push_back(std::move(sr));
            if (observer) observer(rec, rec.steps.back());
        }
    } catch (const TransportError& err) {
        rec.abort_reason = err.what();
        rec.abort_kind = err.kind();
    }

    if (write_memory && !transitions.empty()) apply_future_gains(bank, transitions, config.memory.gamma);
    return rec;
}

}  // namespace htg
