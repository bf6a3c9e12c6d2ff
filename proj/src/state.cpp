#include "htg/state.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <regex>

namespace htg {

namespace {

std::size_t count_of(const std::string& text, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
    return n;
}

bool has_repeated_index(const std::string& source) {
    static const std::regex index_expr(R"(blockIdx\.[xyz]\s*\*\s*blockDim\.[xyz]\s*\+\s*threadIdx\.[xyz])");
    std::map<std::string, int> seen;
    for (auto it = std::sregex_iterator(source.begin(), source.end(), index_expr); it != std::sregex_iterator();
         ++it) {
        std::string expr = it->str();
        expr.erase(std::remove_if(expr.begin(), expr.end(), ::isspace), expr.end());
        if (++seen[expr] >= 2) return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> detect_symptoms(const std::string& source) {
    static const std::regex strided(R"(\[[^\]]*\*\s*(stride|ld[a-z]*|pitch|[A-Z]\w*)\s*[\]+])");
    static const std::regex guard(R"(if\s*\(\s*\w+\s*<\s*\w+)");
    std::vector<std::string> tags;
    const bool vectorized = source.find("float4") != std::string::npos;
    const bool tail_handled = source.find("% 4") != std::string::npos || source.find("tail") != std::string::npos;
    const bool kernel = source.find("__global__") != std::string::npos;
    if ((vectorized && !tail_handled) || (kernel && !std::regex_search(source, guard))) {
        tags.emplace_back(symptom::kBoundaryRisk);
    }
    if (std::regex_search(source, strided) || source.find("stride") != std::string::npos) {
        tags.emplace_back(symptom::kStridedAccess);
    }
    if (kernel && source.find("__shared__") == std::string::npos) tags.emplace_back(symptom::kMemoryBound);
    const bool loop = source.find("for (") != std::string::npos || source.find("for(") != std::string::npos;
    if (loop && count_of(source, "if (") + count_of(source, "if(") >= 3) tags.emplace_back(symptom::kBranchHeavyLoop);
    if (has_repeated_index(source)) tags.emplace_back(symptom::kRepeatedIndex);
    return tags;
}

std::string summarize_code(const std::string& source) {
    const auto lines = std::count(source.begin(), source.end(), '\n') + (source.empty() || source.back() == '\n' ? 0 : 1);
    std::string out = std::to_string(lines) + " lines";
    const auto kernels = count_of(source, "__global__");
    if (kernels > 0) out += ", " + std::to_string(kernels) + " kernel(s)";
    for (const char* feature : {"float4", "__ldg", "__shared__", "#pragma unroll", "__syncthreads"}) {
        if (source.find(feature) != std::string::npos) out += std::string(", uses ") + feature;
    }
    return out;
}

DecisionState initial_state(const TaskContext& task, const CandidateImplementation& code,
                            const StateConfig& config) {
    DecisionState s;
    s.step = 1;
    s.task = task;
    s.code_summary = summarize_code(code.source);
    s.symptoms = config.symptoms ? config.symptoms(code.source) : std::vector<std::string>{};
    s.progress.best_speedup = 1.0;
    s.progress.best_runtime_ms = task.reference_runtime_ms;
    s.progress.base_runtime_ms = task.reference_runtime_ms;
    return s;
}

namespace {

template <typename T>
void push_window(std::vector<T>& v, T item, std::size_t window) {
    v.push_back(std::move(item));
    if (v.size() > window) v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() - window));
}

}  // namespace

DecisionState summarize_state(const DecisionState& prev, const CandidateImplementation& next_code,
                              const Action& action, const std::optional<EvaluationFeedback>& feedback,
                              const StateConfig& config) {
    DecisionState s;
    s.step = prev.step + 1;
    s.task = prev.task;
    s.code_summary = summarize_code(next_code.source);
    s.symptoms = config.symptoms ? config.symptoms(next_code.source) : std::vector<std::string>{};
    s.progress = prev.progress;
    auto& p = s.progress;
    push_window(p.recent_globals, action.global, config.history_window);
    if (!action.local.empty()) push_window(p.recent_locals, action.local, config.history_window);

    const double before_best = p.best_speedup;
    if (feedback) {
        const auto& fb = *feedback;
        s.feedback.compile = fb.compile;
        s.feedback.correct = fb.compile && fb.correct;
        s.feedback.timeout = fb.timeout;
        if (fb.executable()) {
            s.feedback.runtime_ms = fb.runtime_ms;
            const double runtime = *fb.runtime_ms;
            if (s.task.reference_runtime_ms > 0.0) s.feedback.speedup = s.task.reference_runtime_ms / runtime;
            if (p.best_runtime_ms <= 0.0 || runtime < p.best_runtime_ms) {
                p.best_runtime_ms = runtime;
                if (s.feedback.speedup) p.best_speedup = *s.feedback.speedup;
            }
            s.feedback.dominant_failure = p.base_runtime_ms > 0.0 && runtime > p.base_runtime_ms ? "regression" : "none";
            p.base_runtime_ms = runtime;
        } else if (fb.timeout) {
            s.feedback.dominant_failure = "timeout";
        } else if (!fb.compile) {
            s.feedback.dominant_failure = "compile";
        } else {
            s.feedback.dominant_failure = "correctness";
            ++p.correctness_failures;
            p.last_correctness_failure_step = prev.step;
        }
    } else {
        s.feedback.dominant_failure = "invalid_step";
    }
    p.recent_improvement = before_best > 0.0 ? p.best_speedup / before_best : 1.0;
    p.steps_without_improvement = p.best_speedup > before_best ? 0 : p.steps_without_improvement + 1;
    p.stagnation = p.steps_without_improvement >= config.stagnation_steps;
    return s;
}

}  // namespace htg
