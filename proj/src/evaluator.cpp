#include "htg/evaluator.hpp"

#include <cmath>

#include "htg/bank_io.hpp"
#include "htg/errors.hpp"
#include "htg/json_read.hpp"

namespace htg {

using nlohmann::json;

std::optional<double> Evaluator::reference_runtime_ms(const std::string& task_id,
                                                      const std::string& initial_code) {
    const auto fb = evaluate(task_id, initial_code);
    if (fb.executable()) return fb.runtime_ms;
    return std::nullopt;
}

json feedback_to_json(const EvaluationFeedback& f) {
    json doc{{"compile", f.compile},
             {"correct", f.correct},
             {"timeout", f.timeout},
             {"failure_detail", f.failure_detail}};
    doc["runtime_ms"] = f.runtime_ms ? json(*f.runtime_ms) : json(nullptr);
    return doc;
}

namespace {

EvaluationFeedback feedback_fields(const Field& f, bool defaults) {
    EvaluationFeedback fb;
    auto flag = [&](const char* key, bool fallback) { return f.has(key) || !defaults ? f[key].as_bool() : fallback; };
    fb.compile = flag("compile", true);
    fb.correct = flag("correct", fb.compile);
    fb.timeout = f.has("timeout") ? f["timeout"].as_bool() : false;
    if (const json* rt = f.find("runtime_ms"); rt != nullptr && !rt->is_null()) {
        fb.runtime_ms = f["runtime_ms"].as_double();
    }
    if (f.has("failure_detail")) fb.failure_detail = f["failure_detail"].as_string();
    if (!fb.valid()) {
        throw ParseError(f.display_path(),
                         "feedback violates invariants (correct needs compile; runtime needs a correct, "
                         "non-timed-out, positive measurement)");
    }
    return fb;
}

}  // namespace

EvaluationFeedback feedback_from_json(const json& doc) {
    return feedback_fields(Field(doc), false);
}

ScriptedEvaluator::ScriptedEvaluator(std::vector<Rule> rules, std::map<std::string, double> references,
                                     std::optional<EvaluationFeedback> fallback)
    : rules_(std::move(rules)), references_(std::move(references)), fallback_(std::move(fallback)) {}

ScriptedEvaluator ScriptedEvaluator::from_json(const json& script) {
    const Field root(script);
    std::map<std::string, double> references;
    if (root.has("references")) {
        const Field refs = root["references"];
        for (const auto& [task, _] : refs.json_value().items()) {
            const double v = refs[task].as_double();
            if (!(v > 0.0)) throw ParseError(refs[task].display_path(), "reference runtime must be positive");
            references[task] = v;
        }
    }
    std::vector<Rule> rules;
    const Field list = root["rules"];
    for (std::size_t i = 0; i < list.size(); ++i) {
        const Field r = list[i];
        Rule rule;
        if (r.has("task")) rule.task_id = r["task"].as_string();
        rule.contains = r["contains"].as_string();
        rule.feedback = feedback_fields(r, true);
        rules.push_back(std::move(rule));
    }
    std::optional<EvaluationFeedback> fallback;
    if (root.has("default")) fallback = feedback_fields(root["default"], true);
    return ScriptedEvaluator(std::move(rules), std::move(references), std::move(fallback));
}

ScriptedEvaluator ScriptedEvaluator::from_file(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    try {
        return from_json(parse_json_document(text, path.string()));
    } catch (const ParseError& err) {
        if (err.location().rfind(path.string(), 0) == 0) throw;
        throw ParseError(path.string() + ":" + err.location(), err.message());
    }
}

EvaluationFeedback ScriptedEvaluator::evaluate(const std::string& task_id, const std::string& source) {
    for (const auto& r : rules_) {
        if (r.task_id && *r.task_id != task_id) continue;
        if (source.find(r.contains) != std::string::npos) return r.feedback;
    }
    if (fallback_) return *fallback_;
    EvaluationFeedback fb;
    fb.failure_detail = "no scripted outcome matches the candidate";
    return fb;
}

std::optional<double> ScriptedEvaluator::reference_runtime_ms(const std::string& task_id,
                                                              const std::string& initial_code) {
    if (auto it = references_.find(task_id); it != references_.end()) return it->second;
    return Evaluator::reference_runtime_ms(task_id, initial_code);
}

}  // namespace htg
