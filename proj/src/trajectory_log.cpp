#include "htg/trajectory_log.hpp"

#include <sstream>

#include "htg/bank_io.hpp"
#include "htg/errors.hpp"
#include "htg/json_read.hpp"

namespace htg {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json usage_json(int calls, const TokenUsage& u) {
    return json{{"calls", calls}, {"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}};
}

json best_json(const BestRecord& b) {
    return json{{"step", b.step},
                {"speedup", b.speedup},
                {"runtime_ms", b.runtime_ms},
                {"candidate_digest", b.candidate_digest}};
}

}  // namespace

json step_to_json(const StepRecord& s) {
    json probs = json::object();
    for (const auto& [id, p] : s.distribution.probs) probs[id] = p;
    json usage = json::object();
    if (s.usage.local_selection_calls) usage["local_selection"] = usage_json(s.usage.local_selection_calls, s.usage.local_selection);
    if (s.usage.code_generation_calls) usage["code_generation"] = usage_json(s.usage.code_generation_calls, s.usage.code_generation);
    if (s.usage.repair_calls) usage["repair"] = usage_json(s.usage.repair_calls, s.usage.repair);
    return json{{"type", "step"},
                {"step", s.step},
                {"bucket", bucket_key(s.state).to_string()},
                {"best_speedup_before", s.state.progress.best_speedup},
                {"symptoms", s.state.symptoms},
                {"probs", std::move(probs)},
                {"global", s.global},
                {"forced_global", s.forced_global},
                {"local", s.invalid ? json(nullptr) : json(s.local)},
                {"edit_plan", s.edit_plan},
                {"invalid", s.invalid},
                {"local_fallback", s.local_fallback},
                {"repaired", s.repaired},
                {"truncated", s.truncated},
                {"candidate_digest", s.candidate_digest},
                {"feedback", s.feedback ? feedback_to_json(*s.feedback) : json(nullptr)},
                {"outcome", s.feedback ? json(to_string(s.outcome)) : json(nullptr)},
                {"speedup", optional_number(s.speedup)},
                {"log_gain", s.log_gain},
                {"best_speedup", s.best_speedup},
                {"usage", std::move(usage)}};
}

TrajectoryLogWriter::TrajectoryLogWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw FilesystemError("cannot create trajectory log '" + path.string() + "'");
}

void TrajectoryLogWriter::line(const json& doc) {
    out_ << doc.dump() << '\n';
    out_.flush();
    if (!out_) throw FilesystemError("failed writing trajectory log '" + path_.string() + "'");
}

void TrajectoryLogWriter::header(const std::string& task_id, double reference_runtime_ms, const RunMeta& m) {
    line(json{{"type", "header"},
              {"task_id", task_id},
              {"reference_runtime_ms", reference_runtime_ms},
              {"steps", m.steps},
              {"seed", m.seed},
              {"epsilon", m.epsilon},
              {"tau", m.tau},
              {"lambda", m.lambda},
              {"freeze_memory", m.freeze_memory},
              {"no_prefix", m.no_prefix},
              {"prices",
               {{"label", m.prices.label},
                {"input_per_million_micro", m.prices.input_per_million_micro},
                {"output_per_million_micro", m.prices.output_per_million_micro}}}});
}

void TrajectoryLogWriter::step(const StepRecord& s) { line(step_to_json(s)); }

void TrajectoryLogWriter::finish(const TrajectoryRecord& r) {
    if (r.abort_reason) {
        line(json{{"type", "abort"},
                  {"kind", r.abort_kind ? to_string(*r.abort_kind) : "unknown"},
                  {"message", *r.abort_reason},
                  {"steps_completed", r.steps.size()}});
        return;
    }
    line(json{{"type", "summary"},
              {"best", best_json(r.best)},
              {"best_generated", r.best_generated ? best_json(*r.best_generated) : json(nullptr)},
              {"correct", r.best_generated.has_value()},
              {"steps_completed", r.steps.size()}});
}

LoggedTask read_trajectory_log(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    LoggedTask task;
    bool have_header = false;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        json doc;
        try {
            doc = parse_json_document(raw);
        } catch (const ParseError& err) {
            throw ParseError(where, err.message());
        }
        try {
            const Field f(doc);
            const std::string type = f["type"].as_string();
            if (type == "header") {
                have_header = true;
                task.task_id = f["task_id"].as_string();
                task.reference_runtime_ms = f["reference_runtime_ms"].as_double();
                task.meta.steps = static_cast<int>(f["steps"].as_int());
                task.meta.seed = static_cast<std::uint64_t>(f["seed"].json_value().get<std::uint64_t>());
                task.meta.epsilon = f["epsilon"].as_double();
                task.meta.tau = f["tau"].as_double();
                task.meta.lambda = f["lambda"].as_double();
                task.meta.freeze_memory = f["freeze_memory"].as_bool();
                task.meta.no_prefix = f["no_prefix"].as_bool();
                const Field p = f["prices"];
                task.meta.prices.label = p["label"].as_string();
                task.meta.prices.input_per_million_micro = p["input_per_million_micro"].as_int();
                task.meta.prices.output_per_million_micro = p["output_per_million_micro"].as_int();
            } else if (type == "step") {
                if (!have_header) throw ParseError("", "step line before header");
                LoggedStep s;
                s.step = static_cast<int>(f["step"].as_int());
                s.global = f["global"].as_string();
                s.invalid = f["invalid"].as_bool();
                if (!s.invalid) s.local = f["local"].as_string();
                s.repaired = f["repaired"].as_bool();
                if (!f["outcome"].json_value().is_null()) s.outcome = f["outcome"].as_string();
                if (!f["speedup"].json_value().is_null()) s.speedup = f["speedup"].as_double();
                const Field fb = f["feedback"];
                if (!fb.json_value().is_null() && !fb["runtime_ms"].json_value().is_null()) {
                    s.runtime_ms = fb["runtime_ms"].as_double();
                }
                s.best_speedup = f["best_speedup"].as_double();
                const Field usage = f["usage"];
                for (const auto& [name, _] : usage.json_value().items()) {
                    const Field u = usage[name];
                    task.usage[phase_from_string(name)] +=
                        PhaseTotals{u["calls"].as_int(), u["input_tokens"].as_int(), u["output_tokens"].as_int()};
                }
                task.steps.push_back(std::move(s));
            } else if (type == "summary") {
                task.complete = true;
                task.best_speedup = f["best"]["speedup"].as_double();
                const Field bg = f["best_generated"];
                if (!bg.json_value().is_null()) task.best_generated_speedup = bg["speedup"].as_double();
            } else if (type == "abort") {
                task.abort_reason = f["message"].as_string();
            } else {
                throw ParseError("/type", "unknown line type '" + type + "'");
            }
        } catch (const ParseError& err) {
            throw ParseError(where, err.what());
        }
    }
    if (!have_header) throw ParseError(path.string(), "trajectory log has no header line");
    if (!task.complete) {
        // Aborted or truncated runs: derive the best correct speedup from the steps.
        for (const auto& s : task.steps) {
            if (s.speedup && (!task.best_generated_speedup || *s.speedup > *task.best_generated_speedup)) {
                task.best_generated_speedup = s.speedup;
            }
            task.best_speedup = std::max(task.best_speedup, s.best_speedup);
        }
    }
    return task;
}

}  // namespace htg
