#include <set>
#include <tuple>

#include "htg/backend.hpp"
#include "htg/bank_io.hpp"
#include "htg/errors.hpp"
#include "htg/json_read.hpp"

namespace htg {

MockBackend::MockBackend(std::vector<Entry> entries) : entries_(std::move(entries)) {}

namespace {

std::string entry_key(const MockBackend::Entry& e) {
    std::string key = std::string("phase=") + to_string(e.phase);
    if (e.task_id) key += " task=" + *e.task_id;
    if (e.step) key += " step=" + std::to_string(*e.step);
    if (e.when_contains) key += " when_contains=\"" + *e.when_contains + "\"";
    return key;
}

std::string fenced_json(const nlohmann::json& value) { return "```json\n" + value.dump() + "\n```"; }

std::string fenced_code(const std::string& code) { return "```\n" + code + "\n```"; }

}  // namespace

MockBackend MockBackend::from_json(const nlohmann::json& script, const std::filesystem::path& base_dir) {
    const Field root(script);
    const Field list = root["entries"];
    std::vector<Entry> entries;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const Field f = list[i];
        Entry e;
        try {
            e.phase = phase_from_string(f["phase"].as_string());
        } catch (const ParseError& err) {
            throw ParseError(f["phase"].display_path(), err.message());
        }
        if (f.has("task")) e.task_id = f["task"].as_string();
        if (f.has("step")) e.step = static_cast<int>(f["step"].as_int());
        if (f.has("when_contains")) e.when_contains = f["when_contains"].as_string();
        if (f.has("select")) e.select = f["select"].as_string();
        if (f.has("scores")) {
            for (const auto& [id, _] : f["scores"].json_value().items()) e.scores[id] = f["scores"][id].as_double();
        }
        if (f.has("code")) e.code = f["code"].as_string();
        if (f.has("code_file")) {
            if (e.code) throw ParseError(f.display_path(), "entry has both 'code' and 'code_file'");
            e.code = read_text_file(base_dir / f["code_file"].as_string());
        }
        if (f.has("reply")) e.reply = f["reply"].as_string();
        if (f.has("rationale")) e.rationale = f["rationale"].as_string();
        if (f.has("edit_plan")) e.edit_plan = f["edit_plan"].as_string();
        if (f.has("tokens_in")) e.usage.input_tokens = f["tokens_in"].as_int();
        if (f.has("tokens_out")) e.usage.output_tokens = f["tokens_out"].as_int();
        if (e.usage.input_tokens < 0 || e.usage.output_tokens < 0) {
            throw ParseError(f.display_path(), "token counts must be non-negative");
        }
        if (!e.select && e.scores.empty() && !e.code && !e.reply) {
            throw ParseError(f.display_path(), "entry needs one of select, scores, code, code_file, reply");
        }
        const std::string key = entry_key(e);
        if (!seen.insert(key).second) throw ParseError(f.display_path(), "duplicate script key (" + key + ")");
        entries.push_back(std::move(e));
    }
    return MockBackend(std::move(entries));
}

MockBackend MockBackend::from_file(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    try {
        return from_json(parse_json_document(text, path.string()), path.parent_path());
    } catch (const ParseError& err) {
        if (err.location().rfind(path.string(), 0) == 0) throw;
        throw ParseError(path.string() + ":" + err.location(), err.message());
    }
}

const MockBackend::Entry* MockBackend::match(const BackendRequest& request) const {
    // Most specific first: task+step, step, task+substring, substring, task, phase only.
    const Entry* best = nullptr;
    int best_rank = -1;
    for (const auto& e : entries_) {
        if (e.phase != request.phase) continue;
        if (e.task_id && *e.task_id != request.task_id) continue;
        if (e.step && *e.step != request.step) continue;
        if (e.when_contains && request.prompt.find(*e.when_contains) == std::string::npos) continue;
        const int rank = (e.step ? 4 : 0) + (e.when_contains ? 2 : 0) + (e.task_id ? 1 : 0);
        if (rank > best_rank) {
            best = &e;
            best_rank = rank;
        }
    }
    return best;
}

BackendReply MockBackend::do_complete(const BackendRequest& request) {
    BackendReply reply;
    const Entry* e = match(request);
    if (e != nullptr) reply.usage = e->usage;

    if (request.phase == Phase::LocalSelection) {
        std::string selected;
        std::string rationale = "scripted selection";
        std::string plan = "apply the selected strategy";
        if (e != nullptr && e->reply) {
            reply.text = *e->reply;
            return reply;
        }
        if (e != nullptr && e->select) {
            selected = *e->select;
        } else if (e != nullptr && !e->scores.empty()) {
            // Per-candidate scalar preferences; argmax in rank order.
            double best = 0.0;
            for (const auto& id : request.candidate_ids) {
                auto it = e->scores.find(id);
                if (it != e->scores.end() && (selected.empty() || it->second > best)) {
                    selected = id;
                    best = it->second;
                }
            }
        }
        if (e != nullptr) {
            if (!e->rationale.empty()) rationale = e->rationale;
            if (!e->edit_plan.empty()) plan = e->edit_plan;
        }
        if (selected.empty()) {
            selected = request.candidate_ids.empty() ? std::string() : request.candidate_ids.back();
            rationale = "default mock selection";
        }
        reply.text = fenced_json({{"selected_local_node", selected}, {"rationale", rationale}, {"edit_plan", plan}});
        return reply;
    }

    if (e != nullptr && e->reply) {
        reply.text = *e->reply;
    } else if (e != nullptr && e->code) {
        reply.text = fenced_code(*e->code);
    } else if (request.phase == Phase::StateSummarization) {
        reply.text = "";
    } else {
        reply.text = fenced_code(request.current_code);
    }
    return reply;
}

}  // namespace htg
