#include "htg/local_strategy.hpp"

#include <algorithm>

#include "htg/errors.hpp"

namespace htg {

std::vector<const LocalNode*> local_candidates(const MemoryBank& bank, const NodeId& g) {
    (void)bank.global(g);
    std::vector<const LocalNode*> out;
    for (const auto& id : bank.children_of(g)) out.push_back(&bank.local(id));
    std::stable_sort(out.begin(), out.end(), [](const LocalNode* a, const LocalNode* b) {
        const double ra = smoothed_rate(a->runtime.successes, a->runtime.attempts);
        const double rb = smoothed_rate(b->runtime.successes, b->runtime.attempts);
        if (ra != rb) return ra > rb;
        if (a->runtime.attempts != b->runtime.attempts) return a->runtime.attempts > b->runtime.attempts;
        return a->id < b->id;
    });
    return out;
}

std::string build_local_prompt(const DecisionState& state, const CandidateImplementation& code,
                               const GlobalNode& g_memory, const std::vector<const LocalNode*>& candidates,
                               std::size_t k, const PromptTemplates& templates) {
    std::string cards;
    std::string ids;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i) {
            cards += "\n\n";
            ids += ", ";
        }
        cards += render_local_card(*candidates[i], recent_evidence(*candidates[i], k));
        ids += candidates[i]->id;
    }
    return render_template(templates.local_selection, {{"state", render_state_block(state)},
                                                       {"code", code.source},
                                                       {"global", render_global_block(g_memory)},
                                                       {"candidates", cards},
                                                       {"candidate_ids", ids}});
}

namespace {

std::optional<LocalSelection> selection_from(std::string_view text) {
    nlohmann::json doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    auto it = doc.find("selected_local_node");
    if (it == doc.end() || !it->is_string()) return std::nullopt;
    LocalSelection s;
    s.selected_local_node = it->get<std::string>();
    if (auto r = doc.find("rationale"); r != doc.end() && r->is_string()) s.rationale = r->get<std::string>();
    if (auto p = doc.find("edit_plan"); p != doc.end() && p->is_string()) s.edit_plan = p->get<std::string>();
    return s;
}

// End of the balanced object starting at `open`, honoring JSON strings.
std::size_t balanced_end(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i + 1;
    }
    return std::string_view::npos;
}

}  // namespace

std::optional<LocalSelection> parse_local_reply(const std::string& text) {
    const std::string_view view(text);
    std::size_t pos = 0;
    while (true) {
        const auto open = view.find("```", pos);
        if (open == std::string_view::npos) break;
        const auto body = view.find('\n', open + 3);
        if (body == std::string_view::npos) break;
        const auto close = view.find("```", body + 1);
        if (close == std::string_view::npos) break;
        if (auto s = selection_from(view.substr(body + 1, close - body - 1))) return s;
        pos = close + 3;
    }
    for (std::size_t open = view.find('{'); open != std::string_view::npos; open = view.find('{', open + 1)) {
        const auto end = balanced_end(view, open);
        if (end == std::string_view::npos) continue;
        if (auto s = selection_from(view.substr(open, end - open))) return s;
    }
    return std::nullopt;
}

LocalSelectionResult select_local(const DecisionState& state, const CandidateImplementation& code,
                                  const NodeId& g, const MemoryBank& bank, Backend& backend,
                                  const LocalStrategyConfig& config) {
    const auto candidates = local_candidates(bank, g);
    if (candidates.empty()) {
        throw InvalidStepError("global direction '" + g + "' has no local strategies");
    }
    BackendRequest request;
    request.phase = Phase::LocalSelection;
    request.step = state.step;
    request.task_id = state.task.task_id;
    request.prompt = build_local_prompt(state, code, bank.global(g), candidates, config.evidence_k, config.templates);
    request.current_code = code.source;
    for (const auto* c : candidates) request.candidate_ids.push_back(c->id);

    LocalSelectionResult result;
    result.reply = backend.complete(request);
    const auto parsed = parse_local_reply(result.reply.text);
    const bool in_set = parsed && std::any_of(candidates.begin(), candidates.end(), [&](const LocalNode* c) {
                            return c->id == parsed->selected_local_node;
                        });
    if (in_set) {
        result.action = Action{g, parsed->selected_local_node, parsed->edit_plan};
        result.rationale = parsed->rationale;
    } else {
        result.action = Action{g, candidates.front()->id, kFallbackEditPlan};
        result.fallback = true;
    }
    return result;
}

}  // namespace htg
