#include "htg/prompts.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "embedded_templates.hpp"
#include "htg/errors.hpp"

namespace htg {

PromptTemplates PromptTemplates::defaults() {
    return {embedded::k_local_selection, embedded::k_code_generation, embedded::k_repair};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t = defaults();
    auto read_into = [&dir](const char* name, std::string& slot) {
        const auto path = dir / name;
        if (!std::filesystem::exists(path)) return;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FilesystemError("cannot read template '" + path.string() + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        slot = buf.str();
    };
    read_into("local_selection.txt", t.local_selection);
    read_into("code_generation.txt", t.code_generation);
    read_into("repair.txt", t.repair);
    return t;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw ConfigError("unterminated '{{' in prompt template");
        const std::string name(tmpl.substr(open + 2, close - open - 2));
        auto it = vars.find(name);
        if (it == vars.end()) throw ConfigError("prompt template uses unknown placeholder '" + name + "'");
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

namespace {

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out.empty() ? "-" : out;
}

std::string fmt_double(double v, const char* spec = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::string render_state_block(const DecisionState& s) {
    std::ostringstream o;
    o << "step: " << s.step << "\n";
    o << "task: " << s.task.task_id << " (" << (s.task.operator_type.empty() ? "-" : s.task.operator_type)
      << "; " << (s.task.input_shape_summary.empty() ? "-" : s.task.input_shape_summary) << ")\n";
    o << "code summary: " << (s.code_summary.empty() ? "-" : s.code_summary) << "\n";
    const auto& f = s.feedback;
    o << "last feedback: compile=" << (f.compile ? "yes" : "no") << " correct=" << (f.correct ? "yes" : "no")
      << " runtime_ms=" << (f.runtime_ms ? fmt_double(*f.runtime_ms) : "-")
      << " speedup=" << (f.speedup ? fmt_double(*f.speedup, "%.3f") : "-")
      << " timeout=" << (f.timeout ? "yes" : "no") << " dominant_failure=" << f.dominant_failure << "\n";
    const auto& p = s.progress;
    o << "progress: best_speedup=" << fmt_double(p.best_speedup, "%.3f")
      << " recent_improvement=" << fmt_double(p.recent_improvement, "%.3f")
      << " stagnation=" << (p.stagnation ? "yes" : "no") << "\n";
    o << "recent globals: " << join(p.recent_globals) << "\n";
    o << "recent locals: " << join(p.recent_locals) << "\n";
    o << "symptoms: " << join(s.symptoms);
    return o.str();
}

std::string render_global_block(const GlobalNode& g) {
    std::ostringstream o;
    o << g.id << " (" << g.label << ")\n";
    o << "goal: " << g.prior.goal << "\n";
    o << "triggers: " << join(g.prior.triggers) << "\n";
    o << "risks: " << join(g.prior.risks) << "\n";
    o << "history: attempts=" << g.runtime.attempts << " successes=" << g.runtime.successes
      << " correct=" << g.runtime.correct_passes;
    return o.str();
}

RetrievedEvidence recent_evidence(const LocalNode& node, std::size_t k) {
    RetrievedEvidence r;
    auto pos = node.evidence.positive.rbegin();
    auto neg = node.evidence.negative.rbegin();
    bool take_positive = true;
    while (r.items.size() < k &&
           (pos != node.evidence.positive.rend() || neg != node.evidence.negative.rend())) {
        if ((take_positive && pos != node.evidence.positive.rend()) ||
            neg == node.evidence.negative.rend()) {
            r.items.push_back(&*pos++);
        } else {
            r.items.push_back(&*neg++);
        }
        take_positive = !take_positive;
    }
    return r;
}

RetrievedEvidence matching_evidence(const LocalNode& node, const BucketKey& key, std::size_t k) {
    RetrievedEvidence r;
    auto pos = node.evidence.positive.rbegin();
    auto neg = node.evidence.negative.rbegin();
    auto skip = [&key](auto& it, auto end) {
        while (it != end && !(it->state_digest == key)) ++it;
    };
    bool take_positive = true;
    while (r.items.size() < k) {
        skip(pos, node.evidence.positive.rend());
        skip(neg, node.evidence.negative.rend());
        const bool pos_ok = pos != node.evidence.positive.rend();
        const bool neg_ok = neg != node.evidence.negative.rend();
        if (!pos_ok && !neg_ok) break;
        if ((take_positive && pos_ok) || !neg_ok) {
            r.items.push_back(&*pos++);
        } else {
            r.items.push_back(&*neg++);
        }
        take_positive = !take_positive;
    }
    if (r.items.empty() && k > 0) {
        r = recent_evidence(node, k);
        r.fallback = !r.items.empty();
    }
    return r;
}

std::string render_evidence(const RetrievedEvidence& evidence) {
    if (evidence.items.empty()) return "(no prior evidence)";
    std::ostringstream o;
    if (evidence.fallback) o << "(no evidence for the current state; showing most recent)\n";
    for (std::size_t i = 0; i < evidence.items.size(); ++i) {
        const auto& e = *evidence.items[i];
        if (i) o << "\n";
        o << "- [" << to_string(e.outcome) << ", " << e.task_id << " step " << e.step << "] " << e.summary;
    }
    return o.str();
}

std::string render_local_card(const LocalNode& l, const RetrievedEvidence& evidence) {
    std::ostringstream o;
    o << "### " << l.id << "\n";
    o << "strategy: " << l.prior.strategy << "\n";
    o << "use when: " << join(l.prior.use_when) << "\n";
    o << "avoid when: " << join(l.prior.avoid_when) << "\n";
    o << "common failures: " << join(l.prior.common_failures) << "\n";
    o << "history: attempts=" << l.runtime.attempts << " successes=" << l.runtime.successes << "\n";
    o << "evidence:\n" << render_evidence(evidence);
    return o.str();
}

}  // namespace htg
