#include "htg/bank_io.hpp"

#include <fstream>
#include <sstream>

#include "htg/errors.hpp"
#include "htg/json_read.hpp"

namespace htg {

using nlohmann::json;

namespace {

json to_json(const NodeStats& s) {
    return json{{"attempts", s.attempts},
                {"successes", s.successes},
                {"compile_passes", s.compile_passes},
                {"correct_passes", s.correct_passes},
                {"gain_log_sum", s.gain_log_sum},
                {"gain_count", s.gain_count},
                {"last_touched_step", s.last_touched_step}};
}

NodeStats node_stats(const Field& f) {
    NodeStats s;
    s.attempts = f["attempts"].as_int();
    s.successes = f["successes"].as_int();
    s.compile_passes = f["compile_passes"].as_int();
    s.correct_passes = f["correct_passes"].as_int();
    s.gain_log_sum = f["gain_log_sum"].as_double();
    s.gain_count = f["gain_count"].as_int();
    s.last_touched_step = f["last_touched_step"].as_int();
    if (s.successes > s.attempts || s.compile_passes > s.attempts ||
        s.correct_passes > s.compile_passes || s.gain_count > s.attempts) {
        throw ParseError(f.path(), "node statistics violate count ordering");
    }
    return s;
}

json to_json(const TransitionStats& s) {
    return json{{"n", s.n},         {"imm_gain_sum", s.imm_gain_sum},
                {"fut_gain_sum", s.fut_gain_sum},
                {"pos", s.pos},     {"succ", s.succ},
                {"comp", s.comp},   {"corr", s.corr},
                {"safe", s.safe},   {"cfail", s.cfail},
                {"corfail", s.corfail},
                {"neg", s.neg},     {"risk_events", s.risk_events}};
}

TransitionStats transition_stats(const Field& f) {
    TransitionStats s;
    s.n = f["n"].as_int();
    s.imm_gain_sum = f["imm_gain_sum"].as_double();
    s.fut_gain_sum = f["fut_gain_sum"].as_double();
    s.pos = f["pos"].as_int();
    s.succ = f["succ"].as_int();
    s.comp = f["comp"].as_int();
    s.corr = f["corr"].as_int();
    s.safe = f["safe"].as_int();
    s.cfail = f["cfail"].as_int();
    s.corfail = f["corfail"].as_int();
    s.neg = f["neg"].as_int();
    s.risk_events = f["risk_events"].as_int();
    for (auto c : {s.pos, s.succ, s.comp, s.corr, s.safe, s.cfail, s.corfail, s.neg, s.risk_events}) {
        if (c < 0 || c > s.n) throw ParseError(f.path(), "transition count outside [0, n]");
    }
    if (s.pos + s.neg > s.n) throw ParseError(f.path(), "pos + neg exceeds n");
    return s;
}

json to_json(const EvidenceItem& e) {
    return json{{"task_id", e.task_id},
                {"step", e.step},
                {"outcome", to_string(e.outcome)},
                {"log_gain", e.log_gain},
                {"summary", e.summary},
                {"state_digest", e.state_digest.to_string()}};
}

EvidenceItem evidence_item(const Field& f) {
    EvidenceItem e;
    e.task_id = f["task_id"].as_string();
    e.step = f["step"].as_int();
    try {
        e.outcome = outcome_from_string(f["outcome"].as_string());
        e.state_digest = BucketKey::parse(f["state_digest"].as_string());
    } catch (const ParseError& err) {
        throw ParseError(f.path(), err.message());
    }
    e.log_gain = f["log_gain"].as_double();
    e.summary = f["summary"].as_string();
    if ((e.outcome == Outcome::CompileFail || e.outcome == Outcome::CorrectFail) && e.log_gain != 0.0) {
        throw ParseError(f.path(), "non-executable evidence must carry log_gain 0");
    }
    return e;
}

json to_json(const std::deque<EvidenceItem>& items) {
    json arr = json::array();
    for (const auto& e : items) arr.push_back(to_json(e));
    return arr;
}

std::deque<EvidenceItem> evidence_list(const Field& f) {
    std::deque<EvidenceItem> out;
    for (std::size_t i = 0; i < f.size(); ++i) out.push_back(evidence_item(f[i]));
    return out;
}

}  // namespace

json bank_to_json(const MemoryBank& bank) {
    json globals = json::array();
    for (const auto& [id, g] : bank.globals()) {
        globals.push_back(json{{"id", g.id},
                               {"label", g.label},
                               {"prior",
                                {{"goal", g.prior.goal},
                                 {"triggers", g.prior.triggers},
                                 {"applicable_patterns", g.prior.applicable_patterns},
                                 {"risks", g.prior.risks},
                                 {"expected_gain_types", g.prior.expected_gain_types}}},
                               {"runtime", to_json(g.runtime)}});
    }
    json locals = json::array();
    for (const auto& [id, l] : bank.locals()) {
        locals.push_back(json{{"id", l.id},
                              {"parent_global_id", l.parent_global_id},
                              {"prior",
                               {{"strategy", l.prior.strategy},
                                {"use_when", l.prior.use_when},
                                {"avoid_when", l.prior.avoid_when},
                                {"edit_recipe", l.prior.edit_recipe},
                                {"verification_checklist", l.prior.verification_checklist},
                                {"common_failures", l.prior.common_failures}}},
                              {"evidence",
                               {{"positive", to_json(l.evidence.positive)},
                                {"negative", to_json(l.evidence.negative)}}},
                              {"runtime", to_json(l.runtime)}});
    }
    json edges = json::array();
    for (const auto& [key, e] : bank.edges()) {
        json buckets = json::object();
        for (const auto& [bk, stats] : e.buckets) buckets[bk.to_string()] = to_json(stats);
        edges.push_back(json{{"src", e.src},
                             {"dst", e.dst},
                             {"prior",
                              {{"rationale", e.prior.rationale},
                               {"pivot_conditions", e.prior.pivot_conditions},
                               {"risks", e.prior.risks}}},
                             {"aggregate", to_json(e.aggregate)},
                             {"buckets", std::move(buckets)}});
    }
    return json{{"globals", std::move(globals)},
                {"locals", std::move(locals)},
                {"edges", std::move(edges)},
                {"meta",
                 {{"schema_version", bank.meta().schema_version},
                  {"created_from", bank.meta().created_from},
                  {"writable", bank.meta().writable}}}};
}

MemoryBank bank_from_json(const json& doc) {
    const Field root(doc);
    const Field meta = root["meta"];
    const std::string version = meta["schema_version"].as_string();
    if (version != kBankSchemaVersion) {
        throw SchemaVersionError("unsupported memory bank schema_version '" + version +
                                 "' (expected '" + kBankSchemaVersion + "')");
    }

    MemoryBank bank;
    bank.meta().schema_version = version;
    bank.meta().created_from = meta["created_from"].as_string();
    bank.meta().writable = meta["writable"].as_bool();

    const Field globals = root["globals"];
    for (std::size_t i = 0; i < globals.size(); ++i) {
        const Field g = globals[i];
        const Field prior = g["prior"];
        GlobalNode node{g["id"].as_string(),
                        g["label"].as_string(),
                        {prior["goal"].as_string(), prior["triggers"].as_strings(),
                         prior["applicable_patterns"].as_strings(), prior["risks"].as_strings(),
                         prior["expected_gain_types"].as_strings()},
                        node_stats(g["runtime"])};
        try {
            bank.add_global(std::move(node));
        } catch (const Error& err) {
            throw ParseError(g.path(), err.what());
        }
    }

    const Field locals = root["locals"];
    for (std::size_t i = 0; i < locals.size(); ++i) {
        const Field l = locals[i];
        const Field prior = l["prior"];
        const Field evidence = l["evidence"];
        LocalNode node{l["id"].as_string(),
                       l["parent_global_id"].as_string(),
                       {prior["strategy"].as_string(), prior["use_when"].as_strings(),
                        prior["avoid_when"].as_strings(), prior["edit_recipe"].as_string(),
                        prior["verification_checklist"].as_strings(),
                        prior["common_failures"].as_strings()},
                       {evidence_list(evidence["positive"]), evidence_list(evidence["negative"])},
                       node_stats(l["runtime"])};
        try {
            bank.add_local(std::move(node));
        } catch (const Error& err) {
            throw ParseError(l.path(), err.what());
        }
    }

    const Field edges = root["edges"];
    if (edges.size() != bank.edges().size()) {
        throw ParseError(edges.path(), "expected " + std::to_string(bank.edges().size()) +
                                           " edges (|globals|^2), found " +
                                           std::to_string(edges.size()));
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Field e = edges[i];
        const std::string src = e["src"].as_string();
        const std::string dst = e["dst"].as_string();
        TransitionEdgeMemory* edge = nullptr;
        try {
            edge = &bank.edge_mut(src, dst);
        } catch (const LookupError& err) {
            throw ParseError(e.path(), err.what());
        }
        const Field prior = e["prior"];
        edge->prior = {prior["rationale"].as_string(), prior["pivot_conditions"].as_strings(),
                       prior["risks"].as_strings()};
        edge->aggregate = transition_stats(e["aggregate"]);
        const Field buckets = e["buckets"];
        std::int64_t bucket_total = 0;
        for (const auto& [name, _] : buckets.json_value().items()) {
            BucketKey key;
            try {
                key = BucketKey::parse(name);
            } catch (const ParseError& err) {
                throw ParseError(buckets.path(), err.message());
            }
            auto stats = transition_stats(buckets[name]);
            bucket_total += stats.n;
            edge->buckets.emplace(std::move(key), stats);
        }
        if (bucket_total > edge->aggregate.n) {
            throw ParseError(buckets.path(), "bucket observations exceed the aggregate count");
        }
    }
    return bank;
}

std::string canonical_text(const MemoryBank& bank) {
    return bank_to_json(bank).dump(2) + "\n";
}

json parse_json_document(std::string_view text, const std::string& origin) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& err) {
        // err.byte is 1-based and points just past the offending character.
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(err.byte == 0 ? 0 : err.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string where = std::to_string(line) + ":" + std::to_string(col);
        if (!origin.empty()) where = origin + ":" + where;
        throw ParseError(where, err.what());
    }
}

MemoryBank parse_bank(std::string_view text) { return bank_from_json(parse_json_document(text)); }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FilesystemError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FilesystemError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw FilesystemError("failed writing '" + path.string() + "'");
}

void save_bank(const MemoryBank& bank, const std::filesystem::path& path) {
    write_text_file(path, canonical_text(bank));
}

MemoryBank load_bank(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return bank_from_json(parse_json_document(text, path.string()));
    } catch (const ParseError& err) {
        if (err.location().rfind(path.string(), 0) == 0) throw;
        throw ParseError(path.string() + ":" + err.location(), err.message());
    }
}

}  // namespace htg
