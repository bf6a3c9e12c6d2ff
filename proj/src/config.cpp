#include "htg/config.hpp"

#include <algorithm>

#include "htg/bank_io.hpp"
#include "htg/errors.hpp"
#include "htg/json_read.hpp"
#include "htg/simulated.hpp"

namespace htg {

using nlohmann::json;

ScoringWeights weights_from_json(const json& value) {
    const Field f(value, "/weights");
    ScoringWeights w;
    if (value.is_array()) {
        if (value.size() != kFeatureCount) {
            throw ParseError("/weights", "expected " + std::to_string(kFeatureCount) + " weights, found " +
                                             std::to_string(value.size()));
        }
        for (std::size_t i = 0; i < kFeatureCount; ++i) w.w[i] = f[i].as_double();
    } else if (value.is_object()) {
        for (const auto& [name, _] : value.items()) {
            auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
            if (it == kFeatureNames.end()) throw ParseError("/weights/" + name, "unknown feature name");
            w.w[static_cast<std::size_t>(it - kFeatureNames.begin())] = f[name].as_double();
        }
    } else {
        throw ParseError("/weights", "expected an array or an object");
    }
    return w;
}

RunSettings settings_from_json(const json& doc, const std::filesystem::path& base_dir) {
    const Field root(doc);
    if (!doc.is_object()) throw ParseError("/", "configuration must be an object");
    static const std::vector<std::string> known = {
        "steps", "epsilon", "tau", "lambda", "seed", "weights", "gamma", "n_min", "stagnation_steps",
        "evidence_k", "evidence_cap", "summary_max_chars", "timing_tolerance", "repair", "backend",
        "evaluator", "prices", "templates_dir"};
    for (const auto& [key, _] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ParseError("/" + key, "unknown configuration key");
        }
    }
    RunSettings s;
    s.base_dir = base_dir;
    auto& e = s.engine;
    if (root.has("steps")) e.steps = static_cast<int>(root["steps"].as_int());
    if (root.has("epsilon")) e.policy.epsilon = root["epsilon"].as_double();
    if (root.has("tau")) e.policy.tau = root["tau"].as_double();
    if (root.has("lambda")) e.scoring.lambda = root["lambda"].as_double();
    if (root.has("seed")) e.policy.seed = static_cast<std::uint64_t>(root["seed"].as_int());
    if (root.has("weights")) e.scoring.weights = weights_from_json(doc["weights"]);
    if (root.has("gamma")) e.memory.gamma = root["gamma"].as_double();
    if (root.has("n_min")) e.scoring.n_min = root["n_min"].as_int();
    if (root.has("stagnation_steps")) e.state.stagnation_steps = static_cast<int>(root["stagnation_steps"].as_int());
    if (root.has("evidence_k")) {
        const auto k = root["evidence_k"].as_int();
        if (k < 0) throw ParseError("/evidence_k", "must be >= 0");
        e.evidence_k = static_cast<std::size_t>(k);
    }
    if (root.has("evidence_cap")) {
        const auto cap = root["evidence_cap"].as_int();
        if (cap < 1) throw ParseError("/evidence_cap", "must be >= 1");
        e.memory.evidence_cap = static_cast<std::size_t>(cap);
    }
    if (root.has("summary_max_chars")) {
        const auto n = root["summary_max_chars"].as_int();
        if (n < 1) throw ParseError("/summary_max_chars", "must be >= 1");
        e.memory.summary_max_chars = static_cast<std::size_t>(n);
    }
    if (root.has("timing_tolerance")) e.memory.timing_tolerance = root["timing_tolerance"].as_double();
    if (root.has("repair")) e.repair = root["repair"].as_bool();
    if (root.has("backend")) s.backend = doc["backend"];
    if (root.has("evaluator")) s.evaluator = doc["evaluator"];
    if (root.has("prices")) {
        const Field p = root["prices"];
        s.prices = PriceSheet::from_dollars(p.has("label") ? p["label"].as_string() : "", p["input_per_million"].as_double(),
                                            p["output_per_million"].as_double());
    }
    if (root.has("templates_dir")) e.templates = PromptTemplates::load(base_dir / root["templates_dir"].as_string());
    e.validate();
    // Surface adapter-section errors now rather than at the first task.
    (void)Field(s.backend, "/backend")["kind"].as_string();
    (void)Field(s.evaluator, "/evaluator")["kind"].as_string();
    return s;
}

RunSettings load_run_settings(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    try {
        return settings_from_json(parse_json_document(text, path.string()), path.parent_path());
    } catch (const ParseError& err) {
        if (err.location().rfind(path.string(), 0) == 0) throw;
        throw ParseError(path.string() + ":" + err.location(), err.message());
    }
}

namespace {

std::filesystem::path resolve(const RunSettings& s, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : s.base_dir / path;
}

}  // namespace

std::unique_ptr<Backend> make_backend(const RunSettings& s) {
    const Field f(s.backend, "/backend");
    const std::string kind = f["kind"].as_string();
    if (kind == "scripted") return std::make_unique<MockBackend>(MockBackend::from_file(resolve(s, f["script"].as_string())));
    if (kind == "simulated") return std::make_unique<SimulatedBackend>();
    if (kind == "http") {
        HttpBackendConfig c;
        c.base_url = f["base_url"].as_string();
        c.model = f["model"].as_string();
        if (f.has("path")) c.path = f["path"].as_string();
        if (f.has("api_key_env")) c.api_key_env = f["api_key_env"].as_string();
        if (f.has("auth_header")) c.auth_header = f["auth_header"].as_string();
        if (f.has("auth_prefix")) c.auth_prefix = f["auth_prefix"].as_string();
        if (f.has("timeout_ms")) c.timeout = std::chrono::milliseconds(f["timeout_ms"].as_int());
        if (f.has("temperature")) c.temperature = f["temperature"].as_double();
        if (f.has("max_tokens_field")) c.max_tokens_field = f["max_tokens_field"].as_string();
        if (f.has("limits")) {
            const Field l = f["limits"];
            if (l.has("local_selection")) c.limits.local_selection = l["local_selection"].as_int();
            if (l.has("code_generation")) c.limits.code_generation = l["code_generation"].as_int();
            if (l.has("repair")) c.limits.repair = l["repair"].as_int();
            if (l.has("state_summarization")) c.limits.state_summarization = l["state_summarization"].as_int();
        }
        if (f.has("fields")) {
            const Field m = f["fields"];
            if (m.has("text")) c.text_pointer = m["text"].as_string();
            if (m.has("finish_reason")) c.finish_pointer = m["finish_reason"].as_string();
            if (m.has("input_tokens")) c.input_tokens_pointer = m["input_tokens"].as_string();
            if (m.has("output_tokens")) c.output_tokens_pointer = m["output_tokens"].as_string();
            if (m.has("length_value")) c.length_finish_value = m["length_value"].as_string();
        }
        return std::make_unique<HttpBackend>(std::move(c));
    }
    throw ConfigError("unknown backend kind '" + kind + "' (expected scripted, http or simulated)");
}

std::unique_ptr<Evaluator> make_evaluator(const RunSettings& s) {
    const Field f(s.evaluator, "/evaluator");
    const std::string kind = f["kind"].as_string();
    if (kind == "scripted") {
        return std::make_unique<ScriptedEvaluator>(ScriptedEvaluator::from_file(resolve(s, f["script"].as_string())));
    }
    if (kind == "simulated") {
        const double base = f.has("base_runtime_ms") ? f["base_runtime_ms"].as_double() : 10.0;
        const auto seed = f.has("seed") ? static_cast<std::uint64_t>(f["seed"].as_int()) : 0;
        const double jitter = f.has("jitter") ? f["jitter"].as_double() : 0.25;
        return std::make_unique<SimulatedEvaluator>(default_simulated_spec(base), seed, jitter);
    }
    if (kind == "subprocess") {
        SubprocessEvaluatorConfig c;
        c.command = f["command"].as_strings();
        if (c.command.empty()) throw ParseError("/evaluator/command", "must not be empty");
        if (c.command[0].find('/') != std::string::npos) c.command[0] = resolve(s, c.command[0]).string();
        if (f.has("timeout_ms")) c.timeout = std::chrono::milliseconds(f["timeout_ms"].as_int());
        if (f.has("grace_ms")) c.grace = std::chrono::milliseconds(f["grace_ms"].as_int());
        return std::make_unique<SubprocessEvaluator>(std::move(c));
    }
    throw ConfigError("unknown evaluator kind '" + kind + "' (expected scripted, simulated or subprocess)");
}

}  // namespace htg
