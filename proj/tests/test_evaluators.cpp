#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "json.hpp"

#include "htg/default_bank.hpp"
#include "htg/errors.hpp"
#include "htg/evaluator.hpp"
#include "htg/simulated.hpp"
#include "test_paths.hpp"

using namespace htg;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

SubprocessEvaluator worker(std::vector<std::string> extra = {}, std::chrono::milliseconds timeout = 2000ms) {
    SubprocessEvaluatorConfig cfg;
    cfg.command = {HTG_FAKE_WORKER};
    for (auto& e : extra) cfg.command.push_back(std::move(e));
    cfg.timeout = timeout;
    cfg.grace = 200ms;
    return SubprocessEvaluator(cfg);
}

TransportKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const TransportError& e) {
        return e.kind();
    }
    FAIL("expected TransportError");
    return TransportKind::Network;
}

SimulatedEnvironmentSpec toy_spec() {
    SimulatedEnvironmentSpec s;
    s.base_runtime_ms = 10.0;
    s.effects["l_half"] = SimEffect{"g_a", 0.5};
    s.effects["l_needs_b"] = SimEffect{"g_a", 0.8, 1, {"g_b"}, 1.25};
    s.effects["l_b"] = SimEffect{"g_b", 0.9};
    s.effects["l_strict"] = SimEffect{"g_c", 0.7, 1, {"g_b"}, 1.0, true};
    s.failures = {{"g_b", "g_c", "l_c", true, "clash"}};
    s.effects["l_c"] = SimEffect{"g_c", 0.6};
    return s;
}

}  // namespace

TEST_CASE("feedback documents") {
    CHECK(feedback_from_json(json{{"compile", true}, {"correct", true}, {"runtime_ms", 3.5}}).runtime_ms == 3.5);
    CHECK_THROWS_AS(feedback_from_json(json{{"compile", false}, {"correct", true}}), ParseError);
    CHECK_THROWS_AS(feedback_from_json(json{{"compile", true}, {"correct", false}, {"runtime_ms", 1.0}}), ParseError);
    CHECK_THROWS_AS(feedback_from_json(json{{"correct", true}}), ParseError);
    CHECK_THROWS_AS(feedback_from_json(json{{"compile", true}, {"correct", true}, {"runtime_ms", -1.0}}), ParseError);
    EvaluationFeedback fb;
    fb.compile = fb.correct = true;
    fb.runtime_ms = 2.0;
    CHECK(feedback_from_json(feedback_to_json(fb)) == fb);
    const auto none = feedback_to_json(EvaluationFeedback{});
    CHECK(none["runtime_ms"].is_null());
}

TEST_CASE("scripted evaluator") {
    const json script{{"references", {{"t1", 18.2}}},
                      {"rules", json::array({{{"task", "t2"}, {"contains", "k"}, {"runtime_ms", 1.0}},
                                             {{"contains", "k"}, {"runtime_ms", 2.0}},
                                             {{"contains", "bad"}, {"correct", false}, {"failure_detail", "mismatch"}},
                                             {{"contains", "nocompile"}, {"compile", false}}})}};
    ScriptedEvaluator ev = ScriptedEvaluator::from_json(script);
    CHECK(ev.evaluate("t2", "k").runtime_ms == 1.0);
    CHECK(ev.evaluate("t1", "k").runtime_ms == 2.0);
    const auto bad = ev.evaluate("t1", "bad");
    CHECK(bad.compile);
    CHECK_FALSE(bad.correct);
    CHECK(bad.failure_detail == "mismatch");
    CHECK_FALSE(ev.evaluate("t1", "nocompile").compile);
    CHECK_FALSE(ev.evaluate("t1", "zzz").compile);
    CHECK(ev.reference_runtime_ms("t1", "") == 18.2);
    CHECK(ev.evaluate("t1", "k") == ev.evaluate("t1", "k"));

    json with_default = script;
    with_default["default"] = {{"compile", true}, {"correct", true}, {"runtime_ms", 9.0}};
    CHECK(ScriptedEvaluator::from_json(with_default).evaluate("t1", "zzz").runtime_ms == 9.0);
    json invalid = script;
    invalid["rules"][0]["compile"] = false;
    invalid["rules"][0]["correct"] = true;
    CHECK_THROWS_AS(ScriptedEvaluator::from_json(invalid), ParseError);
}

TEST_CASE("reference runtime defaults to evaluating the initial code") {
    ScriptedEvaluator ev({{std::nullopt, "init", EvaluationFeedback{true, true, 4.0, false, ""}}}, {}, std::nullopt);
    CHECK(ev.reference_runtime_ms("t", "init code") == 4.0);
    CHECK_FALSE(ev.reference_runtime_ms("t", "other").has_value());
}

TEST_CASE("subprocess evaluator round trip") {
    auto ev = worker();
    const auto fb = ev.evaluate("t", std::string(500, 'x'));
    CHECK(fb.executable());
    CHECK(*fb.runtime_ms == doctest::Approx(1.5));
    // The worker stays up between requests.
    CHECK(*ev.evaluate("t", "").runtime_ms == doctest::Approx(1.0));
    CHECK(ev.evaluate("t", "multi\nline\n\"quoted\"") == ev.evaluate("t", "multi\nline\n\"quoted\""));
}

TEST_CASE("subprocess evaluator with a fixture table") {
    auto ev = worker({"--script", std::string(HTG_FIXTURE_DIR) + "/swish/evaluator.json"});
    CHECK(*ev.evaluate("kb_l1_25_swish", "__global__ void swish_kernel").runtime_ms == 9.56);
    CHECK(*ev.evaluate("kb_l1_25_swish", "swish_vec4_kernel __ldg").runtime_ms == 7.76);
    CHECK_FALSE(ev.evaluate("kb_l1_25_swish", "nothing").compile);
}

TEST_CASE("subprocess protocol faults are typed and recoverable") {
    auto ev = worker({}, 300ms);
    CHECK(kind_of([&] { (void)ev.evaluate("t", "@worker:garbage"); }) == TransportKind::Protocol);
    CHECK(ev.evaluate("t", "ok").executable());
    CHECK(kind_of([&] { (void)ev.evaluate("t", "@worker:violate"); }) == TransportKind::Protocol);
    CHECK(ev.evaluate("t", "ok").executable());
    CHECK(kind_of([&] { (void)ev.evaluate("t", "@worker:exit"); }) == TransportKind::Network);
    CHECK(ev.evaluate("t", "ok").executable());
    const auto start = std::chrono::steady_clock::now();
    CHECK(kind_of([&] { (void)ev.evaluate("t", "@worker:hang"); }) == TransportKind::Timeout);
    CHECK(std::chrono::steady_clock::now() - start < 3s);
    CHECK(ev.evaluate("t", "ok").executable());
}

TEST_CASE("missing worker binary") {
    SubprocessEvaluatorConfig cfg;
    cfg.command = {"/nonexistent/evaluator-worker"};
    cfg.timeout = 500ms;
    SubprocessEvaluator ev(cfg);
    CHECK(kind_of([&] { (void)ev.evaluate("t", "x"); }) == TransportKind::Network);
    SubprocessEvaluatorConfig empty;
    CHECK_THROWS_AS(SubprocessEvaluator{empty}, ConfigError);
}

TEST_CASE("simulated step arithmetic, caps and failures") {
    SimulatedEnvironment env(toy_spec());
    auto fb = simulated_step(env, Action{"g_a", "l_half", ""});
    CHECK(fb.compile);
    CHECK(fb.correct);
    CHECK(*fb.runtime_ms == 5.0);
    fb = simulated_step(env, Action{"g_a", "l_half", ""});
    CHECK(*fb.runtime_ms == 5.0);  // beyond the cap

    fb = simulated_step(env, Action{"g_a", "l_needs_b", ""});
    CHECK(*fb.runtime_ms == doctest::Approx(6.25));  // unmet precondition
    fb = simulated_step(env, Action{"g_c", "l_strict", ""});
    CHECK(fb.compile);
    CHECK_FALSE(fb.correct);
    CHECK_FALSE(fb.runtime_ms);
    CHECK(env.runtime_ms() == doctest::Approx(6.25));

    fb = simulated_step(env, Action{"g_b", "l_b", ""});
    CHECK(*fb.runtime_ms == doctest::Approx(5.625));
    fb = simulated_step(env, Action{"g_c", "l_strict", ""});
    CHECK(*fb.runtime_ms == doctest::Approx(5.625 * 0.7));
    fb = simulated_step(env, Action{"g_c", "l_c", ""});
    CHECK_FALSE(fb.compile);
    CHECK_FALSE(fb.runtime_ms);
    CHECK(fb.failure_detail == "clash");
    // A repaired (guarded) edit passes compile rules and keeps part of the gain.
    fb = simulated_step(env, Action{"g_c", "l_c", ""}, true);
    CHECK(*fb.runtime_ms == doctest::Approx(5.625 * 0.7 * std::sqrt(0.6)));
    CHECK(env.runtime_ms() > 0.0);
}

TEST_CASE("permutations of a commutative action multiset agree") {
    const auto spec = default_simulated_spec();
    std::vector<std::pair<NodeId, NodeId>> free_actions;
    for (const auto& [local, e] : spec.effects) {
        if (e.requires_globals.empty()) free_actions.emplace_back(e.global, local);
    }
    auto conflicting = [&](const std::vector<std::pair<NodeId, NodeId>>& set) {
        for (const auto& r : spec.failures) {
            const bool has_after = std::any_of(set.begin(), set.end(), [&](auto& a) { return a.first == r.after_global; });
            const bool has_target = std::any_of(set.begin(), set.end(), [&](auto& a) {
                return r.local.empty() ? a.first == r.global : a.second == r.local;
            });
            if (has_after && has_target) return true;
        }
        return false;
    };
    std::mt19937_64 rng(17);
    int tested = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<std::pair<NodeId, NodeId>> set;
        const auto n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) set.push_back(free_actions[rng() % free_actions.size()]);
        if (conflicting(set)) continue;
        ++tested;
        double first = 0.0;
        for (int perm = 0; perm < 6; ++perm) {
            std::shuffle(set.begin(), set.end(), rng);
            SimulatedEnvironment env(perturbed_spec(spec, trial, "task"));
            for (const auto& [g, l] : set) CHECK(simulated_step(env, Action{g, l, ""}).executable());
            if (perm == 0) first = env.runtime_ms();
            CHECK(env.runtime_ms() == doctest::Approx(first).epsilon(1e-12));
        }
    }
    CHECK(tested > 500);
}

TEST_CASE("default environment calibration") {
    const auto spec = default_simulated_spec(10.0);
    const MemoryBank bank = init_default_bank();
    CHECK(spec.effects.size() == bank.locals().size());
    for (const auto& [local, e] : spec.effects) {
        CHECK(bank.local(local).parent_global_id == e.global);
        CHECK(e.factor > 0.0);
        CHECK(e.factor < 1.0);
    }
    // Best 6-step sequence by exhaustive search.
    double best = spec.base_runtime_ms;
    std::function<void(const SimulatedEnvironment&, int)> search = [&](const SimulatedEnvironment& env, int depth) {
        best = std::min(best, env.runtime_ms());
        if (depth == 6) return;
        for (const auto& [local, e] : spec.effects) {
            SimulatedEnvironment next = env;
            if (simulated_step(next, Action{e.global, local, ""}).executable() && next.runtime_ms() < env.runtime_ms()) {
                search(next, depth + 1);
            }
        }
    };
    search(SimulatedEnvironment(spec), 0);
    const double speedup = spec.base_runtime_ms / best;
    MESSAGE("best 6-step speedup: " << speedup);
    CHECK(speedup > 1.8);
    CHECK(speedup < 2.5);
}

TEST_CASE("simulated evaluator replays applied actions") {
    SimulatedEvaluator ev(toy_spec(), 1, 0.0);
    ev.set_task_spec("toy", toy_spec());
    std::string code = "kernel\n";
    CHECK(*ev.evaluate("toy", code).runtime_ms == 10.0);
    code += encode_applied({"g_a", "l_half", false}) + "\n";
    CHECK(*ev.evaluate("toy", code).runtime_ms == 5.0);
    code += encode_applied({"g_b", "l_b", false}) + "\n";
    code += encode_applied({"g_c", "l_c", false}) + "\n";
    CHECK_FALSE(ev.evaluate("toy", code).compile);
    CHECK(ev.evaluate("toy", code) == ev.evaluate("toy", code));
    CHECK_FALSE(ev.evaluate("toy", "  \n").compile);
    CHECK(ev.reference_runtime_ms("toy", "") == 10.0);

    const AppliedAction a{"g_x", "l_y", true};
    CHECK(decode_applied("foo\n" + encode_applied(a) + "\nbar") == std::vector<AppliedAction>{a});
}

TEST_CASE("per-task perturbation is deterministic") {
    const auto base = default_simulated_spec();
    const auto a1 = perturbed_spec(base, 5, "task_a");
    const auto a2 = perturbed_spec(base, 5, "task_a");
    const auto b = perturbed_spec(base, 5, "task_b");
    const auto c = perturbed_spec(base, 6, "task_a");
    CHECK(a1.base_runtime_ms == a2.base_runtime_ms);
    CHECK(a1.effects.at("l_g_par_warp_lane_remap").factor == a2.effects.at("l_g_par_warp_lane_remap").factor);
    CHECK(a1.base_runtime_ms != b.base_runtime_ms);
    CHECK(a1.base_runtime_ms != c.base_runtime_ms);
    for (const auto& [id, e] : a1.effects) {
        CHECK(e.factor > 0.0);
        CHECK(e.factor < 1.0);
    }
}

TEST_CASE("simulated backend") {
    SimulatedBackend be;
    BackendRequest sel;
    sel.phase = Phase::LocalSelection;
    sel.candidate_ids = {"l_1", "l_2", "l_3"};
    sel.current_code = "k\n" + encode_applied({"g", "l_1", false}) + "\n";
    CHECK(json::parse(extract_code(be.complete(sel).text))["selected_local_node"] == "l_2");

    BackendRequest gen;
    gen.phase = Phase::CodeGeneration;
    gen.current_code = "k\n";
    gen.action = Action{"g", "l_2", ""};
    const auto code = extract_code(be.complete(gen).text);
    CHECK(decode_applied(code) == std::vector<AppliedAction>{{"g", "l_2", false}});

    BackendRequest fix;
    fix.phase = Phase::Repair;
    fix.current_code = code;
    const auto fixed = extract_code(be.complete(fix).text);
    CHECK(decode_applied(fixed) == std::vector<AppliedAction>{{"g", "l_2", true}});
    fix.current_code = fixed;
    CHECK(extract_code(be.complete(fix).text) == fixed);
}
