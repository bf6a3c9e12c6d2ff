#include <cmath>

#include "doctest.h"

#include "htg/campaign.hpp"
#include "htg/config.hpp"
#include "htg/default_bank.hpp"
#include "htg/engine.hpp"
#include "htg/simulated.hpp"
#include "test_paths.hpp"

using namespace htg;

namespace {

const std::string kSwishDir = std::string(HTG_FIXTURE_DIR) + "/swish";

struct SwishRun {
    TrajectoryRecord record;
    MemoryBank bank;
};

SwishRun run_swish(EngineConfig* override_config = nullptr) {
    const RunSettings settings = load_run_settings(kSwishDir + "/config.json");
    const auto tasks = load_tasks(kSwishDir + "/tasks.json");
    REQUIRE(tasks.size() == 1);
    auto backend = make_backend(settings);
    auto evaluator = make_evaluator(settings);
    MemoryBank bank = fork_writable(init_default_bank());
    const EngineConfig& config = override_config ? *override_config : settings.engine;
    auto rec = run_task(tasks[0], bank, *backend, *evaluator, config);
    return {std::move(rec), std::move(bank)};
}

Task sim_task(std::string id, std::vector<NodeId> schedule = {}) {
    Task t;
    t.task_id = std::move(id);
    t.initial_code = "kernel\n";
    t.global_schedule = std::move(schedule);
    return t;
}

/// Default table with no failure rules and no unmet penalties.
SimulatedEnvironmentSpec clean_spec() {
    auto s = default_simulated_spec();
    s.failures.clear();
    for (auto& [id, e] : s.effects) e.requires_globals.clear();
    return s;
}

class FailingAfter final : public Evaluator {
public:
    FailingAfter(Evaluator& inner, int ok_calls) : inner_(inner), left_(ok_calls) {}
    EvaluationFeedback evaluate(const std::string& task_id, const std::string& source) override {
        if (left_-- <= 0) throw TransportError(TransportKind::Timeout, "evaluator timed out");
        return inner_.evaluate(task_id, source);
    }
    std::optional<double> reference_runtime_ms(const std::string& task_id, const std::string& code) override {
        return inner_.reference_runtime_ms(task_id, code);
    }

private:
    Evaluator& inner_;
    int left_;
};

int total_calls(const TrajectoryRecord& rec) {
    int n = 0;
    for (const auto& s : rec.steps) n += s.usage.local_selection_calls + s.usage.code_generation_calls + s.usage.repair_calls;
    return n;
}

}  // namespace

TEST_CASE("swish trajectory replay") {
    const auto [rec, bank] = run_swish();
    REQUIRE_FALSE(rec.abort_reason);
    REQUIRE(rec.steps.size() == 3);
    CHECK(rec.reference_runtime_ms == 18.2);
    const double expected[] = {18.2 / 9.56, 18.2 / 7.77, 18.2 / 7.76};
    for (int i = 0; i < 3; ++i) {
        REQUIRE(rec.steps[i].speedup);
        CHECK(std::abs(*rec.steps[i].speedup - expected[i]) < 1e-9);
    }
    CHECK(std::abs(*rec.steps[0].speedup - 1.904) <= 0.001);
    CHECK(std::abs(*rec.steps[1].speedup - 2.342) <= 0.001);
    CHECK(std::abs(*rec.steps[2].speedup - 2.345) <= 0.001);
    CHECK(rec.steps[0].global == "g_data_reuse_locality");
    CHECK(rec.steps[1].global == "g_memory_access_optimization");
    CHECK(rec.steps[2].global == "g_memory_access_optimization");
    CHECK(rec.steps[0].outcome == Outcome::Improved);
    CHECK(rec.steps[1].outcome == Outcome::Improved);
    CHECK(rec.best.step == 3);
    CHECK(rec.best_generated->step == 3);
    for (const auto& s : rec.steps) {
        CHECK(s.usage.local_selection.input_tokens == 5665);
        CHECK(s.usage.code_generation.output_tokens == 9496);
    }

    // Memory: the first step has no predecessor, the others update their edges.
    CHECK(bank.edge_observations() == 2);
    const double g2 = std::log(9.56 / 7.77), g3 = std::log(7.77 / 7.76);
    const auto& e12 = bank.edge("g_data_reuse_locality", "g_memory_access_optimization").aggregate;
    const auto& e23 = bank.edge("g_memory_access_optimization", "g_memory_access_optimization").aggregate;
    CHECK(e12.n == 1);
    CHECK(e12.imm_gain_sum == doctest::Approx(g2).epsilon(1e-12));
    CHECK(e12.fut_gain_sum == doctest::Approx(0.9 * g3).epsilon(1e-12));
    CHECK(e23.n == 1);
    CHECK(e23.imm_gain_sum == doctest::Approx(g3).epsilon(1e-12));
    CHECK(e23.fut_gain_sum == 0.0);
}

TEST_CASE("replays are deterministic") {
    const auto a = run_swish();
    const auto b = run_swish();
    CHECK(a.bank == b.bank);
    REQUIRE(a.record.steps.size() == b.record.steps.size());
    for (std::size_t i = 0; i < a.record.steps.size(); ++i) {
        CHECK(a.record.steps[i].candidate_digest == b.record.steps[i].candidate_digest);
        CHECK(a.record.steps[i].distribution.probs == b.record.steps[i].distribution.probs);
    }
}

TEST_CASE("frozen memory leaves the bank unchanged") {
    EngineConfig config = load_run_settings(kSwishDir + "/config.json").engine;
    config.freeze_memory = true;
    const RunSettings settings = load_run_settings(kSwishDir + "/config.json");
    auto backend = make_backend(settings);
    auto evaluator = make_evaluator(settings);
    const MemoryBank base = init_default_bank();
    MemoryBank bank = base;  // read-only is fine when frozen
    const auto rec = run_task(load_tasks(kSwishDir + "/tasks.json")[0], bank, *backend, *evaluator, config);
    CHECK(rec.steps.size() == 3);
    CHECK(bank == base);

    config.freeze_memory = false;
    CHECK_THROWS_AS(run_task(load_tasks(kSwishDir + "/tasks.json")[0], bank, *backend, *evaluator, config),
                    WriteProtectedError);
}

TEST_CASE("six steps make twelve model calls") {
    SimulatedBackend backend;
    SimulatedEvaluator evaluator(clean_spec(), 3, 0.0);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        MemoryBank bank = fork_writable(init_default_bank());
        EngineConfig config;
        config.policy.seed = seed;
        const auto rec = run_task(sim_task("calls"), bank, backend, evaluator, config);
        REQUIRE(rec.steps.size() == 6);
        CHECK(total_calls(rec) == 12);
        for (const auto& s : rec.steps) {
            CHECK(s.usage.local_selection_calls == 1);
            CHECK(s.usage.code_generation_calls == 1);
            CHECK(s.usage.repair_calls == 0);
        }
        CHECK(bank.edge_observations() == 5);
    }
}

TEST_CASE("single step writes no edge") {
    SimulatedBackend backend;
    SimulatedEvaluator evaluator(clean_spec(), 3, 0.0);
    MemoryBank bank = fork_writable(init_default_bank());
    EngineConfig config;
    config.steps = 1;
    const auto rec = run_task(sim_task("one"), bank, backend, evaluator, config);
    CHECK(rec.steps.size() == 1);
    CHECK(bank.edge_observations() == 0);
    const auto& local = bank.local(rec.steps[0].local);
    CHECK(local.runtime.attempts == 1);
}

TEST_CASE("every candidate failing to compile") {
    ScriptedEvaluator evaluator({}, {}, std::nullopt);
    SimulatedBackend backend;
    Task task = sim_task("broken");
    task.reference_runtime_ms = 5.0;
    MemoryBank bank = fork_writable(init_default_bank());
    EngineConfig config;
    const auto rec = run_task(task, bank, backend, evaluator, config);
    REQUIRE(rec.steps.size() == 6);
    CHECK_FALSE(rec.best_generated);
    CHECK(rec.best.step == 0);
    CHECK(rec.best.speedup == 1.0);
    for (const auto& s : rec.steps) {
        CHECK(s.outcome == Outcome::CompileFail);
        CHECK(s.repaired);
        CHECK(s.usage.repair_calls == 1);
        CHECK(s.best_speedup == 1.0);
    }
    CHECK(total_calls(rec) == 18);
    std::int64_t cfail = 0;
    for (const auto& [k, e] : bank.edges()) cfail += e.aggregate.cfail;
    CHECK(cfail == 5);
}

TEST_CASE("a repaired compile failure counts once") {
    SimulatedBackend backend;
    SimulatedEvaluator evaluator(default_simulated_spec(), 3, 0.0);
    evaluator.set_task_spec("repair", default_simulated_spec());
    MemoryBank bank = fork_writable(init_default_bank());
    EngineConfig config;
    config.steps = 2;
    const auto rec = run_task(sim_task("repair", {"g_boundary_simplification", "g_throughput_optimization"}), bank, backend,
                              evaluator, config);
    REQUIRE(rec.steps.size() == 2);
    CHECK(rec.steps[1].repaired);
    CHECK(rec.steps[1].feedback->executable());
    CHECK(total_calls(rec) == 5);

    config.repair = false;
    MemoryBank bank2 = fork_writable(init_default_bank());
    const auto rec2 = run_task(sim_task("repair", {"g_boundary_simplification", "g_throughput_optimization"}), bank2,
                               backend, evaluator, config);
    CHECK_FALSE(rec2.steps[1].feedback->compile);
    CHECK(total_calls(rec2) == 4);
}

TEST_CASE("a direction without strategies is an invalid step") {
    MemoryBank bank = fork_writable(init_default_bank());
    bank.add_global(GlobalNode{"g_empty", "Empty", {}, {}});
    SimulatedBackend backend;
    SimulatedEvaluator evaluator(clean_spec(), 3, 0.0);
    EngineConfig config;
    config.steps = 3;
    const auto rec = run_task(sim_task("inv", {"g_empty", "g_boundary_simplification", "g_boundary_simplification"}), bank,
                              backend, evaluator, config);
    REQUIRE(rec.steps.size() == 3);
    CHECK(rec.steps[0].invalid);
    CHECK(rec.steps[0].usage.local_selection_calls == 0);
    CHECK(rec.steps[0].usage.code_generation_calls == 0);
    CHECK(rec.steps[1].state.step == 2);
    // The invalid direction still joins the prefix.
    CHECK(bank.edge("g_empty", "g_boundary_simplification").aggregate.n == 1);
    CHECK(bank.edge("g_boundary_simplification", "g_boundary_simplification").aggregate.n == 1);
}

TEST_CASE("transport errors end the task with a partial record") {
    SimulatedBackend backend;
    SimulatedEvaluator inner(clean_spec(), 3, 0.0);
    FailingAfter evaluator(inner, 2);
    MemoryBank bank = fork_writable(init_default_bank());
    EngineConfig config;
    const auto rec = run_task(sim_task("abort"), bank, backend, evaluator, config);
    REQUIRE(rec.abort_reason);
    CHECK(rec.abort_kind == TransportKind::Timeout);
    CHECK(rec.steps.size() == 2);
    CHECK(bank.edge_observations() == 1);
}

TEST_CASE("memory causality and monotone best over random campaigns") {
    SimulatedBackend backend;
    SimulatedEvaluator evaluator(default_simulated_spec(), 9);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        MemoryBank bank = fork_writable(init_default_bank());
        EngineConfig config;
        config.policy.seed = seed;
        std::int64_t expected_obs = 0;
        double prev_best = 1.0;
        const auto rec = run_task(sim_task("prop" + std::to_string(seed % 4)), bank, backend, evaluator, config,
                                  [&](const TrajectoryRecord& r, const StepRecord& s) {
                                      if (s.step >= 2 && s.feedback) ++expected_obs;
                                      CHECK(s.best_speedup >= prev_best);
                                      prev_best = s.best_speedup;
                                      CHECK(r.best.speedup == s.best_speedup);
                                  });
        CHECK(bank.edge_observations() == expected_obs);
        for (const auto& s : rec.steps) {
            CHECK(s.distribution.probs.size() == bank.globals().size());
            if (!s.invalid) CHECK(bank.local(s.local).parent_global_id == s.global);
        }
    }
}
