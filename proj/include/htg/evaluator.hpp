#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "htg/types.hpp"

namespace htg {

/// Compiles, checks and times candidate implementations. Calls return
/// feedback or throw TransportError.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    virtual EvaluationFeedback evaluate(const std::string& task_id, const std::string& source) = 0;

    /// Runtime of the reference implementation. The default evaluates the
    /// initial code and uses its runtime when it is executable.
    virtual std::optional<double> reference_runtime_ms(const std::string& task_id,
                                                       const std::string& initial_code);
};

/// feedback <-> {compile, correct, runtime_ms?, timeout, failure_detail}.
nlohmann::json feedback_to_json(const EvaluationFeedback& feedback);
/// Throws ParseError when fields are missing or the invariants do not hold.
EvaluationFeedback feedback_from_json(const nlohmann::json& doc);

/// Rule table: the first rule whose `contains` substring occurs in the
/// candidate (and whose task matches, if given) decides the feedback.
class ScriptedEvaluator final : public Evaluator {
public:
    struct Rule {
        std::optional<std::string> task_id;
        std::string contains;
        EvaluationFeedback feedback;
    };

    ScriptedEvaluator(std::vector<Rule> rules, std::map<std::string, double> references,
                      std::optional<EvaluationFeedback> fallback);

    static ScriptedEvaluator from_json(const nlohmann::json& script);
    static ScriptedEvaluator from_file(const std::filesystem::path& path);

    EvaluationFeedback evaluate(const std::string& task_id, const std::string& source) override;
    std::optional<double> reference_runtime_ms(const std::string& task_id,
                                               const std::string& initial_code) override;

private:
    std::vector<Rule> rules_;
    std::map<std::string, double> references_;
    std::optional<EvaluationFeedback> fallback_;
};

struct SubprocessEvaluatorConfig {
    /// argv of the worker; argv[0] is resolved through PATH.
    std::vector<std::string> command;
    /// Per-candidate budget passed to the worker.
    std::chrono::milliseconds timeout{60000};
    /// Extra wait for the reply line beyond `timeout`.
    std::chrono::milliseconds grace{5000};
};

/// Long-running child process speaking newline-delimited JSON:
/// request {task_id, candidate_source, timeout_ms}, reply = feedback document.
/// The child is started lazily and restarted after it dies or times out.
class SubprocessEvaluator final : public Evaluator {
public:
    explicit SubprocessEvaluator(SubprocessEvaluatorConfig config);
    ~SubprocessEvaluator() override;

    SubprocessEvaluator(const SubprocessEvaluator&) = delete;
    SubprocessEvaluator& operator=(const SubprocessEvaluator&) = delete;

    EvaluationFeedback evaluate(const std::string& task_id, const std::string& source) override;

private:
    void start();
    void stop();
    std::string read_line(std::chrono::milliseconds budget);

    SubprocessEvaluatorConfig config_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

}  // namespace htg
