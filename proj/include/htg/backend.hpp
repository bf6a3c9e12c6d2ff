#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "htg/cost.hpp"
#include "htg/types.hpp"

namespace htg {

struct BackendRequest {
    Phase phase = Phase::LocalSelection;
    int step = 0;
    std::string task_id;
    std::string prompt;
    /// Local selection: candidate ids in engine rank order.
    std::vector<NodeId> candidate_ids;
    /// Implementation the request is about (input code, or the failed code for repair).
    std::string current_code;
    /// Code generation and repair: the action being applied.
    std::optional<Action> action;
};

struct BackendReply {
    std::string text;
    TokenUsage usage;
    /// Output hit the per-phase limit (or the provider reported a length stop).
    bool truncated = false;
};

/// Per-phase output-token limits.
struct PhaseLimits {
    std::int64_t local_selection = 2048;
    std::int64_t code_generation = 16384;
    std::int64_t repair = 16384;
    std::int64_t state_summarization = 2048;

    std::int64_t for_phase(Phase phase) const noexcept;
};

/// Model backend. Every call returns a reply or throws TransportError; usage
/// of each successful call is added to the attached ledger.
class Backend {
public:
    virtual ~Backend() = default;

    BackendReply complete(const BackendRequest& request);
    void attach_ledger(TokenLedger* ledger) noexcept { ledger_ = ledger; }

protected:
    virtual BackendReply do_complete(const BackendRequest& request) = 0;

private:
    TokenLedger* ledger_ = nullptr;
};

/// Contents of the first fenced code block, else the whole reply trimmed.
std::string extract_code(const std::string& reply);

/// Replies from a JSON script. Entries are matched on (phase, task, step) or
/// (phase, task, prompt substring); see README for the format.
class MockBackend final : public Backend {
public:
    struct Entry {
        Phase phase = Phase::LocalSelection;
        std::optional<std::string> task_id;
        std::optional<int> step;
        std::optional<std::string> when_contains;
        // Exactly one reply form is used, in this precedence.
        std::optional<std::string> select;
        std::map<NodeId, double> scores;
        std::optional<std::string> code;
        std::optional<std::string> reply;
        std::string rationale;
        std::string edit_plan;
        TokenUsage usage;
    };

    MockBackend() = default;
    explicit MockBackend(std::vector<Entry> entries);

    /// Throws ParseError on malformed scripts, naming duplicate keys.
    /// `base_dir` resolves "code_file" entries.
    static MockBackend from_json(const nlohmann::json& script, const std::filesystem::path& base_dir = {});
    static MockBackend from_file(const std::filesystem::path& path);

    const std::vector<Entry>& entries() const noexcept { return entries_; }

protected:
    BackendReply do_complete(const BackendRequest& request) override;

private:
    const Entry* match(const BackendRequest& request) const;

    std::vector<Entry> entries_;
};

struct HttpBackendConfig {
    /// e.g. "https://api.example.com" (scheme + host[:port]).
    std::string base_url;
    std::string path = "/v1/chat/completions";
    std::string model;
    /// Environment variable holding the credential; empty disables auth.
    std::string api_key_env;
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
    std::chrono::milliseconds timeout{120000};
    PhaseLimits limits;
    double temperature = 0.0;
    /// JSON pointers into the provider response.
    std::string text_pointer = "/choices/0/message/content";
    std::string finish_pointer = "/choices/0/finish_reason";
    std::string input_tokens_pointer = "/usage/prompt_tokens";
    std::string output_tokens_pointer = "/usage/completion_tokens";
    std::string length_finish_value = "length";
    /// Request field that carries the output limit.
    std::string max_tokens_field = "max_tokens";
};

/// Chat-completion client. Throws ConfigError at construction when the
/// credential variable is unset, so no request is ever attempted without it.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    const HttpBackendConfig& config() const noexcept { return config_; }

protected:
    BackendReply do_complete(const BackendRequest& request) override;

private:
    BackendReply attempt(const BackendRequest& request);

    HttpBackendConfig config_;
    std::string api_key_;
};

}  // namespace htg
