#include "htg/backend.hpp"

namespace htg {

std::int64_t PhaseLimits::for_phase(Phase phase) const noexcept {
    switch (phase) {
        case Phase::LocalSelection: return local_selection;
        case Phase::CodeGeneration: return code_generation;
        case Phase::Repair: return repair;
        case Phase::StateSummarization: return state_summarization;
    }
    return code_generation;
}

BackendReply Backend::complete(const BackendRequest& request) {
    BackendReply reply = do_complete(request);
    if (ledger_ != nullptr) ledger_->record(request.phase, reply.usage);
    return reply;
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string extract_code(const std::string& reply) {
    const auto open = reply.find("```");
    if (open != std::string::npos) {
        const auto body = reply.find('\n', open);
        if (body != std::string::npos) {
            const auto close = reply.find("```", body + 1);
            if (close != std::string::npos) return trim(std::string_view(reply).substr(body + 1, close - body - 1));
        }
    }
    return trim(reply);
}

}  // namespace htg
