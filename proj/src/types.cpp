#include "htg/types.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>

#include "htg/errors.hpp"

namespace htg {

const char* to_string(TransportKind kind) noexcept {
    switch (kind) {
        case TransportKind::Network: return "network";
        case TransportKind::Timeout: return "timeout";
        case TransportKind::Auth: return "auth";
        case TransportKind::RateLimit: return "rate_limit";
        case TransportKind::Http: return "http";
        case TransportKind::Protocol: return "protocol";
    }
    return "network";
}

bool EvaluationFeedback::valid() const noexcept {
    if (correct && !compile) return false;
    if (runtime_ms && (!compile || !correct || timeout)) return false;
    if (runtime_ms && !(*runtime_ms > 0.0)) return false;
    return true;
}

const char* to_string(Outcome outcome) noexcept {
    switch (outcome) {
        case Outcome::CompileFail: return "compile_fail";
        case Outcome::CorrectFail: return "correct_fail";
        case Outcome::Regressed: return "regressed";
        case Outcome::Neutral: return "neutral";
        case Outcome::Improved: return "improved";
    }
    return "neutral";
}

Outcome outcome_from_string(std::string_view text) {
    for (auto o : {Outcome::CompileFail, Outcome::CorrectFail, Outcome::Regressed,
                   Outcome::Neutral, Outcome::Improved}) {
        if (text == to_string(o)) return o;
    }
    throw ParseError("", "unknown outcome '" + std::string(text) + "'");
}

const char* to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::Early: return "early";
        case Stage::Mid: return "mid";
        case Stage::Late: return "late";
    }
    return "early";
}

const char* to_string(CorrectnessStatus status) noexcept {
    return status == CorrectnessStatus::NeverFailed ? "never_failed" : "recently_failed";
}

std::string BucketKey::to_string() const {
    return std::string(htg::to_string(stage)) + "|" + dominant_symptom + "|" +
           htg::to_string(correctness);
}

BucketKey BucketKey::parse(std::string_view text) {
    auto first = text.find('|');
    auto last = text.rfind('|');
    if (first == std::string_view::npos || first == last) {
        throw ParseError("", "malformed bucket key '" + std::string(text) + "'");
    }
    BucketKey key;
    auto stage = text.substr(0, first);
    if (stage == "early") key.stage = Stage::Early;
    else if (stage == "mid") key.stage = Stage::Mid;
    else if (stage == "late") key.stage = Stage::Late;
    else throw ParseError("", "unknown stage '" + std::string(stage) + "'");
    key.dominant_symptom = std::string(text.substr(first + 1, last - first - 1));
    auto status = text.substr(last + 1);
    if (status == "never_failed") key.correctness = CorrectnessStatus::NeverFailed;
    else if (status == "recently_failed") key.correctness = CorrectnessStatus::RecentlyFailed;
    else throw ParseError("", "unknown correctness status '" + std::string(status) + "'");
    return key;
}

std::string dominant_symptom(const std::vector<std::string>& symptoms) {
    for (auto tag : symptom::kPriority) {
        if (std::find(symptoms.begin(), symptoms.end(), tag) != symptoms.end()) {
            return std::string(tag);
        }
    }
    if (symptoms.empty()) return std::string(symptom::kNone);
    return *std::min_element(symptoms.begin(), symptoms.end());
}

BucketKey bucket_key(const DecisionState& state) {
    BucketKey key;
    key.stage = state.step <= 2 ? Stage::Early : state.step <= 4 ? Stage::Mid : Stage::Late;
    key.dominant_symptom = dominant_symptom(state.symptoms);
    const int last_fail = state.progress.last_correctness_failure_step;
    key.correctness = (last_fail > 0 && state.step - last_fail <= 2)
                          ? CorrectnessStatus::RecentlyFailed
                          : CorrectnessStatus::NeverFailed;
    return key;
}

std::string digest(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace htg
