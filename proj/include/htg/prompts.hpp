#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "htg/memory.hpp"

namespace htg {

/// Text templates with `{{name}}` placeholders.
struct PromptTemplates {
    std::string local_selection;
    std::string code_generation;
    std::string repair;

    /// Built-in copies of assets/templates/*.txt.
    static PromptTemplates defaults();
    /// Reads <dir>/{local_selection,code_generation,repair}.txt; missing files
    /// keep the built-in text.
    static PromptTemplates load(const std::filesystem::path& dir);
};

/// Substitutes every `{{name}}`. Throws ConfigError for placeholders without a
/// value or an unterminated `{{`.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

std::string render_state_block(const DecisionState& state);
std::string render_global_block(const GlobalNode& node);

/// Evidence chosen for a prompt, most recent first.
struct RetrievedEvidence {
    std::vector<const EvidenceItem*> items;
    /// True when no item matched the requested bucket and recent items were used instead.
    bool fallback = false;
};

/// Up to k items alternating positive/negative, newest first.
RetrievedEvidence recent_evidence(const LocalNode& node, std::size_t k);
/// Up to k items whose state digest equals `key`; falls back to recent_evidence.
RetrievedEvidence matching_evidence(const LocalNode& node, const BucketKey& key, std::size_t k);

std::string render_evidence(const RetrievedEvidence& evidence);
std::string render_local_card(const LocalNode& node, const RetrievedEvidence& evidence);

}  // namespace htg
