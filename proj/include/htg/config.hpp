#pragma once

#include <filesystem>
#include <memory>

#include "json.hpp"

#include "htg/backend.hpp"
#include "htg/cost.hpp"
#include "htg/engine.hpp"
#include "htg/evaluator.hpp"

namespace htg {

/// Parsed run configuration. Adapter sections stay as JSON so each task can
/// build its own backend/evaluator instances.
struct RunSettings {
    EngineConfig engine;
    nlohmann::json backend = nlohmann::json{{"kind", "simulated"}};
    nlohmann::json evaluator = nlohmann::json{{"kind", "simulated"}};
    PriceSheet prices;
    /// Relative paths inside the configuration resolve against this directory.
    std::filesystem::path base_dir;
};

/// Throws ParseError (JSON pointer) or ConfigError on bad values.
RunSettings settings_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunSettings load_run_settings(const std::filesystem::path& path);

/// Weights from a 12-element array or an object keyed by feature name.
ScoringWeights weights_from_json(const nlohmann::json& value);

std::unique_ptr<Backend> make_backend(const RunSettings& settings);
std::unique_ptr<Evaluator> make_evaluator(const RunSettings& settings);

}  // namespace htg
