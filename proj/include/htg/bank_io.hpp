#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "htg/memory.hpp"

namespace htg {

/// Canonical document: objects key-sorted, arrays in id order, two-space
/// indentation, trailing newline. Identical banks serialize identically.
std::string canonical_text(const MemoryBank& bank);

nlohmann::json bank_to_json(const MemoryBank& bank);
/// Throws SchemaVersionError or ParseError (JSON pointer location).
MemoryBank bank_from_json(const nlohmann::json& doc);

/// Throws ParseError with "line:col" on malformed text.
MemoryBank parse_bank(std::string_view text);

void save_bank(const MemoryBank& bank, const std::filesystem::path& path);
MemoryBank load_bank(const std::filesystem::path& path);

/// Parses JSON text, converting syntax errors to ParseError("line:col").
nlohmann::json parse_json_document(std::string_view text, const std::string& origin = {});
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace htg
