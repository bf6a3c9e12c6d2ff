#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace htg {

/// Read-only cursor over a JSON document that remembers its JSON pointer so
/// structural errors can name where they happened.
class Field {
public:
    explicit Field(const nlohmann::json& value, std::string path = "")
        : value_(&value), path_(std::move(path)) {}

    /// Required member. Throws ParseError when absent or not an object.
    Field operator[](const std::string& key) const;
    Field operator[](std::size_t index) const;

    bool has(const std::string& key) const;
    const nlohmann::json* find(const std::string& key) const;
    std::size_t size() const;

    std::string as_string() const;
    std::int64_t as_int() const;
    double as_double() const;
    bool as_bool() const;
    std::vector<std::string> as_strings() const;

    const nlohmann::json& json_value() const noexcept { return *value_; }
    const std::string& path() const noexcept { return path_; }
    std::string display_path() const { return path_.empty() ? "/" : path_; }

private:
    [[noreturn]] void fail(const std::string& what) const;

    const nlohmann::json* value_;
    std::string path_;
};

}  // namespace htg
