#include "htg/json_read.hpp"

#include <cmath>

#include "htg/errors.hpp"

namespace htg {

namespace {

std::string escape_pointer_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

}  // namespace

void Field::fail(const std::string& what) const { throw ParseError(display_path(), what); }

Field Field::operator[](const std::string& key) const {
    if (!value_->is_object()) fail("expected an object");
    auto it = value_->find(key);
    const std::string child = path_ + "/" + escape_pointer_token(key);
    if (it == value_->end()) throw ParseError(child, "missing required field");
    return Field(*it, child);
}

Field Field::operator[](std::size_t index) const {
    if (!value_->is_array()) fail("expected an array");
    if (index >= value_->size()) fail("index " + std::to_string(index) + " out of range");
    return Field((*value_)[index], path_ + "/" + std::to_string(index));
}

bool Field::has(const std::string& key) const {
    return value_->is_object() && value_->contains(key);
}

const nlohmann::json* Field::find(const std::string& key) const {
    if (!value_->is_object()) return nullptr;
    auto it = value_->find(key);
    return it == value_->end() ? nullptr : &*it;
}

std::size_t Field::size() const {
    if (value_->is_array() || value_->is_object()) return value_->size();
    fail("expected an array or object");
}

std::string Field::as_string() const {
    if (!value_->is_string()) fail("expected a string");
    return value_->get<std::string>();
}

std::int64_t Field::as_int() const {
    if (!value_->is_number_integer()) fail("expected an integer");
    return value_->get<std::int64_t>();
}

double Field::as_double() const {
    if (!value_->is_number()) fail("expected a number");
    double v = value_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
}

bool Field::as_bool() const {
    if (!value_->is_boolean()) fail("expected a boolean");
    return value_->get<bool>();
}

std::vector<std::string> Field::as_strings() const {
    if (!value_->is_array()) fail("expected an array of strings");
    std::vector<std::string> out;
    out.reserve(value_->size());
    for (std::size_t i = 0; i < value_->size(); ++i) out.push_back((*this)[i].as_string());
    return out;
}

}  // namespace htg
