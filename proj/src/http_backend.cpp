#include <cstdlib>

#include "httplib.h"

#include "htg/backend.hpp"
#include "htg/errors.hpp"

namespace htg {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("http backend needs base_url");
    if (config_.model.empty()) throw ConfigError("http backend needs a model id");
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("credential environment variable '" + config_.api_key_env + "' is not set");
        }
        api_key_ = key;
    }
}

namespace {

const json* at_pointer(const json& doc, const std::string& pointer) {
    if (pointer.empty()) return nullptr;
    try {
        const json::json_pointer ptr(pointer);
        return doc.contains(ptr) ? &doc.at(ptr) : nullptr;
    } catch (const json::exception&) {
        return nullptr;
    }
}

TransportKind kind_for_status(int status) {
    if (status == 401 || status == 403) return TransportKind::Auth;
    if (status == 429) return TransportKind::RateLimit;
    if (status == 408 || status == 504) return TransportKind::Timeout;
    if (status >= 500) return TransportKind::Http;
    return TransportKind::Protocol;
}

}  // namespace

BackendReply HttpBackend::attempt(const BackendRequest& request) {
    httplib::Client client(config_.base_url);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    const std::int64_t limit = config_.limits.for_phase(request.phase);
    json body{{"model", config_.model},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
              {config_.max_tokens_field, limit},
              {"temperature", config_.temperature}};
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace(config_.auth_header, config_.auth_prefix + api_key_);

    auto result = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!result) {
        const auto err = result.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
        throw TransportError(timed_out ? TransportKind::Timeout : TransportKind::Network,
                             "backend request failed: " + httplib::to_string(err));
    }
    if (result->status < 200 || result->status >= 300) {
        throw TransportError(kind_for_status(result->status),
                             "backend returned HTTP " + std::to_string(result->status));
    }

    json doc;
    try {
        doc = json::parse(result->body);
    } catch (const json::parse_error& e) {
        throw TransportError(TransportKind::Protocol, std::string("backend reply is not JSON: ") + e.what());
    }
    const json* text = at_pointer(doc, config_.text_pointer);
    if (text == nullptr || !text->is_string()) {
        throw TransportError(TransportKind::Protocol, "backend reply has no text at " + config_.text_pointer);
    }
    BackendReply reply;
    reply.text = text->get<std::string>();
    if (const json* in = at_pointer(doc, config_.input_tokens_pointer); in && in->is_number_integer()) {
        reply.usage.input_tokens = in->get<std::int64_t>();
    }
    if (const json* out = at_pointer(doc, config_.output_tokens_pointer); out && out->is_number_integer()) {
        reply.usage.output_tokens = out->get<std::int64_t>();
    }
    const json* finish = at_pointer(doc, config_.finish_pointer);
    reply.truncated = (finish && finish->is_string() && finish->get<std::string>() == config_.length_finish_value) ||
                      reply.usage.output_tokens >= limit;
    return reply;
}

BackendReply HttpBackend::do_complete(const BackendRequest& request) {
    try {
        return attempt(request);
    } catch (const TransportError& err) {
        if (!err.transient()) throw;
    }
    return attempt(request);
}

}  // namespace htg
