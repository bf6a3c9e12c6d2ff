#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace htg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unknown global/local node id.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Mutation attempted on a bank whose meta.writable flag is false.
class WriteProtectedError : public Error {
public:
    using Error::Error;
};

/// Unsupported or missing schema_version in a persisted document.
class SchemaVersionError : public Error {
public:
    using Error::Error;
};

/// Malformed document. `location` is "line:col" for syntax errors or a
/// JSON pointer for structural ones.
class ParseError : public Error {
public:
    ParseError(std::string location, std::string message)
        : Error(location.empty() ? message : location + ": " + message),
          location_(std::move(location)),
          message_(std::move(message)) {}

    const std::string& location() const noexcept { return location_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string location_;
    std::string message_;
};

/// Invalid user configuration (bad flag values, missing credentials, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read, written or created.
class FilesystemError : public Error {
public:
    using Error::Error;
};

class NoCandidatesError : public Error {
public:
    using Error::Error;
};

/// The selected global direction has no local strategy to apply.
class InvalidStepError : public Error {
public:
    using Error::Error;
};

enum class TransportKind { Network, Timeout, Auth, RateLimit, Http, Protocol };

const char* to_string(TransportKind kind) noexcept;

/// Backend or evaluator could not be reached or answered out of contract.
class TransportError : public Error {
public:
    TransportError(TransportKind kind, const std::string& what) : Error(what), kind_(kind) {}

    TransportKind kind() const noexcept { return kind_; }
    bool transient() const noexcept {
        return kind_ == TransportKind::Network || kind_ == TransportKind::Timeout ||
               kind_ == TransportKind::RateLimit || kind_ == TransportKind::Http;
    }

private:
    TransportKind kind_;
};

/// Banks that cannot be merged because their node/edge topology differs.
class MergeConflictError : public Error {
public:
    MergeConflictError(std::vector<std::string> ids, const std::string& what)
        : Error(what), ids_(std::move(ids)) {}

    const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    std::vector<std::string> ids_;
};

}  // namespace htg
