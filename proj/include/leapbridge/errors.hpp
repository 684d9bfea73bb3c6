#pragma once

#include <stdexcept>
#include <string>

namespace leapbridge {

// Base for all toolkit errors so callers can catch one type at the CLI edge.
struct Error : std::runtime_error {
    explicit Error(const std::string & msg) : std::runtime_error(msg) {}
};

// cot: segmentation / joining
struct EmptyInputError : Error {
    explicit EmptyInputError(const std::string & msg) : Error(msg) {}
};
struct InvalidStepError : Error {
    explicit InvalidStepError(const std::string & msg) : Error(msg) {}
};

// injector
struct TooShortError : Error {
    explicit TooShortError(const std::string & msg) : Error(msg) {}
};
struct GapOutOfRangeError : Error {
    explicit GapOutOfRangeError(const std::string & msg) : Error(msg) {}
};

// prompts
struct NoLeapAvailableError : Error {
    explicit NoLeapAvailableError(const std::string & msg) : Error(msg) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string & msg) : Error(msg) {}
};

// augmentor
struct EmptyContentError : Error {
    explicit EmptyContentError(const std::string & msg) : Error(msg) {}
};
struct MissingScoreError : Error {
    explicit MissingScoreError(const std::string & msg) : Error(msg) {}
};

// metrics / io
struct BackendUnavailableError : Error {
    explicit BackendUnavailableError(const std::string & msg) : Error(msg) {}
};
struct SchemaError : Error {
    SchemaError(const std::string & msg, size_t line) : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    size_t line_number;
};

// model client
struct HttpError : Error {
    HttpError(const std::string & msg, int status_code) : Error(msg), status(status_code) {}
    int status;
};
struct AuthError : Error {
    explicit AuthError(const std::string & msg) : Error(msg) {}
};
struct RateLimitedError : Error {
    explicit RateLimitedError(const std::string & msg) : Error(msg) {}
};
struct TimeoutError : Error {
    explicit TimeoutError(const std::string & msg) : Error(msg) {}
};

}  // namespace leapbridge
