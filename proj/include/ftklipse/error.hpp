#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ftk {

enum class ErrorCode {
    validation,
    not_found,
    integrity,
    corruption,
    missing_evidence,
    io,
    usage,
    monotonicity,
    decode,
    platform,
    manifest,
    launch,
    timeout,
    unsupported_format,
    unavailable,
    generation,
    internal,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every engine failure is an ftk::Error; the code drives CLI exit codes and
// HTTP status mapping.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace ftk
