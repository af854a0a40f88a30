#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arsieve {

enum class ErrorKind {
    invalid_input,
    invalid_lag,
    numeric_failure,
    degenerate_spectrum,
    singular_system,
    insufficient_sample,
    refuse_to_generate,
    parse_error,
    config_error,
    io_error,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invalid_lag: return "invalid-lag";
    case ErrorKind::numeric_failure: return "numeric-failure";
    case ErrorKind::degenerate_spectrum: return "degenerate-spectrum";
    case ErrorKind::singular_system: return "singular-system";
    case ErrorKind::insufficient_sample: return "insufficient-sample";
    case ErrorKind::refuse_to_generate: return "refuse-to-generate";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::config_error: return "config-error";
    case ErrorKind::io_error: return "io-error";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto a stable machine-readable prefix.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace arsieve
