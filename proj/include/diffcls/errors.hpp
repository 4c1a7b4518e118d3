#pragma once

#include <stdexcept>
#include <string>

namespace diffcls {

// Invalid build-time configuration (bad dimensions, bad schedule bounds, ...).
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A call-site contract violation (shape mismatch, index out of range, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or truncated on-disk data. The CLI maps this to exit code 3.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// API misuse that cannot be expressed in the type system (e.g. a stale tape).
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline FormatError format_error_at(const std::string& what, std::size_t byte_offset) {
    return FormatError(what + " (at byte offset " + std::to_string(byte_offset) + ")");
}

} // namespace diffcls
