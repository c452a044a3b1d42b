// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace modalprobe {

enum class ErrorCode {
    validation,    // a type invariant or table contract was violated
    io,            // filesystem read/write failure
    precondition,  // caller passed arguments outside an operation's domain
    numeric,       // non-finite values or undefined statistics
    usage,         // bad command-line invocation
};

// Stable, machine-parsable token for each code (printed by the CLI).
constexpr std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::validation: return "E_VALIDATION";
        case ErrorCode::io: return "E_IO";
        case ErrorCode::precondition: return "E_PRECONDITION";
        case ErrorCode::numeric: return "E_NUMERIC";
        case ErrorCode::usage: return "E_USAGE";
    }
    return "E_UNKNOWN";
}

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

}  // namespace modalprobe
