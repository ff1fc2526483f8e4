#pragma once

#include <stdexcept>
#include <string>

namespace psivolterra {

enum class ErrorCode {
    InvalidArgument,
    GridMismatch,
    Parse,
    Eval,
    NonContractive,
    NoConvergence,
    WindowViolation,
    Config,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure path carries a stable code so the C
/// boundary can translate it into a status value.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace psivolterra
