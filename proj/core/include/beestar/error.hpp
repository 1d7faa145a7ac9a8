#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace beestar {

enum class ErrorCode {
    DuplicateName,
    UnknownKind,
    SchemaViolation,
    UnknownEntity,
    UnknownProperty,
    UnknownEdge,
    BadLabelGrammar,
    DanglingProperty,
    DuplicateEdge,
    KindImmutable,
    ValidationError,
    InvalidValue,
    TypeError,
    CycleError,
    UnknownScope,
    MissingSourceCode,
    ExecutorFailure,
    ProtocolError,
    UnknownAgent,
    AgentUnreachable,
    RegistrationFailure,
    RegistrationTimeout,
    SpawnFailure,
    Transport,
};

/// Stable snake_case name used in API error bodies ({"error": name}).
std::string_view error_code_name(ErrorCode code) noexcept;
/// Inverse of error_code_name; nullopt for unknown names.
std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace beestar
