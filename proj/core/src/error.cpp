#include "beestar/error.hpp"

namespace beestar {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::DuplicateName: return "duplicate_name";
    case ErrorCode::UnknownKind: return "unknown_kind";
    case ErrorCode::SchemaViolation: return "schema_violation";
    case ErrorCode::UnknownEntity: return "unknown_entity";
    case ErrorCode::UnknownProperty: return "unknown_property";
    case ErrorCode::UnknownEdge: return "unknown_edge";
    case ErrorCode::BadLabelGrammar: return "bad_label_grammar";
    case ErrorCode::DanglingProperty: return "dangling_property";
    case ErrorCode::DuplicateEdge: return "duplicate_edge";
    case ErrorCode::KindImmutable: return "kind_immutable";
    case ErrorCode::ValidationError: return "validation_error";
    case ErrorCode::InvalidValue: return "invalid_value";
    case ErrorCode::TypeError: return "type_error";
    case ErrorCode::CycleError: return "cycle_error";
    case ErrorCode::UnknownScope: return "unknown_scope";
    case ErrorCode::MissingSourceCode: return "missing_source_code";
    case ErrorCode::ExecutorFailure: return "executor_failure";
    case ErrorCode::ProtocolError: return "protocol_error";
    case ErrorCode::UnknownAgent: return "unknown_agent";
    case ErrorCode::AgentUnreachable: return "agent_unreachable";
    case ErrorCode::RegistrationFailure: return "registration_failure";
    case ErrorCode::RegistrationTimeout: return "registration_timeout";
    case ErrorCode::SpawnFailure: return "spawn_failure";
    case ErrorCode::Transport: return "transport";
    }
    return "unknown";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept {
    for (int i = 0; i <= static_cast<int>(ErrorCode::Transport); ++i) {
        const auto code = static_cast<ErrorCode>(i);
        if (error_code_name(code) == name) return code;
    }
    return std::nullopt;
}

} // namespace beestar
