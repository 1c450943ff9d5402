#include "scr/error.hpp"

namespace scr {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotARepository: return "NotARepository";
        case ErrorCode::EmptyChangeSet: return "EmptyChangeSet";
        case ErrorCode::DiffParseError: return "DiffParseError";
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::BinaryFile: return "BinaryFile";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::DuplicateRuleId: return "DuplicateRuleId";
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::UnknownCwe: return "UnknownCwe";
        case ErrorCode::BudgetExhausted: return "BudgetExhausted";
        case ErrorCode::BackendError: return "BackendError";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::UnknownCommentId: return "UnknownCommentId";
        case ErrorCode::SarifParseError: return "SarifParseError";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::RepoUnavailable: return "RepoUnavailable";
        case ErrorCode::CloneFailed: return "CloneFailed";
        case ErrorCode::CommitNotFound: return "CommitNotFound";
        case ErrorCode::StagedDiffMismatch: return "StagedDiffMismatch";
        case ErrorCode::LineTraceAmbiguous: return "LineTraceAmbiguous";
        case ErrorCode::SheetSchemaError: return "SheetSchemaError";
        case ErrorCode::EmptyVerifiedSet: return "EmptyVerifiedSet";
        case ErrorCode::JudgeProtocolError: return "JudgeProtocolError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ProcessError: return "ProcessError";
    }
    return "Unknown";
}

}  // namespace scr
