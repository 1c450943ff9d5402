#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scr {

// Stable error codes. The string forms are part of the CLI contract and are
// printed as "error[<code>]" on stderr.
enum class ErrorCode {
    NotARepository,
    EmptyChangeSet,
    DiffParseError,
    FileNotFound,
    BinaryFile,
    SchemaError,
    DuplicateRuleId,
    CycleDetected,
    UnknownCwe,
    BudgetExhausted,
    BackendError,
    SchemaViolation,
    UnknownCommentId,
    SarifParseError,
    UnsupportedFormat,
    RepoUnavailable,
    CloneFailed,
    CommitNotFound,
    StagedDiffMismatch,
    LineTraceAmbiguous,
    SheetSchemaError,
    EmptyVerifiedSet,
    JudgeProtocolError,
    ConfigError,
    IoError,
    ProcessError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Error(ErrorCode code, const std::string& message, std::size_t offset)
        : std::runtime_error(message), code_(code), offset_(offset) {}

    ErrorCode code() const noexcept { return code_; }

    // Byte offset into the parsed input, for parse errors.
    std::optional<std::size_t> offset() const noexcept { return offset_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> offset_;
};

}  // namespace scr
