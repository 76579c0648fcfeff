#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gazeseg {

enum class ErrorKind {
    DegenerateCalibration,
    NonMonotonicTimestamp,
    NoPromptPoints,
    ModeMismatch,
    BadMagic,
    DimensionMismatch,
    TruncatedData,
    SliceOutOfRange,
    LengthMismatch,
    IoFailure,
    BackendUnavailable,
    NotPrepared,
    EmptyPrompt,
    CorruptLog,
    TimestampRegression,
    InvalidState,
    UnknownImage,
    InvalidArgument,
    BadConfig,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (and the client channel) can react without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

} // namespace gazeseg
