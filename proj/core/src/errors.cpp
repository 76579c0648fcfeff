#include "gazeseg/errors.hpp"

namespace gazeseg {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::DegenerateCalibration: return "DegenerateCalibration";
    case ErrorKind::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorKind::NoPromptPoints: return "NoPromptPoints";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TruncatedData: return "TruncatedData";
    case ErrorKind::SliceOutOfRange: return "SliceOutOfRange";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::NotPrepared: return "NotPrepared";
    case ErrorKind::EmptyPrompt: return "EmptyPrompt";
    case ErrorKind::CorruptLog: return "CorruptLog";
    case ErrorKind::TimestampRegression: return "TimestampRegression";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::UnknownImage: return "UnknownImage";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
{
}

void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, message);
}

} // namespace gazeseg
