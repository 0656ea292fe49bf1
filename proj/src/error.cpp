#include "headroles/error.hpp"

namespace headroles {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::MalformedFile: return "MalformedFile";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::RowSumViolation: return "RowSumViolation";
        case ErrorKind::AnnotationMismatch: return "AnnotationMismatch";
        case ErrorKind::MalformedLine: return "MalformedLine";
        case ErrorKind::NonIntegerHead: return "NonIntegerHead";
        case ErrorKind::HeadOutOfRange: return "HeadOutOfRange";
        case ErrorKind::GapInAlignment: return "GapInAlignment";
        case ErrorKind::WordCountMismatch: return "WordCountMismatch";
        case ErrorKind::EmptySieve: return "EmptySieve";
        case ErrorKind::NoEligibleSequence: return "NoEligibleSequence";
        case ErrorKind::InsufficientSample: return "InsufficientSample";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::RoleSetMismatch: return "RoleSetMismatch";
        case ErrorKind::UnknownRole: return "UnknownRole";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

} // namespace headroles
