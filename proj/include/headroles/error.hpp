#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace headroles {

// Data-level failures. Anything a user can cause by handing over a bad bundle,
// a bad parse, or a degenerate sample ends up here; programming errors use
// std::logic_error instead.
enum class ErrorKind {
    MissingFile,
    MalformedFile,
    ShapeMismatch,
    RowSumViolation,
    AnnotationMismatch,
    MalformedLine,
    NonIntegerHead,
    HeadOutOfRange,
    GapInAlignment,
    WordCountMismatch,
    EmptySieve,
    NoEligibleSequence,
    InsufficientSample,
    DegenerateInput,
    RoleSetMismatch,
    UnknownRole,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace headroles
