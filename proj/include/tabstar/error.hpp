#ifndef TABSTAR_ERROR_HPP
#define TABSTAR_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tabstar {

enum class ErrorKind {
    UnreadableSource,
    EmptySource,
    RaggedRows,
    AmbiguousStructure,
    NestedTableUnsupported,
    NormalizationFailed,
    NotACrossTable,
    InconsistentCompositeArity,
    HeaderRepairFailed,
    UnknownAttribute,
    NoCandidateMeasures,
    UnknownAttributeInFormula,
    MalformedFormula,
    TooFewRows,
    DuplicateDimensionName,
    InvariantViolation,
    NonNumericMeasureValue,
    InvalidOverrideDocument,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::UnreadableSource: return "UnreadableSource";
    case ErrorKind::EmptySource: return "EmptySource";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::AmbiguousStructure: return "AmbiguousStructure";
    case ErrorKind::NestedTableUnsupported: return "NestedTableUnsupported";
    case ErrorKind::NormalizationFailed: return "NormalizationFailed";
    case ErrorKind::NotACrossTable: return "NotACrossTable";
    case ErrorKind::InconsistentCompositeArity: return "InconsistentCompositeArity";
    case ErrorKind::HeaderRepairFailed: return "HeaderRepairFailed";
    case ErrorKind::UnknownAttribute: return "UnknownAttribute";
    case ErrorKind::NoCandidateMeasures: return "NoCandidateMeasures";
    case ErrorKind::UnknownAttributeInFormula: return "UnknownAttributeInFormula";
    case ErrorKind::MalformedFormula: return "MalformedFormula";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::DuplicateDimensionName: return "DuplicateDimensionName";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::NonNumericMeasureValue: return "NonNumericMeasureValue";
    case ErrorKind::InvalidOverrideDocument: return "InvalidOverrideDocument";
    }
    return "Unknown";
}

/// All library failures are reported through this exception. `kind()` lets
/// callers branch without string matching; `offset()` is meaningful only for
/// MalformedFormula (byte position of the parse failure).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::size_t offset = npos)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind),
          offset_(offset) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    ErrorKind kind_;
    std::size_t offset_;
};

} // namespace tabstar

#endif
