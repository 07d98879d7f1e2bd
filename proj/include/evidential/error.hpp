#ifndef EVIDENTIAL_ERROR_HPP
#define EVIDENTIAL_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evidential {

enum class Errc {
    EmptyEvidence,
    AllZeroScores,
    InvalidScore,
    InvalidMass,
    DimensionMismatch,
    UnknownLabel,
    FrameMismatch,
    TotalConflict,
    OutOfRange,
    ParseError,
    ValidationError,
    EmptyHistory,
    NonPositiveFactor,
    InvalidConfig,
    EmptyValidationSet,
    DegenerateBox,
    IndexOutOfRange,
    NoClasses,
    MalformedXml,
    MissingField,
    InvalidBox,
    RangeError,
    IoError,
};

constexpr std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::EmptyEvidence: return "EmptyEvidence";
    case Errc::AllZeroScores: return "AllZeroScores";
    case Errc::InvalidScore: return "InvalidScore";
    case Errc::InvalidMass: return "InvalidMass";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::FrameMismatch: return "FrameMismatch";
    case Errc::TotalConflict: return "TotalConflict";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::EmptyHistory: return "EmptyHistory";
    case Errc::NonPositiveFactor: return "NonPositiveFactor";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::EmptyValidationSet: return "EmptyValidationSet";
    case Errc::DegenerateBox: return "DegenerateBox";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NoClasses: return "NoClasses";
    case Errc::MalformedXml: return "MalformedXml";
    case Errc::MissingField: return "MissingField";
    case Errc::InvalidBox: return "InvalidBox";
    case Errc::RangeError: return "RangeError";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

/// Single exception type for the library. `where()` carries a line number,
/// record index or fold step when the failure has a location.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::optional<std::size_t> where = {})
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), where_(where)
    {
    }

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> where() const noexcept { return where_; }

private:
    Errc code_;
    std::optional<std::size_t> where_;
};

} // namespace evidential

#endif // EVIDENTIAL_ERROR_HPP
