#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pathan {

enum class ErrorCode {
    IoError,
    SyntaxError,
    DuplicateName,
    InvalidName,
    NonRectangular,
    TooFewObservations,
    TooFewVariables,
    MissingN,
    Asymmetric,
    DiagonalNotOne,
    EntryOutOfRange,
    NotPositiveSemidefinite,
    ConstantVariable,
    CollinearColumns,
    SingularSubmatrix,
    SingularPredictors,
    InsufficientN,
    UnknownVariable,
    CycleDetected,
    SelfLoop,
    DuplicateEdge,
    CovaryOnEndogenous,
    MissingCoefficient,
    NotEndogenous,
    InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::InvalidName: return "InvalidName";
    case ErrorCode::NonRectangular: return "NonRectangular";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::TooFewVariables: return "TooFewVariables";
    case ErrorCode::MissingN: return "MissingN";
    case ErrorCode::Asymmetric: return "Asymmetric";
    case ErrorCode::DiagonalNotOne: return "DiagonalNotOne";
    case ErrorCode::EntryOutOfRange: return "EntryOutOfRange";
    case ErrorCode::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorCode::ConstantVariable: return "ConstantVariable";
    case ErrorCode::CollinearColumns: return "CollinearColumns";
    case ErrorCode::SingularSubmatrix: return "SingularSubmatrix";
    case ErrorCode::SingularPredictors: return "SingularPredictors";
    case ErrorCode::InsufficientN: return "InsufficientN";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::CovaryOnEndogenous: return "CovaryOnEndogenous";
    case ErrorCode::MissingCoefficient: return "MissingCoefficient";
    case ErrorCode::NotEndogenous: return "NotEndogenous";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a stable
/// code; what() is "<Code>: <detail>" on a single line.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace pathan
