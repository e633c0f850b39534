#pragma once

#include <stdexcept>
#include <string>

namespace farkas {

enum class ErrorCode {
    Parse,
    InvalidModel,
    UnknownLabel,
    InitialStateDropped,
    EcFreeRequired,
    ShapeMismatch,
    SolverUnknown,
    StrictUnsupported,
    UnsupportedQuery,
    MixedOperators,
    MixedFamilies,
    BlowupLimit,
    InconsistentMec,
    NotStronglyConnected,
    NotDistribution,
    NoEntryMass,
    SeparationFailed,
    Divergent,
    BackendUnavailable,
    NumericalFailure,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& message)
        : Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace farkas
