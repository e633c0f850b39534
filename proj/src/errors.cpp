#include "farkas/errors.hpp"

namespace farkas {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parse: return "ParseError";
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::InitialStateDropped: return "InitialStateDropped";
        case ErrorCode::EcFreeRequired: return "EcFreeRequired";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::SolverUnknown: return "SolverUnknown";
        case ErrorCode::StrictUnsupported: return "StrictUnsupported";
        case ErrorCode::UnsupportedQuery: return "UnsupportedQuery";
        case ErrorCode::MixedOperators: return "MixedOperators";
        case ErrorCode::MixedFamilies: return "MixedFamilies";
        case ErrorCode::BlowupLimit: return "BlowupLimit";
        case ErrorCode::InconsistentMec: return "InconsistentMec";
        case ErrorCode::NotStronglyConnected: return "NotStronglyConnected";
        case ErrorCode::NotDistribution: return "NotDistribution";
        case ErrorCode::NoEntryMass: return "NoEntryMass";
        case ErrorCode::SeparationFailed: return "SeparationFailed";
        case ErrorCode::Divergent: return "Divergent";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::NumericalFailure: return "NumericalFailure";
    }
    return "Error";
}

}  // namespace farkas
