#include "forge/error.hpp"

namespace forge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MaxRejectionsExceeded: return "MaxRejectionsExceeded";
    case ErrorCode::PolarFootprint: return "PolarFootprint";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::BadMask: return "BadMask";
    case ErrorCode::EmptyDateRange: return "EmptyDateRange";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::BandUnavailable: return "BandUnavailable";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::UnsupportedLayout: return "UnsupportedLayout";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::AllNodata: return "AllNodata";
    case ErrorCode::MissingBand: return "MissingBand";
    case ErrorCode::UnknownItem: return "UnknownItem";
    case ErrorCode::AlreadyResolved: return "AlreadyResolved";
    case ErrorCode::ManualModeDisabled: return "ManualModeDisabled";
    case ErrorCode::PatchTooLarge: return "PatchTooLarge";
    case ErrorCode::InconsistentSeries: return "InconsistentSeries";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::CorruptManifest: return "CorruptManifest";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingPrerequisite: return "MissingPrerequisite";
    case ErrorCode::StageFailed: return "StageFailed";
  }
  return "Unknown";
}

}  // namespace forge
