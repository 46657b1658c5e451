#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

enum class ErrorCode {
  InvalidArgument,
  Io,
  // geo-sampler
  MaxRejectionsExceeded,
  PolarFootprint,
  MalformedRow,
  BadMask,
  // catalog
  EmptyDateRange,
  ProviderUnavailable,
  MalformedResponse,
  BandUnavailable,
  TruncatedPayload,
  // raster
  CorruptFile,
  UnsupportedLayout,
  SizeMismatch,
  // converter / cleaner
  AllNodata,
  MissingBand,
  UnknownItem,
  AlreadyResolved,
  ManualModeDisabled,
  // patches
  PatchTooLarge,
  InconsistentSeries,
  // store
  SchemaMismatch,
  CorruptManifest,
  // orchestrator
  ConfigError,
  MissingPrerequisite,
  StageFailed,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace forge
