#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/png.hpp"
#include "forge/raster.hpp"
#include "forge/simd/kernels.hpp"
#include "forge/types.hpp"

namespace forge::convert {

enum class Mode { MinMax, Standardize, MaxDiv, RawTiff };
enum class StatsScope { Image, Band };

std::string_view to_string(Mode m);
/// "minmax" | "std" | "max" | "tiff"
std::optional<Mode> parse_mode(std::string_view text);
std::string_view to_string(StatsScope s);
std::optional<StatsScope> parse_scope(std::string_view text);

/// Scalars over every valid sample in scope. std is the population
/// standard deviation (divide by N).
struct ImageStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::uint64_t count = 0;
};

/// Throws Error(AllNodata) when no valid sample is in scope.
ImageStats stats_of(const Raster& r, std::span<const std::size_t> bands);
ImageStats stats_of(const Raster& r);

using Warnings = std::vector<std::string>;

// Each normalization maps every band of `r` with the same scalars and keeps
// nodata samples as nodata. A zero denominator yields zeros and a warning.
Raster normalize_minmax(const Raster& r, const ImageStats& s, Warnings* warnings = nullptr);
Raster normalize_std(const Raster& r, const ImageStats& s, Warnings* warnings = nullptr);
Raster normalize_max(const Raster& r, const ImageStats& s, Warnings* warnings = nullptr);
Raster normalize(const Raster& r, Mode mode, const ImageStats& s, Warnings* warnings = nullptr);

/// Standardized values are clipped to +-kStdClip before the uint8 mapping.
inline constexpr double kStdClip = 3.0;

/// Export parameters for the fused normalize+quantize kernel; nullopt when
/// the denominator is degenerate (output is all zeros).
std::optional<simd::QuantizeParams> export_params(Mode mode, const ImageStats& s);

/// Normalize then quantize one band to uint8 in a single pass.
Plane8 quantize_band(const Raster& r, std::size_t band, Mode mode, const ImageStats& s,
                     Warnings* warnings = nullptr);

/// Bands rendered for each satellite: S2 -> B4,B3,B2 (RGB); S1 -> VV.
std::vector<std::string> render_bands(Satellite sat);

struct ConvertOptions {
  Mode mode = Mode::MinMax;
  /// nullopt: whole-image for S1, per-band for S2.
  std::optional<StatsScope> scope;
};

StatsScope effective_scope(Satellite sat, const ConvertOptions& opts);

/// Grayscale (S1) or RGB (S2) uint8 rendering. QA60 is never rendered.
/// Throws Error(MissingBand).
Image8 render(const Raster& r, Satellite sat, const ConvertOptions& opts,
              Warnings* warnings = nullptr);

struct ConvertResult {
  std::filesystem::path output;
  Warnings warnings;
};

/// Writes `out` with its extension replaced: .png for normalizing modes,
/// .tif for RawTiff (a pixel-exact copy of the input raster).
ConvertResult convert_product(const Raster& r, Satellite sat, const ConvertOptions& opts,
                              const std::filesystem::path& out);

}  // namespace forge::convert
