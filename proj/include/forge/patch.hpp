#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/png.hpp"
#include "forge/raster.hpp"
#include "forge/types.hpp"

namespace forge::patch {

/// Partial edge patches are discarded.
struct PatchGrid {
  std::uint32_t patch_px = 250;
  std::uint32_t stride_px = 250;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;

  /// rows = floor((H - patch)/stride) + 1, likewise cols. Throws
  /// Error(PatchTooLarge) when patch > min(W, H) and Error(InvalidArgument)
  /// for a zero patch or stride.
  static PatchGrid fit(std::uint32_t width, std::uint32_t height, std::uint32_t patch_px,
                       std::uint32_t stride_px);
  std::uint32_t count() const { return rows * cols; }
};

Image8 crop(const Image8& img, std::uint32_t x, std::uint32_t y, std::uint32_t w, std::uint32_t h);
/// Crops every band; the geo transform is shifted to the new origin.
Raster crop(const Raster& r, std::uint32_t x, std::uint32_t y, std::uint32_t w, std::uint32_t h);

template <class Image>
struct Patch {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  Image image;
};

/// Row-major.
std::vector<Patch<Image8>> extract_patches(const Image8& img, const PatchGrid& grid);
std::vector<Patch<Raster>> extract_patches(const Raster& r, const PatchGrid& grid);

struct PatchName {
  std::uint32_t scene_id = 0;
  YearMonth month;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::string extension = ".png";

  bool operator==(const PatchName&) const = default;
};

/// scene_{id:04}_{YYYY-MM}_r{row:02}_c{col:02}{ext}
std::string patch_filename(const PatchName& n);
std::string patch_filename(std::uint32_t scene_id, YearMonth month, std::uint32_t row, std::uint32_t col);
/// Canonical spellings only.
std::optional<PatchName> parse_patch_filename(std::string_view name);

struct SeriesFrame {
  YearMonth month;
  Image8 image;
};

/// One row per date (chronological), one column per patch (row-major).
/// Output is (dates * patch) high and (rows * cols * patch) wide. Throws
/// Error(InconsistentSeries) for an empty series, mismatched sizes or
/// channel counts, or repeated dates.
Image8 build_preview(std::vector<SeriesFrame> series, std::uint32_t patch_px, std::uint32_t stride_px);

/// previews/scene_{id:04}_{s1|s2}.png
std::string preview_relpath(std::uint32_t scene_id, Satellite sat);
/// patches/Sentinel-X/scene_{id:04}/
std::string patch_dir_relpath(std::uint32_t scene_id, Satellite sat);

}  // namespace forge::patch
