#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "forge/raster.hpp"

namespace forge {

/// Decoded 8-bit PNG, channels interleaved (1 = gray, 3 = RGB).
struct Image8 {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 1;
  std::vector<std::uint8_t> px;

  Plane8 channel(std::uint32_t c) const;
  bool operator==(const Image8&) const = default;
};

/// 8-bit, no alpha, non-interlaced. Throws Error(SizeMismatch) before
/// touching the filesystem when plane sizes disagree.
std::vector<std::uint8_t> encode_png(const Image8& img);
void write_png_gray(const Plane8& plane, const std::filesystem::path& path);
void write_png_rgb(const Plane8& r, const Plane8& g, const Plane8& b,
                   const std::filesystem::path& path);
void write_png(const Image8& img, const std::filesystem::path& path);

/// Gray or RGB (palette/alpha/16-bit inputs are expanded/stripped).
Image8 decode_png(std::span<const std::uint8_t> bytes);
Image8 read_png(const std::filesystem::path& path);

/// Interleave planes into an image; planes must share dimensions.
Image8 interleave(std::span<const Plane8> planes);

}  // namespace forge
