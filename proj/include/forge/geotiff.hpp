#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "forge/raster.hpp"

namespace forge {

// Single-image, uncompressed, striped GeoTIFF. Writes 32-bit float planes
// (PlanarConfiguration = separate) with ModelTiepoint/ModelPixelScale,
// an EPSG:4326 GeoKey directory, the GDAL_NODATA ASCII tag and a JSON
// ImageDescription holding band names and raster metadata. Reads strip
// layouts with 8/16/32-bit integer or 32/64-bit float samples, chunky or
// planar, either byte order, converting samples to float.

std::vector<std::uint8_t> encode_geotiff(const Raster& r);
/// Throws Error(CorruptFile) for malformed or truncated input and
/// Error(UnsupportedLayout) for tiles, compression or exotic sample types.
Raster decode_geotiff(std::span<const std::uint8_t> bytes);

void write_geotiff(const Raster& r, const std::filesystem::path& path);
Raster read_geotiff(const std::filesystem::path& path);

}  // namespace forge
