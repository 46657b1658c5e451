#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

/// North-up affine georeference: pixel (col, row) has its top-left corner at
/// (origin_lat - row*pixel_lat, origin_lon + col*pixel_lon).
struct GeoTransform {
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  double pixel_lat = 1.0;  // degrees per row, positive southward
  double pixel_lon = 1.0;  // degrees per column

  bool operator==(const GeoTransform&) const = default;
};

struct Band {
  std::string name;
  std::vector<float> samples;  // width*height, row-major

  bool operator==(const Band&) const = default;
};

/// Multi-band float32 pixel grid. Every plane is width*height; band names are
/// unique. A sample is nodata when it is NaN or equals the nodata sentinel.
class Raster {
 public:
  Raster() = default;
  Raster(std::uint32_t width, std::uint32_t height,
         float nodata = std::numeric_limits<float>::quiet_NaN())
      : width_(width), height_(height), nodata_(nodata) {}

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  float nodata() const { return nodata_; }
  void set_nodata(float v) { nodata_ = v; }
  bool is_nodata(float v) const { return std::isnan(v) || v == nodata_; }

  const GeoTransform& geo() const { return geo_; }
  void set_geo(const GeoTransform& g) { geo_ = g; }

  /// Free-form JSON text carried alongside the pixels (product descriptor etc).
  const std::string& metadata() const { return metadata_; }
  void set_metadata(std::string m) { metadata_ = std::move(m); }

  /// Throws Error(SizeMismatch) for a wrong plane size and
  /// Error(InvalidArgument) for a duplicate name.
  void add_band(std::string name, std::vector<float> samples);

  std::size_t band_count() const { return bands_.size(); }
  const Band& band(std::size_t i) const { return bands_[i]; }
  Band& band(std::size_t i) { return bands_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws Error(MissingBand).
  std::span<const float> plane(std::string_view name) const;
  std::span<const float> plane(std::size_t i) const { return bands_[i].samples; }
  std::span<float> plane(std::size_t i) { return bands_[i].samples; }
  std::vector<std::string> band_names() const;

  float at(std::size_t band, std::uint32_t col, std::uint32_t row) const {
    return bands_[band].samples[static_cast<std::size_t>(row) * width_ + col];
  }

  /// Bitwise plane equality (NaN payloads compared by bits).
  bool same_pixels(const Raster& other) const;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  float nodata_ = std::numeric_limits<float>::quiet_NaN();
  GeoTransform geo_{};
  std::string metadata_;
  std::vector<Band> bands_;
};

/// 8-bit single-channel plane.
struct Plane8 {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> px;

  bool operator==(const Plane8&) const = default;
};

/// Clamp to [0,1] (NaN -> 0) then round(x*255) with ties away from zero.
std::uint8_t quantize_u8(double x);

}  // namespace forge
