#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace forge::geo {

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  bool operator==(const GeoPoint&) const = default;
  bool valid() const;
};

/// Binary equirectangular water mask: 1 = water, 0 = land. Row 0 starts at
/// +90 deg latitude, column 0 at -180 deg longitude.
class WaterMask {
 public:
  WaterMask() = default;
  /// Throws Error(BadMask) unless rows*cell == 180 and cols*cell == 360.
  WaterMask(std::uint32_t rows, std::uint32_t cols, std::vector<std::uint8_t> cells);

  static WaterMask uniform(std::uint32_t rows, std::uint32_t cols, bool water);

  std::uint32_t rows() const { return rows_; }
  std::uint32_t cols() const { return cols_; }
  double cell_deg() const { return 180.0 / rows_; }
  bool water_at(std::uint32_t row, std::uint32_t col) const {
    return cells_[static_cast<std::size_t>(row) * cols_ + col] != 0;
  }
  void set(std::uint32_t row, std::uint32_t col, bool water) {
    cells_[static_cast<std::size_t>(row) * cols_ + col] = water ? 1 : 0;
  }
  std::span<const std::uint8_t> cells() const { return cells_; }

  /// Floor-index cell lookup, clamped to the grid.
  std::uint32_t row_of(double lat) const;
  std::uint32_t col_of(double lon) const;

  double land_fraction() const;

  bool operator==(const WaterMask&) const = default;

 private:
  std::uint32_t rows_ = 0;
  std::uint32_t cols_ = 0;
  std::vector<std::uint8_t> cells_;  // one byte per cell, unpacked
};

/// "WMSK" file: 16-byte little-endian header then MSB-first bit rows padded
/// to a byte boundary.
WaterMask load_mask(const std::filesystem::path& path);
void save_mask(const WaterMask& mask, const std::filesystem::path& path);

bool is_land(const WaterMask& mask, const GeoPoint& p);

struct SamplerConfig {
  std::uint64_t n_points = 0;
  std::uint64_t seed = 0;
  double lat_min = -56.0;
  double lat_max = 84.0;
  double lon_min = -180.0;
  double lon_max = 180.0;
  std::uint64_t max_rejections = 10'000;
  std::uint32_t scene_size_px = 1000;
  double gsd_m = 10.0;

  /// Throws Error(InvalidArgument) on out-of-range or unordered bounds.
  void validate() const;
};

/// Uniform lat/lon rejection sampling restricted to land cells.
std::vector<GeoPoint> generate_points(const SamplerConfig& cfg, const WaterMask& mask);

struct BBox {
  double lat_min = 0.0;
  double lon_min = 0.0;
  double lat_max = 0.0;
  double lon_max = 0.0;

  bool operator==(const BBox&) const = default;
  bool contains(const GeoPoint& p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
};

struct SceneFootprint {
  GeoPoint center;
  std::uint32_t size_px = 0;
  double gsd_m = 10.0;
  BBox bbox;
};

inline constexpr double kMetersPerDegree = 111'320.0;

/// Square footprint on a sphere: half-extent h = size_px*gsd/2 meters,
/// dlat = h/111320, dlon = h/(111320 cos lat). Longitudes are not wrapped.
SceneFootprint footprint_of(const GeoPoint& p, std::uint32_t size_px, double gsd_m);

/// CSV with header `id,lat,lon`, 6 decimals, LF endings.
void save_points(std::span<const GeoPoint> points, const std::filesystem::path& path);
std::vector<GeoPoint> load_points(const std::filesystem::path& path);

}  // namespace forge::geo
