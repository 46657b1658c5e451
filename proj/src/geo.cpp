#include "forge/geo.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "forge/error.hpp"

namespace forge::geo {

bool GeoPoint::valid() const {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

WaterMask::WaterMask(std::uint32_t rows, std::uint32_t cols, std::vector<std::uint8_t> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
  if (rows_ == 0 || cols_ == 0) throw Error(ErrorCode::BadMask, "empty mask");
  if (static_cast<std::uint64_t>(rows_) * 2 != cols_) {
    throw Error(ErrorCode::BadMask, "mask must be 2:1 equirectangular (rows*cell == 180, "
                                    "cols*cell == 360)");
  }
  if (cells_.size() != static_cast<std::size_t>(rows_) * cols_) {
    throw Error(ErrorCode::BadMask, "cell count does not match rows x cols");
  }
}

WaterMask WaterMask::uniform(std::uint32_t rows, std::uint32_t cols, bool water) {
  return WaterMask(rows, cols,
                   std::vector<std::uint8_t>(static_cast<std::size_t>(rows) * cols, water ? 1 : 0));
}

std::uint32_t WaterMask::row_of(double lat) const {
  const double r = std::floor((90.0 - lat) / cell_deg());
  if (!(r > 0.0)) return 0;
  return r >= rows_ ? rows_ - 1 : static_cast<std::uint32_t>(r);
}

std::uint32_t WaterMask::col_of(double lon) const {
  const double c = std::floor((lon + 180.0) / cell_deg());
  if (!(c > 0.0)) return 0;
  return c >= cols_ ? cols_ - 1 : static_cast<std::uint32_t>(c);
}

double WaterMask::land_fraction() const {
  std::size_t land = 0;
  for (auto c : cells_) land += c == 0;
  return cells_.empty() ? 0.0 : static_cast<double>(land) / static_cast<double>(cells_.size());
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

WaterMask load_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open mask " + path.string());
  std::array<unsigned char, 16> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), header.size())) {
    throw Error(ErrorCode::BadMask, "short mask header in " + path.string());
  }
  if (std::string_view(reinterpret_cast<const char*>(header.data()), 4) != "WMSK") {
    throw Error(ErrorCode::BadMask, "bad magic in " + path.string());
  }
  const std::uint32_t rows = get_u32(header.data() + 4);
  const std::uint32_t cols = get_u32(header.data() + 8);
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 21)) {
    throw Error(ErrorCode::BadMask, "implausible mask dimensions");
  }
  const std::size_t stride = (cols + 7) / 8;
  std::vector<unsigned char> packed(stride * rows);
  if (!in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()))) {
    throw Error(ErrorCode::BadMask, "truncated mask payload in " + path.string());
  }
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    const unsigned char* row = packed.data() + r * stride;
    for (std::uint32_t c = 0; c < cols; ++c) {
      cells[static_cast<std::size_t>(r) * cols + c] = (row[c / 8] >> (7 - c % 8)) & 1;
    }
  }
  return WaterMask(rows, cols, std::move(cells));
}

void save_mask(const WaterMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write mask " + path.string());
  out.write("WMSK", 4);
  put_u32(out, mask.rows());
  put_u32(out, mask.cols());
  put_u32(out, 0);
  const std::size_t stride = (mask.cols() + 7) / 8;
  std::vector<char> row(stride);
  for (std::uint32_t r = 0; r < mask.rows(); ++r) {
    std::fill(row.begin(), row.end(), 0);
    for (std::uint32_t c = 0; c < mask.cols(); ++c) {
      if (mask.water_at(r, c)) row[c / 8] = static_cast<char>(row[c / 8] | (0x80 >> (c % 8)));
    }
    out.write(row.data(), static_cast<std::streamsize>(stride));
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

bool is_land(const WaterMask& mask, const GeoPoint& p) {
  return !mask.water_at(mask.row_of(p.lat), mask.col_of(p.lon));
}

void SamplerConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (!std::isfinite(lat_min) || !std::isfinite(lat_max) || lat_min < -90.0 || lat_max > 90.0 ||
      lat_min > lat_max) {
    fail("lat_range must be ordered and within [-90, 90]");
  }
  if (!std::isfinite(lon_min) || !std::isfinite(lon_max) || lon_min < -180.0 || lon_max > 180.0 ||
      lon_min > lon_max) {
    fail("lon_range must be ordered and within [-180, 180]");
  }
  if (max_rejections == 0) fail("max_rejections must be >= 1");
  if (!(gsd_m > 0.0)) fail("gsd_m must be > 0");
}

std::vector<GeoPoint> generate_points(const SamplerConfig& cfg, const WaterMask& mask) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  // 53-bit mantissa draw in [0, 1); avoids implementation-defined distributions
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double lat_span = cfg.lat_max - cfg.lat_min;
  const double lon_span = cfg.lon_max - cfg.lon_min;

  std::vector<GeoPoint> points;
  points.reserve(cfg.n_points);
  for (std::uint64_t i = 0; i < cfg.n_points; ++i) {
    std::uint64_t misses = 0;
    for (;;) {
      GeoPoint p{cfg.lat_min + unit() * lat_span, cfg.lon_min + unit() * lon_span};
      if (is_land(mask, p)) {
        points.push_back(p);
        break;
      }
      if (++misses >= cfg.max_rejections) {
        throw Error(ErrorCode::MaxRejectionsExceeded,
                    std::to_string(misses) + " consecutive water draws for point " +
                        std::to_string(i));
      }
    }
  }
  return points;
}

SceneFootprint footprint_of(const GeoPoint& p, std::uint32_t size_px, double gsd_m) {
  if (!(gsd_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "gsd_m must be > 0");
  if (std::abs(p.lat) >= 89.0) {
    throw Error(ErrorCode::PolarFootprint, "footprint undefined for |lat| >= 89");
  }
  const double half_m = static_cast<double>(size_px) * gsd_m / 2.0;
  const double dlat = half_m / kMetersPerDegree;
  const double dlon = half_m / (kMetersPerDegree * std::cos(p.lat * std::numbers::pi / 180.0));
  SceneFootprint fp;
  fp.center = p;
  fp.size_px = size_px;
  fp.gsd_m = gsd_m;
  fp.bbox = {p.lat - dlat, p.lon - dlon, p.lat + dlat, p.lon + dlon};
  return fp;
}

void save_points(std::span<const GeoPoint> points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "id,lat,lon\n";
  char line[96];
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f\n", i, points[i].lat, points[i].lon);
    out << line;
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<GeoPoint> load_points(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,lat,lon") throw Error(ErrorCode::MalformedRow, "bad header: " + line);

  std::vector<GeoPoint> points;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    auto bad = [&] {
      return Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(lineno));
    };
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) throw bad();
    GeoPoint p;
    try {
      std::size_t used = 0;
      (void)std::stoull(line.substr(0, c1), &used);
      if (used != c1) throw bad();
      const std::string lat = line.substr(c1 + 1, c2 - c1 - 1);
      const std::string lon = line.substr(c2 + 1);
      p.lat = std::stod(lat, &used);
      if (used != lat.size()) throw bad();
      p.lon = std::stod(lon, &used);
      if (used != lon.size()) throw bad();
    } catch (const std::logic_error&) {
      throw bad();
    }
    if (!p.valid()) throw bad();
    points.push_back(p);
  }
  return points;
}

}  // namespace forge::geo
