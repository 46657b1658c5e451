#include "forge/raster.hpp"

#include <algorithm>
#include <cstring>

#include "forge/error.hpp"

namespace forge {

void Raster::add_band(std::string name, std::vector<float> samples) {
  if (samples.size() != pixel_count()) {
    throw Error(ErrorCode::SizeMismatch, "band " + name + " has " +
                                             std::to_string(samples.size()) + " samples, expected " +
                                             std::to_string(pixel_count()));
  }
  if (index_of(name)) throw Error(ErrorCode::InvalidArgument, "duplicate band " + name);
  bands_.push_back({std::move(name), std::move(samples)});
}

std::optional<std::size_t> Raster::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (bands_[i].name == name) return i;
  }
  return std::nullopt;
}

std::span<const float> Raster::plane(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw Error(ErrorCode::MissingBand, std::string(name));
  return bands_[*i].samples;
}

std::vector<std::string> Raster::band_names() const {
  std::vector<std::string> out;
  for (const auto& b : bands_) out.push_back(b.name);
  return out;
}

bool Raster::same_pixels(const Raster& o) const {
  if (width_ != o.width_ || height_ != o.height_ || bands_.size() != o.bands_.size()) return false;
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (bands_[i].name != o.bands_[i].name) return false;
    if (std::memcmp(bands_[i].samples.data(), o.bands_[i].samples.data(),
                    bands_[i].samples.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

std::uint8_t quantize_u8(double x) {
  double y = x > 0.0 ? x : 0.0;  // NaN -> 0
  y = y < 1.0 ? y : 1.0;
  const double v = y * 255.0;
  double r = std::trunc(v);
  if (v - r >= 0.5) r += 1.0;
  return static_cast<std::uint8_t>(r);
}

}  // namespace forge
