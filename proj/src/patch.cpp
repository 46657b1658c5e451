#include "forge/patch.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "forge/error.hpp"

namespace forge::patch {

PatchGrid PatchGrid::fit(std::uint32_t width, std::uint32_t height, std::uint32_t patch_px,
                         std::uint32_t stride_px) {
  if (patch_px == 0 || stride_px == 0) throw Error(ErrorCode::InvalidArgument, "patch and stride must be >= 1");
  if (patch_px > std::min(width, height)) {
    throw Error(ErrorCode::PatchTooLarge, "patch " + std::to_string(patch_px) + " exceeds image " +
                                              std::to_string(width) + "x" + std::to_string(height));
  }
  PatchGrid g;
  g.patch_px = patch_px;
  g.stride_px = stride_px;
  g.rows = (height - patch_px) / stride_px + 1;
  g.cols = (width - patch_px) / stride_px + 1;
  return g;
}

Image8 crop(const Image8& img, std::uint32_t x, std::uint32_t y, std::uint32_t w, std::uint32_t h) {
  if (x + w > img.width || y + h > img.height) throw Error(ErrorCode::InvalidArgument, "crop outside image");
  Image8 out{w, h, img.channels, {}};
  out.px.resize(static_cast<std::size_t>(w) * h * img.channels);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * img.channels;
  for (std::uint32_t r = 0; r < h; ++r) {
    const auto* src = img.px.data() + ((static_cast<std::size_t>(y) + r) * img.width + x) * img.channels;
    std::memcpy(out.px.data() + r * row_bytes, src, row_bytes);
  }
  return out;
}

Raster crop(const Raster& r, std::uint32_t x, std::uint32_t y, std::uint32_t w, std::uint32_t h) {
  if (x + w > r.width() || y + h > r.height()) throw Error(ErrorCode::InvalidArgument, "crop outside raster");
  Raster out(w, h, r.nodata());
  auto g = r.geo();
  g.origin_lat -= g.pixel_lat * y;
  g.origin_lon += g.pixel_lon * x;
  out.set_geo(g);
  out.set_metadata(r.metadata());
  for (std::size_t b = 0; b < r.band_count(); ++b) {
    const auto src = r.plane(b);
    std::vector<float> px(static_cast<std::size_t>(w) * h);
    for (std::uint32_t row = 0; row < h; ++row) {
      std::copy_n(src.begin() + (static_cast<std::size_t>(y) + row) * r.width() + x, w,
                  px.begin() + static_cast<std::ptrdiff_t>(row) * w);
    }
    out.add_band(r.band(b).name, std::move(px));
  }
  return out;
}

namespace {

template <class Image>
std::vector<Patch<Image>> extract(const Image& img, const PatchGrid& grid) {
  std::vector<Patch<Image>> out;
  out.reserve(grid.count());
  for (std::uint32_t r = 0; r < grid.rows; ++r) {
    for (std::uint32_t c = 0; c < grid.cols; ++c) {
      out.push_back({r, c, crop(img, c * grid.stride_px, r * grid.stride_px, grid.patch_px, grid.patch_px)});
    }
  }
  return out;
}

void check_grid(std::uint32_t w, std::uint32_t h, const PatchGrid& grid) {
  const auto expect = PatchGrid::fit(w, h, grid.patch_px, grid.stride_px);
  if (expect.rows != grid.rows || expect.cols != grid.cols) {
    throw Error(ErrorCode::InvalidArgument, "grid does not fit the image");
  }
}

}  // namespace

std::vector<Patch<Image8>> extract_patches(const Image8& img, const PatchGrid& grid) {
  check_grid(img.width, img.height, grid);
  return extract(img, grid);
}

std::vector<Patch<Raster>> extract_patches(const Raster& r, const PatchGrid& grid) {
  check_grid(r.width(), r.height(), grid);
  return extract(r, grid);
}

std::string patch_filename(const PatchName& n) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "scene_%04u_%s_r%02u_c%02u", n.scene_id, n.month.str().c_str(), n.row, n.col);
  return buf + n.extension;
}

std::string patch_filename(std::uint32_t scene_id, YearMonth month, std::uint32_t row, std::uint32_t col) {
  return patch_filename(PatchName{scene_id, month, row, col, ".png"});
}

std::optional<PatchName> parse_patch_filename(std::string_view name) {
  const auto dot = name.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const std::string stem(name.substr(0, dot));
  PatchName n;
  n.extension = std::string(name.substr(dot));
  if (n.extension != ".png" && n.extension != ".tif") return std::nullopt;
  unsigned scene = 0, row = 0, col = 0;
  char month[16] = {0};
  int consumed = 0;
  if (std::sscanf(stem.c_str(), "scene_%u_%7[0-9-]_r%u_c%u%n", &scene, month, &row, &col, &consumed) != 4 ||
      consumed != static_cast<int>(stem.size())) {
    return std::nullopt;
  }
  const auto ym = YearMonth::parse(month);
  if (!ym) return std::nullopt;
  n.scene_id = scene;
  n.month = *ym;
  n.row = row;
  n.col = col;
  // reject non-canonical spellings such as missing zero padding
  if (patch_filename(n) != name) return std::nullopt;
  return n;
}

Image8 build_preview(std::vector<SeriesFrame> series, std::uint32_t patch_px, std::uint32_t stride_px) {
  if (series.empty()) throw Error(ErrorCode::InconsistentSeries, "empty series");
  std::sort(series.begin(), series.end(), [](const auto& a, const auto& b) { return a.month < b.month; });
  const auto& first = series.front().image;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& im = series[i].image;
    if (im.width != first.width || im.height != first.height || im.channels != first.channels) {
      throw Error(ErrorCode::InconsistentSeries, "frame " + series[i].month.str() + " differs in shape");
    }
    if (i > 0 && series[i].month == series[i - 1].month) {
      throw Error(ErrorCode::InconsistentSeries, "duplicate date " + series[i].month.str());
    }
  }
  const auto grid = PatchGrid::fit(first.width, first.height, patch_px, stride_px);
  const std::uint32_t n_patch = grid.count();
  Image8 out{n_patch * patch_px, static_cast<std::uint32_t>(series.size()) * patch_px, first.channels, {}};
  out.px.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  const std::size_t row_bytes = static_cast<std::size_t>(patch_px) * first.channels;
  for (std::size_t d = 0; d < series.size(); ++d) {
    const auto patches = extract_patches(series[d].image, grid);
    for (std::size_t p = 0; p < patches.size(); ++p) {
      const auto& src = patches[p].image.px;
      for (std::uint32_t r = 0; r < patch_px; ++r) {
        const std::size_t y = d * patch_px + r;
        const std::size_t x = p * patch_px;
        std::memcpy(out.px.data() + (y * out.width + x) * out.channels, src.data() + r * row_bytes, row_bytes);
      }
    }
  }
  return out;
}

std::string preview_relpath(std::uint32_t scene_id, Satellite sat) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "previews/scene_%04u_%s.png", scene_id, sat == Satellite::S1 ? "s1" : "s2");
  return buf;
}

std::string patch_dir_relpath(std::uint32_t scene_id, Satellite sat) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "patches/%s/scene_%04u", std::string(folder_name(sat)).c_str(), scene_id);
  return buf;
}

}  // namespace forge::patch
