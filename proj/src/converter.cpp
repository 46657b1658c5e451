#include "forge/converter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/error.hpp"
#include "forge/geotiff.hpp"

namespace forge::convert {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::MinMax: return "minmax";
    case Mode::Standardize: return "std";
    case Mode::MaxDiv: return "max";
    case Mode::RawTiff: return "tiff";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view t) {
  if (t == "minmax") return Mode::MinMax;
  if (t == "std") return Mode::Standardize;
  if (t == "max") return Mode::MaxDiv;
  if (t == "tiff") return Mode::RawTiff;
  return std::nullopt;
}

std::string_view to_string(StatsScope s) { return s == StatsScope::Image ? "image" : "band"; }

std::optional<StatsScope> parse_scope(std::string_view t) {
  if (t == "image") return StatsScope::Image;
  if (t == "band") return StatsScope::Band;
  return std::nullopt;
}

ImageStats stats_of(const Raster& r, std::span<const std::size_t> bands) {
  const auto& k = simd::active();
  simd::Moments total{0, std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity(), 0.0};
  for (auto b : bands) {
    const auto m = k.moments(r.plane(b), r.nodata());
    total.count += m.count;
    total.min = std::min(total.min, m.min);
    total.max = std::max(total.max, m.max);
    total.sum += m.sum;
  }
  if (total.count == 0) throw Error(ErrorCode::AllNodata, "no valid samples in scope");
  ImageStats s;
  s.count = total.count;
  s.min = total.min;
  s.max = total.max;
  s.mean = total.sum / static_cast<double>(total.count);
  double ss = 0.0;
  for (auto b : bands) ss += k.centered_sumsq(r.plane(b), r.nodata(), s.mean);
  s.std = std::sqrt(ss / static_cast<double>(total.count));
  // summation rounding can push the mean a hair outside [min, max] for constant input
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

ImageStats stats_of(const Raster& r) {
  std::vector<std::size_t> all(r.band_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return stats_of(r, all);
}

namespace {

Raster apply_affine(const Raster& r, double offset, double divisor, bool degenerate,
                    const char* what, Warnings* warnings) {
  Raster out = r;
  const auto& k = simd::active();
  if (degenerate && warnings != nullptr) {
    warnings->push_back(std::string(what) + ": degenerate denominator, output zero-filled");
  }
  for (std::size_t b = 0; b < out.band_count(); ++b) {
    auto dst = out.plane(b);
    if (degenerate) {
      for (auto& v : dst) v = out.is_nodata(v) ? v : 0.0f;
    } else {
      k.affine(r.plane(b), dst, r.nodata(), offset, divisor);
    }
  }
  return out;
}

}  // namespace

Raster normalize_minmax(const Raster& r, const ImageStats& s, Warnings* w) {
  return apply_affine(r, s.min, s.max - s.min, s.max == s.min, "DegenerateRange", w);
}

Raster normalize_std(const Raster& r, const ImageStats& s, Warnings* w) {
  return apply_affine(r, s.mean, s.std, s.std == 0.0, "ZeroStd", w);
}

Raster normalize_max(const Raster& r, const ImageStats& s, Warnings* w) {
  return apply_affine(r, 0.0, s.max, s.max == 0.0, "ZeroMax", w);
}

Raster normalize(const Raster& r, Mode mode, const ImageStats& s, Warnings* w) {
  switch (mode) {
    case Mode::MinMax: return normalize_minmax(r, s, w);
    case Mode::Standardize: return normalize_std(r, s, w);
    case Mode::MaxDiv: return normalize_max(r, s, w);
    case Mode::RawTiff: return r;
  }
  return r;
}

std::optional<simd::QuantizeParams> export_params(Mode mode, const ImageStats& s) {
  switch (mode) {
    case Mode::MinMax:
      if (s.max == s.min) return std::nullopt;
      return simd::QuantizeParams{s.min, s.max - s.min, 0.0, 1.0};
    case Mode::Standardize:
      if (s.std == 0.0) return std::nullopt;
      return simd::QuantizeParams{s.mean, s.std, -kStdClip, kStdClip};
    case Mode::MaxDiv:
      if (s.max == 0.0) return std::nullopt;
      return simd::QuantizeParams{0.0, s.max, 0.0, 1.0};
    case Mode::RawTiff:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "RawTiff has no uint8 export");
}

Plane8 quantize_band(const Raster& r, std::size_t band, Mode mode, const ImageStats& s,
                     Warnings* warnings) {
  Plane8 out{r.width(), r.height(), std::vector<std::uint8_t>(r.pixel_count(), 0)};
  const auto params = export_params(mode, s);
  if (!params) {
    if (warnings != nullptr) {
      warnings->push_back("band " + r.band(band).name + ": degenerate denominator for " +
                          std::string(to_string(mode)) + ", output zero-filled");
    }
    return out;
  }
  simd::active().quantize(r.plane(band), out.px, r.nodata(), *params);
  return out;
}

std::vector<std::string> render_bands(Satellite sat) {
  if (sat == Satellite::S2) return {"B4", "B3", "B2"};
  return {"VV"};
}

StatsScope effective_scope(Satellite sat, const ConvertOptions& opts) {
  if (opts.scope) return *opts.scope;
  return sat == Satellite::S1 ? StatsScope::Image : StatsScope::Band;
}

Image8 render(const Raster& r, Satellite sat, const ConvertOptions& opts, Warnings* warnings) {
  if (opts.mode == Mode::RawTiff) throw Error(ErrorCode::InvalidArgument, "RawTiff is not rendered");
  const auto names = render_bands(sat);
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto i = r.index_of(n);
    if (!i) throw Error(ErrorCode::MissingBand, n + " required for " + std::string(to_string(sat)));
    idx.push_back(*i);
  }
  const auto scope = effective_scope(sat, opts);
  std::optional<ImageStats> joint;
  if (scope == StatsScope::Image) {
    try {
      joint = stats_of(r, idx);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllNodata) throw;
    }
  }
  std::vector<Plane8> planes;
  for (auto b : idx) {
    std::optional<ImageStats> s = joint;
    if (scope == StatsScope::Band) {
      const std::size_t one[] = {b};
      try {
        s = stats_of(r, one);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllNodata) throw;
      }
    }
    if (!s) {
      if (warnings != nullptr) warnings->push_back("band " + r.band(b).name + ": AllNodata, zero-filled");
      planes.push_back({r.width(), r.height(), std::vector<std::uint8_t>(r.pixel_count(), 0)});
      continue;
    }
    planes.push_back(quantize_band(r, b, opts.mode, *s, warnings));
  }
  return interleave(planes);
}

ConvertResult convert_product(const Raster& r, Satellite sat, const ConvertOptions& opts,
                              const std::filesystem::path& out) {
  ConvertResult res;
  res.output = out;
  if (opts.mode == Mode::RawTiff) {
    res.output.replace_extension(".tif");
    write_geotiff(r, res.output);
    return res;
  }
  res.output.replace_extension(".png");
  write_png(render(r, sat, opts, &res.warnings), res.output);
  return res;
}

}  // namespace forge::convert
