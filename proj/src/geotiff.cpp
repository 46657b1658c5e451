#include "forge/geotiff.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <map>
#include "json.hpp"
#include <string>

#include "forge/error.hpp"
#include "forge/io.hpp"

namespace forge {

namespace {

enum : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kImageDescription = 270,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kTileWidth = 322,
  kExtraSamples = 338,
  kSampleFormat = 339,
  kModelPixelScale = 33550,
  kModelTiepoint = 33922,
  kGeoKeyDirectory = 34735,
  kGdalNodata = 42113,
};

enum : std::uint16_t { kShort = 3, kLong = 4, kAscii = 2, kDouble = 12 };

constexpr std::size_t type_size(std::uint16_t t) {
  switch (t) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
  }
}

class Writer {
 public:
  struct Entry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::vector<std::uint8_t> data;
  };

  void shorts(std::uint16_t tag, const std::vector<std::uint16_t>& v) {
    Entry e{tag, kShort, static_cast<std::uint32_t>(v.size()), {}};
    for (auto x : v) append(e.data, x);
    entries_[tag] = std::move(e);
  }
  void longs(std::uint16_t tag, const std::vector<std::uint32_t>& v) {
    Entry e{tag, kLong, static_cast<std::uint32_t>(v.size()), {}};
    for (auto x : v) append(e.data, x);
    entries_[tag] = std::move(e);
  }
  void doubles(std::uint16_t tag, const std::vector<double>& v) {
    Entry e{tag, kDouble, static_cast<std::uint32_t>(v.size()), {}};
    for (auto x : v) append(e.data, std::bit_cast<std::uint64_t>(x));
    entries_[tag] = std::move(e);
  }
  void ascii(std::uint16_t tag, const std::string& s) {
    Entry e{tag, kAscii, static_cast<std::uint32_t>(s.size() + 1), {}};
    e.data.assign(s.begin(), s.end());
    e.data.push_back(0);
    entries_[tag] = std::move(e);
  }

  // Layout: header | pixel payload | IFD | out-of-line tag data.
  std::vector<std::uint8_t> finish(const std::vector<std::span<const float>>& planes) {
    std::vector<std::uint8_t> out{'I', 'I', 42, 0, 0, 0, 0, 0};
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> counts;
    for (auto p : planes) {
      offsets.push_back(static_cast<std::uint32_t>(out.size()));
      counts.push_back(static_cast<std::uint32_t>(p.size() * 4));
      const std::size_t at = out.size();
      out.resize(at + p.size() * 4);
      if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data() + at, p.data(), p.size() * 4);
      } else {
        for (std::size_t i = 0; i < p.size(); ++i) {
          const auto v = std::bit_cast<std::uint32_t>(p[i]);
          for (int b = 0; b < 4; ++b) out[at + i * 4 + b] = static_cast<std::uint8_t>(v >> (8 * b));
        }
      }
    }
    if (out.size() % 2) out.push_back(0);
    longs(kStripOffsets, offsets);
    longs(kStripByteCounts, counts);

    const auto ifd_at = static_cast<std::uint32_t>(out.size());
    put32(out, 4, ifd_at);
    std::size_t extra_at = ifd_at + 2 + entries_.size() * 12 + 4;
    std::vector<std::uint8_t> extra;
    append(out, static_cast<std::uint16_t>(entries_.size()));
    for (auto& [tag, e] : entries_) {
      append(out, e.tag);
      append(out, e.type);
      append(out, e.count);
      if (e.data.size() <= 4) {
        std::vector<std::uint8_t> inl = e.data;
        inl.resize(4, 0);
        out.insert(out.end(), inl.begin(), inl.end());
      } else {
        append(out, static_cast<std::uint32_t>(extra_at + extra.size()));
        extra.insert(extra.end(), e.data.begin(), e.data.end());
        if (extra.size() % 2) extra.push_back(0);
      }
    }
    append(out, std::uint32_t{0});
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }

 private:
  template <typename T>
  static void append(std::vector<std::uint8_t>& v, T x) {
    for (std::size_t b = 0; b < sizeof(T); ++b) v.push_back(static_cast<std::uint8_t>(x >> (8 * b)));
  }
  static void put32(std::vector<std::uint8_t>& v, std::size_t at, std::uint32_t x) {
    for (int b = 0; b < 4; ++b) v[at + b] = static_cast<std::uint8_t>(x >> (8 * b));
  }

  std::map<std::uint16_t, Entry> entries_;
};

std::string nodata_text(float v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  return buf;
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {
    if (b_.size() < 8) corrupt("file shorter than TIFF header");
    if (b_[0] == 'I' && b_[1] == 'I') {
      big_ = false;
    } else if (b_[0] == 'M' && b_[1] == 'M') {
      big_ = true;
    } else {
      corrupt("bad byte-order mark");
    }
    if (u16(2) == 43) throw Error(ErrorCode::UnsupportedLayout, "BigTIFF");
    if (u16(2) != 42) corrupt("bad TIFF magic");
  }

  [[noreturn]] static void corrupt(const std::string& m) { throw Error(ErrorCode::CorruptFile, m); }

  void need(std::size_t off, std::size_t n) const {
    if (off > b_.size() || n > b_.size() - off) corrupt("offset out of range");
  }
  std::uint16_t u16(std::size_t off) const {
    need(off, 2);
    return big_ ? static_cast<std::uint16_t>(b_[off] << 8 | b_[off + 1])
                : static_cast<std::uint16_t>(b_[off + 1] << 8 | b_[off]);
  }
  std::uint32_t u32(std::size_t off) const {
    need(off, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(b_[off + (big_ ? 3 - i : i)]) << (8 * i);
    }
    return v;
  }
  std::uint64_t u64(std::size_t off) const {
    need(off, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(b_[off + (big_ ? 7 - i : i)]) << (8 * i);
    }
    return v;
  }

  struct Field {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t offset = 0;  // where the values live
  };

  std::map<std::uint16_t, Field> read_ifd() {
    const std::uint32_t ifd = u32(4);
    const std::uint16_t n = u16(ifd);
    std::map<std::uint16_t, Field> fields;
    for (std::uint16_t i = 0; i < n; ++i) {
      const std::size_t e = ifd + 2 + static_cast<std::size_t>(i) * 12;
      Field f{u16(e + 2), u32(e + 4), 0};
      const std::size_t sz = type_size(f.type);
      if (sz == 0) continue;  // unknown type, skip per TIFF 6.0
      const std::size_t total = sz * f.count;
      f.offset = total <= 4 ? e + 8 : u32(e + 8);
      need(f.offset, total);
      fields[u16(e)] = f;
    }
    return fields;
  }

  std::vector<std::uint64_t> ints(const Field& f) const {
    std::vector<std::uint64_t> v;
    for (std::uint32_t i = 0; i < f.count; ++i) {
      switch (f.type) {
        case 1: v.push_back(b_[f.offset + i]); break;
        case kShort: v.push_back(u16(f.offset + 2 * i)); break;
        case kLong: v.push_back(u32(f.offset + 4 * i)); break;
        default: corrupt("expected integer field");
      }
    }
    return v;
  }
  std::vector<double> reals(const Field& f) const {
    if (f.type != kDouble) corrupt("expected double field");
    std::vector<double> v;
    for (std::uint32_t i = 0; i < f.count; ++i) v.push_back(std::bit_cast<double>(u64(f.offset + 8 * i)));
    return v;
  }
  std::string text(const Field& f) const {
    std::string s(reinterpret_cast<const char*>(b_.data() + f.offset), f.count);
    while (!s.empty() && s.back() == '\0') s.pop_back();
    return s;
  }

  float sample(std::size_t off, unsigned bits, unsigned format) const {
    switch (format * 100 + bits) {
      case 108: return b_[off];
      case 208: return static_cast<std::int8_t>(b_[off]);
      case 116: return u16(off);
      case 216: return static_cast<std::int16_t>(u16(off));
      case 132: return static_cast<float>(u32(off));
      case 232: return static_cast<float>(static_cast<std::int32_t>(u32(off)));
      case 332: return std::bit_cast<float>(u32(off));
      case 364: return static_cast<float>(std::bit_cast<double>(u64(off)));
      default: throw Error(ErrorCode::UnsupportedLayout, "sample type");
    }
  }

 private:
  std::span<const std::uint8_t> b_;
  bool big_ = false;
};

}  // namespace

std::vector<std::uint8_t> encode_geotiff(const Raster& r) {
  if (r.band_count() == 0) throw Error(ErrorCode::InvalidArgument, "raster has no bands");
  const auto n = static_cast<std::uint16_t>(r.band_count());
  Writer w;
  w.longs(kImageWidth, {r.width()});
  w.longs(kImageLength, {r.height()});
  w.shorts(kBitsPerSample, std::vector<std::uint16_t>(n, 32));
  w.shorts(kCompression, {1});
  w.shorts(kPhotometric, {1});
  nlohmann::json desc = {{"bands", r.band_names()}};
  if (!r.metadata().empty()) {
    desc["metadata"] = nlohmann::json::parse(r.metadata(), nullptr, false);
    if (desc["metadata"].is_discarded()) desc["metadata"] = r.metadata();
  }
  w.ascii(kImageDescription, desc.dump());
  w.shorts(kSamplesPerPixel, {n});
  w.longs(kRowsPerStrip, {r.height()});
  w.shorts(kPlanarConfig, {2});
  if (n > 1) w.shorts(kExtraSamples, std::vector<std::uint16_t>(n - 1, 0));
  w.shorts(kSampleFormat, std::vector<std::uint16_t>(n, 3));
  const auto& g = r.geo();
  w.doubles(kModelPixelScale, {g.pixel_lon, g.pixel_lat, 0.0});
  w.doubles(kModelTiepoint, {0.0, 0.0, 0.0, g.origin_lon, g.origin_lat, 0.0});
  w.shorts(kGeoKeyDirectory, {1, 1, 0, 3, 1024, 0, 1, 2, 1025, 0, 1, 1, 2048, 0, 1, 4326});
  w.ascii(kGdalNodata, nodata_text(r.nodata()));
  std::vector<std::span<const float>> planes;
  for (std::size_t i = 0; i < r.band_count(); ++i) planes.push_back(r.plane(i));
  return w.finish(planes);
}

Raster decode_geotiff(std::span<const std::uint8_t> bytes) {
  Reader rd(bytes);
  const auto f = rd.read_ifd();
  auto get = [&](std::uint16_t tag) -> const Reader::Field& {
    auto it = f.find(tag);
    if (it == f.end()) Reader::corrupt("missing tag " + std::to_string(tag));
    return it->second;
  };
  auto get_int = [&](std::uint16_t tag, std::uint64_t dflt) {
    auto it = f.find(tag);
    if (it == f.end()) return dflt;
    auto v = rd.ints(it->second);
    return v.empty() ? dflt : v[0];
  };

  if (f.count(kTileWidth)) throw Error(ErrorCode::UnsupportedLayout, "tiled TIFF");
  if (get_int(kCompression, 1) != 1) throw Error(ErrorCode::UnsupportedLayout, "compressed TIFF");
  const auto width = static_cast<std::uint32_t>(rd.ints(get(kImageWidth)).at(0));
  const auto height = static_cast<std::uint32_t>(rd.ints(get(kImageLength)).at(0));
  const auto spp = static_cast<unsigned>(get_int(kSamplesPerPixel, 1));
  const auto planar = get_int(kPlanarConfig, 1);
  const auto rows_per_strip = std::min<std::uint64_t>(get_int(kRowsPerStrip, height), height);
  if (width == 0 || height == 0 || spp == 0 || rows_per_strip == 0) Reader::corrupt("empty image");

  const auto bits_v = f.count(kBitsPerSample) ? rd.ints(f.at(kBitsPerSample))
                                              : std::vector<std::uint64_t>{1};
  const auto fmt_v = f.count(kSampleFormat) ? rd.ints(f.at(kSampleFormat))
                                            : std::vector<std::uint64_t>{1};
  const auto bits = static_cast<unsigned>(bits_v[0]);
  const auto fmt = static_cast<unsigned>(fmt_v[0]);
  for (auto b : bits_v) {
    if (b != bits) throw Error(ErrorCode::UnsupportedLayout, "mixed bit depths");
  }
  for (auto s : fmt_v) {
    if (s != fmt) throw Error(ErrorCode::UnsupportedLayout, "mixed sample formats");
  }
  if (bits % 8 != 0) throw Error(ErrorCode::UnsupportedLayout, "sub-byte samples");
  const std::size_t bps = bits / 8;

  const auto offsets = rd.ints(get(kStripOffsets));
  const auto counts = rd.ints(get(kStripByteCounts));
  const std::size_t strips_per_plane = (height + rows_per_strip - 1) / rows_per_strip;
  const std::size_t expected = planar == 2 ? strips_per_plane * spp : strips_per_plane;
  if (offsets.size() != expected || counts.size() != expected) {
    Reader::corrupt("strip table does not match image geometry");
  }

  Raster r(width, height);
  if (f.count(kGdalNodata)) {
    const std::string t = rd.text(f.at(kGdalNodata));
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str()) r.set_nodata(static_cast<float>(v));
  }
  if (f.count(kModelPixelScale) && f.count(kModelTiepoint)) {
    const auto scale = rd.reals(f.at(kModelPixelScale));
    const auto tie = rd.reals(f.at(kModelTiepoint));
    if (scale.size() >= 2 && tie.size() >= 6) {
      r.set_geo({tie[4] + tie[1] * scale[1], tie[3] - tie[0] * scale[0], scale[1], scale[0]});
    }
  }
  std::vector<std::string> names;
  if (f.count(kImageDescription)) {
    auto desc = nlohmann::json::parse(rd.text(f.at(kImageDescription)), nullptr, false);
    if (desc.is_object()) {
      if (desc.contains("bands") && desc["bands"].is_array() && desc["bands"].size() == spp) {
        for (const auto& n : desc["bands"]) names.push_back(n.is_string() ? n.get<std::string>() : "");
      }
      if (desc.contains("metadata")) {
        const auto& m = desc["metadata"];
        r.set_metadata(m.is_string() ? m.get<std::string>() : m.dump());
      }
    }
  }
  if (names.size() != spp) {
    names.clear();
    for (unsigned s = 0; s < spp; ++s) names.push_back("band_" + std::to_string(s + 1));
  }

  std::vector<std::vector<float>> planes(spp, std::vector<float>(r.pixel_count()));
  for (std::size_t strip = 0; strip < expected; ++strip) {
    const std::size_t plane = planar == 2 ? strip / strips_per_plane : 0;
    const std::size_t row0 = (planar == 2 ? strip % strips_per_plane : strip) * rows_per_strip;
    const std::size_t rows = std::min<std::size_t>(rows_per_strip, height - row0);
    const std::size_t per_pixel = planar == 2 ? 1 : spp;
    const std::size_t need = rows * width * per_pixel * bps;
    if (counts[strip] < need) Reader::corrupt("strip shorter than its rows");
    rd.need(offsets[strip], need);
    std::size_t off = offsets[strip];
    for (std::size_t i = 0; i < rows * width; ++i) {
      const std::size_t px = row0 * width + i;
      if (planar == 2) {
        planes[plane][px] = rd.sample(off, bits, fmt);
        off += bps;
      } else {
        for (unsigned s = 0; s < spp; ++s, off += bps) planes[s][px] = rd.sample(off, bits, fmt);
      }
    }
  }
  for (unsigned s = 0; s < spp; ++s) r.add_band(names[s], std::move(planes[s]));
  return r;
}

void write_geotiff(const Raster& r, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_geotiff(r));
}

Raster read_geotiff(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return decode_geotiff(bytes);
}

}  // namespace forge
