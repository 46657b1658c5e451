#include <png.h>

#include <cstring>
#include <random>

#include "doctest.h"
#include "forge/error.hpp"
#include "forge/geotiff.hpp"
#include "forge/io.hpp"
#include "forge/png.hpp"
#include "forge/raster.hpp"
#include "support.hpp"

using namespace forge;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

// Minimal hand-rolled TIFF writer used as an independent fixture source.
struct TiffBuilder {
  bool big_endian = false;
  std::vector<std::uint8_t> out;
  struct Entry {
    std::uint16_t tag, type;
    std::uint32_t count, value;
  };
  std::vector<Entry> entries;

  void u16(std::vector<std::uint8_t>& b, std::uint16_t v) const {
    if (big_endian) {
      b.push_back(v >> 8);
      b.push_back(v & 0xff);
    } else {
      b.push_back(v & 0xff);
      b.push_back(v >> 8);
    }
  }
  void u32(std::vector<std::uint8_t>& b, std::uint32_t v) const {
    if (big_endian) {
      u16(b, v >> 16);
      u16(b, v & 0xffff);
    } else {
      u16(b, v & 0xffff);
      u16(b, v >> 16);
    }
  }
  // SHORT values are stored left-justified in the 4-byte slot.
  void short_entry(std::uint16_t tag, std::uint16_t v) {
    std::uint32_t slot = big_endian ? std::uint32_t(v) << 16 : v;
    entries.push_back({tag, 3, 1, slot});
  }
  void long_entry(std::uint16_t tag, std::uint32_t v) { entries.push_back({tag, 4, 1, v}); }

  std::vector<std::uint8_t> build(std::uint32_t w, std::uint32_t h, std::uint16_t spp, std::uint16_t bits,
                                  std::uint16_t fmt, const std::vector<std::uint8_t>& pixels) {
    std::vector<std::uint8_t> b;
    if (big_endian) {
      b = {'M', 'M', 0, 42};
    } else {
      b = {'I', 'I', 42, 0};
    }
    u32(b, 8 + static_cast<std::uint32_t>(pixels.size()));
    b.insert(b.end(), pixels.begin(), pixels.end());
    short_entry(256, static_cast<std::uint16_t>(w));
    short_entry(257, static_cast<std::uint16_t>(h));
    short_entry(258, bits);
    short_entry(259, 1);
    short_entry(262, 1);
    long_entry(273, 8);
    short_entry(277, spp);
    short_entry(278, static_cast<std::uint16_t>(h));
    long_entry(279, static_cast<std::uint32_t>(pixels.size()));
    short_entry(284, 1);
    short_entry(339, fmt);
    std::sort(entries.begin(), entries.end(), [](auto& a, auto& c) { return a.tag < c.tag; });
    u16(b, static_cast<std::uint16_t>(entries.size()));
    for (const auto& e : entries) {
      u16(b, e.tag);
      u16(b, e.type);
      u32(b, e.count);
      u32(b, e.value);
    }
    u32(b, 0);
    return b;
  }
};

}  // namespace

TEST_CASE("raster band invariants") {
  Raster r(4, 3);
  r.add_band("a", std::vector<float>(12, 1.0f));
  CHECK(code_of([&] { r.add_band("b", std::vector<float>(11)); }) == ErrorCode::SizeMismatch);
  CHECK(code_of([&] { r.add_band("a", std::vector<float>(12)); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { (void)r.plane("zz"); }) == ErrorCode::MissingBand);
  CHECK(r.is_nodata(std::nanf("")));
  CHECK_FALSE(r.is_nodata(0.0f));
}

TEST_CASE("quantize_u8") {
  CHECK(quantize_u8(0.0) == 0);
  CHECK(quantize_u8(1.0) == 255);
  CHECK(quantize_u8(0.5) == 128);
  CHECK(quantize_u8(-3.0) == 0);
  CHECK(quantize_u8(7.0) == 255);
  CHECK(quantize_u8(std::nan("")) == 0);
  int prev = 0;
  for (int i = 0; i <= 100'000; ++i) {
    const int q = quantize_u8(i / 100'000.0);
    CHECK(q >= prev);
    prev = q;
  }
  for (int k = 0; k <= 255; ++k) {
    CHECK(quantize_u8(k / 255.0) == k);
    CHECK(quantize_u8(quantize_u8(k / 255.0) / 255.0) == k);
  }
}

TEST_CASE("GeoTIFF round trip is bit exact") {
  std::mt19937_64 rng(1);
  Raster r = test::random_raster(rng, 16, 16, {"B4", "B3", "B2", "QA60"}, -1e6, 1e6);
  r.band(1).samples[5] = std::nanf("");
  r.band(2).samples[7] = std::numeric_limits<float>::infinity();
  r.band(2).samples[8] = -0.0f;
  r.band(3).samples[9] = std::numeric_limits<float>::denorm_min();
  r.set_geo({45.5, 7.25, 0.001, 0.002});
  r.set_metadata(R"({"product_id":"X"})");
  const auto back = decode_geotiff(encode_geotiff(r));
  CHECK(back.same_pixels(r));
  CHECK(back.band_names() == r.band_names());
  CHECK(back.geo() == r.geo());
  CHECK(back.metadata() == r.metadata());
  CHECK(std::isnan(back.nodata()));
}

TEST_CASE("GeoTIFF nodata tag survives") {
  Raster r(3, 2, 0.0f);
  r.add_band("VV", {0, 1, 2, 3, 4, 5});
  test::TempDir dir;
  write_geotiff(r, dir / "a.tif");
  const auto back = read_geotiff(dir / "a.tif");
  CHECK(back.nodata() == 0.0f);
  CHECK_FALSE(std::signbit(back.nodata()));
  CHECK(back.is_nodata(0.0f));

  Raster s(2, 2, -9999.5f);
  s.add_band("VV", {1, 2, 3, 4});
  CHECK(decode_geotiff(encode_geotiff(s)).nodata() == -9999.5f);
}

TEST_CASE("GeoTIFF corruption is reported") {
  std::mt19937_64 rng(2);
  const auto bytes = encode_geotiff(test::random_raster(rng, 8, 8, {"a"}));
  for (std::size_t cut : {std::size_t{0}, std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    const std::span<const std::uint8_t> part(bytes.data(), cut);
    CHECK(code_of([&] { decode_geotiff(part); }) == ErrorCode::CorruptFile);
  }
  std::vector<std::uint8_t> junk(64, 0xAB);
  CHECK(code_of([&] { decode_geotiff(junk); }) == ErrorCode::CorruptFile);
}

TEST_CASE("GeoTIFF reader handles foreign layouts") {
  SUBCASE("big-endian int16 chunky") {
    TiffBuilder t;
    t.big_endian = true;
    std::vector<std::uint8_t> px;
    const std::int16_t vals[] = {-3, 4, 100, -200, 32767, -32768};  // 3 px x 2 samples
    for (auto v : vals) {
      px.push_back(static_cast<std::uint16_t>(v) >> 8);
      px.push_back(static_cast<std::uint16_t>(v) & 0xff);
    }
    const auto r = decode_geotiff(t.build(3, 1, 2, 16, 2, px));
    REQUIRE(r.band_count() == 2);
    CHECK(r.plane(std::size_t{0})[0] == -3.0f);
    CHECK(r.plane(std::size_t{1})[0] == 4.0f);
    CHECK(r.plane(std::size_t{0})[2] == 32767.0f);
    CHECK(r.plane(std::size_t{1})[2] == -32768.0f);
  }
  SUBCASE("little-endian uint8") {
    TiffBuilder t;
    const auto r = decode_geotiff(t.build(2, 2, 1, 8, 1, {0, 7, 128, 255}));
    CHECK(r.plane(std::size_t{0})[3] == 255.0f);
    CHECK(r.plane(std::size_t{0})[1] == 7.0f);
  }
  SUBCASE("float64 samples") {
    TiffBuilder t;
    std::vector<std::uint8_t> px(16);
    const double a = 1.5, b = -2.25;
    std::memcpy(px.data(), &a, 8);
    std::memcpy(px.data() + 8, &b, 8);
    const auto r = decode_geotiff(t.build(2, 1, 1, 64, 3, px));
    CHECK(r.plane(std::size_t{0})[0] == 1.5f);
    CHECK(r.plane(std::size_t{0})[1] == -2.25f);
  }
  SUBCASE("compressed data is unsupported") {
    TiffBuilder t;
    auto bytes = t.build(2, 2, 1, 8, 1, {0, 1, 2, 3});
    // Compression tag value sits in the IFD; flip it to LZW (5).
    const std::size_t ifd = 8 + 4;
    const std::uint16_t count = bytes[ifd] | bytes[ifd + 1] << 8;
    for (std::size_t e = 0; e < count; ++e) {
      const std::size_t at = ifd + 2 + e * 12;
      if ((bytes[at] | bytes[at + 1] << 8) == 259) bytes[at + 8] = 5;
    }
    CHECK(code_of([&] { decode_geotiff(bytes); }) == ErrorCode::UnsupportedLayout);
  }
}

namespace {

// Decode with libpng's simplified API, independent of forge::decode_png.
std::vector<std::uint8_t> libpng_decode(const std::vector<std::uint8_t>& bytes, std::uint32_t format,
                                        std::uint32_t& w, std::uint32_t& h) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  REQUIRE(png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()));
  img.format = format;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(img));
  REQUIRE(png_image_finish_read(&img, nullptr, px.data(), 0, nullptr));
  w = img.width;
  h = img.height;
  return px;
}

}  // namespace

TEST_CASE("PNG gray constant plane") {
  test::TempDir dir;
  const Plane8 p{31, 17, std::vector<std::uint8_t>(31 * 17, 128)};
  write_png_gray(p, dir / "g.png");
  const auto back = read_png(dir / "g.png");
  CHECK(back.channels == 1);
  CHECK(back.px == p.px);
  std::uint32_t w = 0, h = 0;
  const auto raw = libpng_decode(io::read_file(dir / "g.png"), PNG_FORMAT_GRAY, w, h);
  CHECK(w == 31);
  CHECK(h == 17);
  CHECK(std::all_of(raw.begin(), raw.end(), [](auto v) { return v == 128; }));
}

TEST_CASE("PNG RGB channel order") {
  test::TempDir dir;
  std::mt19937_64 rng(3);
  auto plane = [&] {
    Plane8 p{20, 10, std::vector<std::uint8_t>(200)};
    for (auto& v : p.px) v = rng() & 0xff;
    return p;
  };
  const Plane8 r = plane(), g = plane(), b = plane();
  write_png_rgb(r, g, b, dir / "c.png");
  const auto back = read_png(dir / "c.png");
  CHECK(back.channel(0).px == r.px);
  CHECK(back.channel(1).px == g.px);
  CHECK(back.channel(2).px == b.px);
  std::uint32_t w = 0, h = 0;
  const auto raw = libpng_decode(io::read_file(dir / "c.png"), PNG_FORMAT_RGB, w, h);
  for (std::size_t i = 0; i < 200; ++i) {
    CHECK(raw[i * 3] == r.px[i]);
    CHECK(raw[i * 3 + 1] == g.px[i]);
    CHECK(raw[i * 3 + 2] == b.px[i]);
  }
}

TEST_CASE("PNG plane size mismatch fails before writing") {
  test::TempDir dir;
  const Plane8 a{4, 4, std::vector<std::uint8_t>(16)};
  const Plane8 b{4, 5, std::vector<std::uint8_t>(20)};
  CHECK(code_of([&] { write_png_rgb(a, a, b, dir / "x.png"); }) == ErrorCode::SizeMismatch);
  CHECK_FALSE(std::filesystem::exists(dir / "x.png"));
}

TEST_CASE("PNG decoder rejects garbage") {
  std::vector<std::uint8_t> junk(100, 7);
  CHECK(code_of([&] { decode_png(junk); }) == ErrorCode::CorruptFile);
  const Plane8 p{8, 8, std::vector<std::uint8_t>(64, 3)};
  auto bytes = encode_png(interleave(std::span(&p, 1)));
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_png(bytes), Error);
}
