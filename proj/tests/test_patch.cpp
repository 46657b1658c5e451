#include <random>

#include "doctest.h"
#include "forge/error.hpp"
#include "forge/patch.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::patch;

namespace {

Image8 noise(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, std::uint32_t ch) {
  Image8 img{w, h, ch, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * ch)};
  std::uniform_int_distribution<int> u(0, 255);
  for (auto& v : img.px) v = static_cast<std::uint8_t>(u(rng));
  return img;
}

// Independent pixel copy for comparisons.
Image8 window(const Image8& src, std::uint32_t x0, std::uint32_t y0, std::uint32_t w, std::uint32_t h) {
  Image8 out{w, h, src.channels, {}};
  for (std::uint32_t y = y0; y < y0 + h; ++y) {
    for (std::uint32_t x = x0; x < x0 + w; ++x) {
      for (std::uint32_t c = 0; c < src.channels; ++c) {
        out.px.push_back(src.px[(static_cast<std::size_t>(y) * src.width + x) * src.channels + c]);
      }
    }
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("grid geometry") {
  const auto g = PatchGrid::fit(1000, 1000, 250, 250);
  CHECK(g.rows == 4);
  CHECK(g.cols == 4);
  CHECK(g.count() == 16);

  const auto partial = PatchGrid::fit(1000, 1000, 300, 300);
  CHECK(partial.count() == 9);

  const auto overlap = PatchGrid::fit(1000, 1000, 250, 125);
  CHECK(overlap.rows == 7);
  CHECK(overlap.count() == 49);

  const auto identity = PatchGrid::fit(640, 480, 480, 480);
  CHECK(identity.rows == 1);
  CHECK(identity.cols == 1);
  CHECK(PatchGrid::fit(500, 500, 500, 500).count() == 1);

  const auto wide = PatchGrid::fit(1000, 500, 250, 250);
  CHECK(wide.rows == 2);
  CHECK(wide.cols == 4);

  CHECK(code_of([] { PatchGrid::fit(1000, 1000, 1001, 250); }) == ErrorCode::PatchTooLarge);
  CHECK(code_of([] { PatchGrid::fit(1000, 400, 500, 250); }) == ErrorCode::PatchTooLarge);
  CHECK(code_of([] { PatchGrid::fit(1000, 1000, 0, 250); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { PatchGrid::fit(1000, 1000, 250, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("patches tile the image and reassemble exactly") {
  std::mt19937_64 rng(31);
  for (std::uint32_t ch : {1u, 3u}) {
    const auto img = noise(rng, 1000, 1000, ch);
    const auto grid = PatchGrid::fit(1000, 1000, 250, 250);
    const auto patches = extract_patches(img, grid);
    REQUIRE(patches.size() == 16);
    Image8 back{1000, 1000, ch, std::vector<std::uint8_t>(img.px.size(), 0)};
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const auto& p = patches[i];
      CHECK(p.row == i / 4);
      CHECK(p.col == i % 4);
      CHECK(p.image == window(img, p.col * 250, p.row * 250, 250, 250));
      for (std::uint32_t y = 0; y < 250; ++y) {
        const auto src = p.image.px.begin() + static_cast<std::ptrdiff_t>(y) * 250 * ch;
        std::copy(src, src + 250 * ch,
                  back.px.begin() + ((static_cast<std::ptrdiff_t>(p.row) * 250 + y) * 1000 + p.col * 250) * ch);
      }
    }
    CHECK(back == img);
  }
}

TEST_CASE("overlapping stride") {
  std::mt19937_64 rng(32);
  const auto img = noise(rng, 100, 60, 1);
  const auto grid = PatchGrid::fit(100, 60, 40, 10);
  CHECK(grid.rows == 3);
  CHECK(grid.cols == 7);
  const auto patches = extract_patches(img, grid);
  REQUIRE(patches.size() == 21);
  CHECK(patches[8].image == window(img, 10, 10, 40, 40));
  CHECK(patches.back().image == window(img, 60, 20, 40, 40));
}

TEST_CASE("raster crops keep georeference") {
  std::mt19937_64 rng(33);
  auto r = test::random_raster(rng, 20, 10, {"B4", "B3"});
  r.set_geo({45.0, 7.0, 0.5, 0.25});
  r.set_metadata(R"({"x":1})");
  const auto c = crop(r, 4, 2, 5, 3);
  CHECK(c.width() == 5);
  CHECK(c.height() == 3);
  CHECK(c.geo().origin_lat == 44.0);
  CHECK(c.geo().origin_lon == 8.0);
  CHECK(c.geo().pixel_lat == 0.5);
  CHECK(c.metadata() == r.metadata());
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::uint32_t y = 0; y < 3; ++y) {
      for (std::uint32_t x = 0; x < 5; ++x) CHECK(c.at(b, x, y) == r.at(b, x + 4, y + 2));
    }
  }
  const auto parts = extract_patches(r, PatchGrid::fit(20, 10, 5, 5));
  CHECK(parts.size() == 8);
  CHECK(parts[5].image.geo().origin_lon == 8.25);
  CHECK(parts[5].image.geo().origin_lat == 42.5);
  CHECK(code_of([&] { crop(r, 18, 0, 5, 5); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("patch filenames") {
  CHECK(patch_filename(7, {2020, 3}, 1, 2) == "scene_0007_2020-03_r01_c02.png");
  CHECK(patch_filename({123, {2021, 12}, 10, 0, ".tif"}) == "scene_0123_2021-12_r10_c00.tif");
  CHECK(parse_patch_filename("scene_0007_2020-03_r01_c02.png") == PatchName{7, {2020, 3}, 1, 2, ".png"});
  for (const char* bad : {"scene_7_2020-03_r01_c02.png", "scene_0007_2020-3_r01_c02.png", "scene_0007_2020-03_r1_c02.png",
                          "scene_0007_2020-03_r01_c02.jpg", "scene_0007_2020-13_r01_c02.png", "x.png", ""}) {
    CHECK_FALSE(parse_patch_filename(bad));
  }
  std::mt19937_64 rng(34);
  std::uniform_int_distribution<std::uint32_t> id(0, 9999), mo(1, 12), yr(1990, 2090), rc(0, 99);
  for (int i = 0; i < 500; ++i) {
    const PatchName n{id(rng), {static_cast<int>(yr(rng)), static_cast<int>(mo(rng))}, rc(rng), rc(rng),
                      i % 2 ? ".png" : ".tif"};
    REQUIRE(parse_patch_filename(patch_filename(n)) == n);
  }
}

TEST_CASE("relative output paths") {
  CHECK(preview_relpath(3, Satellite::S1) == "previews/scene_0003_s1.png");
  CHECK(preview_relpath(42, Satellite::S2) == "previews/scene_0042_s2.png");
  CHECK(patch_dir_relpath(42, Satellite::S2) == "patches/Sentinel-2/scene_0042");
}

TEST_CASE("preview mosaic of a year of patches") {
  std::mt19937_64 rng(35);
  std::vector<SeriesFrame> series;
  for (int m = 12; m >= 1; --m) series.push_back({{2020, m}, noise(rng, 1000, 1000, 3)});
  const auto preview = build_preview(series, 250, 250);
  CHECK(preview.width == 4000);
  CHECK(preview.height == 3000);
  CHECK(preview.channels == 3);
  for (const auto& f : series) {
    const auto t = static_cast<std::uint32_t>(f.month.month - 1);
    for (std::uint32_t k = 0; k < 16; ++k) {
      const auto cell = window(preview, k * 250, t * 250, 250, 250);
      REQUIRE(cell == window(f.image, (k % 4) * 250, (k / 4) * 250, 250, 250));
    }
  }
}

TEST_CASE("preview rejects inconsistent series") {
  std::mt19937_64 rng(36);
  CHECK(code_of([] { build_preview({}, 10, 10); }) == ErrorCode::InconsistentSeries);
  CHECK(code_of([&] {
          build_preview({{{2020, 1}, noise(rng, 40, 40, 1)}, {{2020, 2}, noise(rng, 40, 30, 1)}}, 10, 10);
        }) == ErrorCode::InconsistentSeries);
  CHECK(code_of([&] {
          build_preview({{{2020, 1}, noise(rng, 40, 40, 1)}, {{2020, 2}, noise(rng, 40, 40, 3)}}, 10, 10);
        }) == ErrorCode::InconsistentSeries);
  CHECK(code_of([&] {
          build_preview({{{2020, 1}, noise(rng, 40, 40, 1)}, {{2020, 1}, noise(rng, 40, 40, 1)}}, 10, 10);
        }) == ErrorCode::InconsistentSeries);
  CHECK(code_of([&] { build_preview({{{2020, 1}, noise(rng, 40, 40, 1)}}, 50, 50); }) == ErrorCode::PatchTooLarge);
  const auto single = build_preview({{{2020, 1}, noise(rng, 40, 40, 1)}}, 40, 40);
  CHECK(single.width == 40);
  CHECK(single.height == 40);
}
