#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "forge/catalog.hpp"
#include "forge/cleaner.hpp"
#include "forge/converter.hpp"
#include "forge/geo.hpp"
#include "forge/mock_provider.hpp"
#include "forge/patch.hpp"
#include "forge/pipeline.hpp"
#include "forge/store.hpp"
#include "oracle_geo.hpp"
#include "oracle_norm.hpp"
#include "support.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome end_to_end() {
  test::TempDir dir("forge-accept");
  PipelineConfig cfg;
  cfg.root = dir.path().string();
  cfg.sampler.n_points = 1;
  cfg.sampler.seed = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = pipeline::run_full_auto(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto m = store::load_manifest(dir.path());
  const auto s1 = m.selected_count(Satellite::S1), s2 = m.selected_count(Satellite::S2);
  return {res.ok && s1 == 12 && s2 == 12 && secs < 60.0,
          fmt("selected %zu (S1 %zu, S2 %zu) in %.1f s", s1 + s2, s1, s2, secs)};
}

Outcome plan_arithmetic() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lat(-50, 80), lon(-180, 180);
  for (std::size_t n : {1u, 2u, 7u, 50u, 333u}) {
    std::vector<geo::GeoPoint> pts(n);
    for (auto& p : pts) p = {lat(rng), lon(rng)};
    const auto plan = catalog::plan_downloads(pts, {});
    if (plan.tasks.size() != 72 * n) return {false, fmt("N=%zu gave %zu tasks", n, plan.tasks.size())};
  }
  return {true, "N in {1,2,7,50,333} -> 72*N tasks"};
}

Outcome generator() {
  const auto path = test::data_dir() / "water_mask_025deg.wmsk";
  const auto raw = test::read_raw(path);
  geo::SamplerConfig cfg;
  cfg.n_points = 10'000;
  cfg.seed = 2024;
  const auto pts = geo::generate_points(cfg, geo::load_mask(path));
  std::size_t good = 0;
  const double cell = 180.0 / raw.rows;
  for (const auto& p : pts) {
    const auto r = static_cast<std::uint32_t>(std::clamp(std::floor((90.0 - p.lat) / cell), 0.0, raw.rows - 1.0));
    const auto c = static_cast<std::uint32_t>(std::clamp(std::floor((p.lon + 180.0) / cell), 0.0, raw.cols - 1.0));
    good += !raw.water(r, c) && p.lat >= -56.0 && p.lat <= 84.0;
  }

  cfg.seed = 99;
  const auto uni = geo::generate_points(cfg, geo::WaterMask::uniform(180, 360, false));
  std::vector<double> bins(64, 0.0);
  for (const auto& p : uni) {
    const int i = std::min(7, static_cast<int>((p.lat + 56.0) / 140.0 * 8));
    const int j = std::min(7, static_cast<int>((p.lon + 180.0) / 360.0 * 8));
    bins[i * 8 + j] += 1;
  }
  const double pval = test::chi_square_p(bins, static_cast<double>(uni.size()) / 64);
  return {pts.size() == 10'000 && good == pts.size() && uni.size() == 10'000 && pval > 0.01,
          fmt("%zu/%zu on land in window, 8x8 chi-square p=%.3f", good, pts.size(), pval)};
}

Outcome normalization() {
  using convert::Mode;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint32_t> dim(8, 64), nb(1, 3);
  std::uniform_real_distribution<double> lo(-5000, 5000), span(1e-3, 2e4), u(0, 1);
  double worst = 0;
  std::size_t checked = 0;
  for (Mode m : {Mode::MinMax, Mode::Standardize, Mode::MaxDiv}) {
    for (int t = 0; t < 200; ++t) {
      const double a = m == Mode::MaxDiv ? std::abs(lo(rng)) : lo(rng);
      const double b = a + span(rng);
      const auto w = dim(rng), h = dim(rng);
      Raster r(w, h, t % 3 == 0 ? -9999.0f : std::nanf(""));
      const char* names[] = {"B4", "B3", "B2"};
      const auto bands = nb(rng);
      for (std::uint32_t k = 0; k < bands; ++k) {
        std::vector<float> px(r.pixel_count());
        for (auto& v : px) v = static_cast<float>(a + (b - a) * u(rng));
        px[k] = r.nodata();
        r.add_band(names[k], std::move(px));
      }
      std::vector<std::size_t> all(bands);
      std::iota(all.begin(), all.end(), 0);
      for (std::size_t b0 = 0; b0 < bands; ++b0) {
        const std::vector<std::size_t> scope = t % 2 ? all : std::vector<std::size_t>{b0};
        const auto o = test::Oracle::of(r, scope);
        const auto s = convert::stats_of(r, scope);
        const auto n = convert::normalize(r, m, s);
        const auto q = convert::quantize_band(r, b0, m, s);
        const auto in = r.plane(b0);
        const auto out = n.plane(b0);
        for (std::size_t i = 0; i < in.size(); ++i) {
          if (r.is_nodata(in[i])) continue;
          const double err = static_cast<double>(std::abs(static_cast<test::LD>(out[i]) - o.eval(m, in[i])));
          worst = std::max(worst, err);
          const bool range_ok = m == Mode::Standardize || (out[i] >= 0.0f && out[i] <= 1.0f);
          if (err > 1e-6 || q.px[i] != o.quantize(m, in[i]) || !range_ok) {
            return {false, fmt("mode %s raster %d pixel %zu: err %.3g, q %d vs %d", std::string(to_string(m)).c_str(),
                               t, i, err, q.px[i], o.quantize(m, in[i]))};
          }
          ++checked;
        }
      }
    }
  }
  return {true, fmt("600 rasters, %zu samples, max |err| %.2g, quantized exact", checked, worst)};
}

Outcome cleaner() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> n(0, 8), q(0, 10), day(0, 5);
  const Thresholds th;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<QualityReport> reps;
    std::vector<std::int64_t> when;
    for (int i = n(rng); i > 0; --i) {
      reps.push_back(make_report(q(rng) * 0.01, q(rng) * 0.05, th));
      when.push_back(day(rng));
    }
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < reps.size(); ++i) {
      if (reps[i].verdict != Verdict::Pass) continue;
      if (!best || reps[i].score < reps[*best].score ||
          (reps[i].score == reps[*best].score && when[i] < when[*best])) {
        best = i;
      }
    }
    if (clean::select_best(reps, when) != best) return {false, fmt("trial %d disagrees with brute force", trial)};
  }

  catalog::MockScenario sc;
  sc.products_per_month = 4;
  const catalog::MissingFill fills[] = {catalog::MissingFill::Nodata, catalog::MissingFill::Black,
                                        catalog::MissingFill::Gray};
  catalog::MockDefect cloud;
  cloud.candidate = 0;
  cloud.cloud_fraction = 0.9;
  sc.defects.push_back(cloud);
  for (std::uint32_t k = 0; k < 3; ++k) {
    catalog::MockDefect d;
    d.candidate = k + 1;
    d.missing_fraction = 0.25;
    d.fill = fills[k];
    sc.defects.push_back(d);
  }
  catalog::MockProvider mock(5, sc);
  catalog::ProductQuery pq;
  pq.footprint = geo::footprint_of({48.2, 16.4}, 1000, 10);
  pq.start = UtcTime{2020, 6, 1, 0};
  pq.end = UtcTime{2020, 6, 30, 86399};
  pq.bands = catalog::default_bands(Satellite::S2);
  auto found = mock.search(pq);
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.product_id < b.product_id; });
  const clean::CleanerConfig cc;
  std::ostringstream detail;
  bool ok = found.size() == 4;
  for (std::size_t k = 0; ok && k < 4; ++k) {
    const auto rep = clean::score_candidate(catalog::fetch(mock, found[k], pq.bands, pq.footprint), Satellite::S2, cc);
    const double measured = k == 0 ? rep.cloud_fraction : rep.missing_fraction;
    const double injected = k == 0 ? 0.9 : 0.25;
    ok = ok && rep.verdict == Verdict::Fail && std::abs(measured - injected) <= 0.02;
    detail << (k == 0 ? " cloud " : " missing ") << fmt("%.4f", measured);
  }
  return {ok, "1000 select_best trials agree;" + detail.str() + " (all rejected)"};
}

Image8 noise(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, std::uint32_t ch) {
  Image8 img{w, h, ch, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * ch)};
  for (auto& v : img.px) v = static_cast<std::uint8_t>(rng());
  return img;
}

bool same_window(const Image8& a, std::uint32_t ax, std::uint32_t ay, const Image8& b, std::uint32_t bx,
                 std::uint32_t by, std::uint32_t w, std::uint32_t h) {
  const std::size_t ch = a.channels;
  for (std::uint32_t y = 0; y < h; ++y) {
    const auto* pa = &a.px[((static_cast<std::size_t>(ay) + y) * a.width + ax) * ch];
    const auto* pb = &b.px[((static_cast<std::size_t>(by) + y) * b.width + bx) * ch];
    if (!std::equal(pa, pa + w * ch, pb)) return false;
  }
  return true;
}

Outcome patches() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::uint32_t> dim(20, 400);
  for (int t = 0; t < 200; ++t) {
    const auto w = dim(rng), h = dim(rng);
    const auto size = std::uniform_int_distribution<std::uint32_t>(1, std::min(w, h))(rng);
    const auto img = noise(rng, w, h, t % 2 ? 3 : 1);
    const auto grid = patch::PatchGrid::fit(w, h, size, size);
    Image8 stitched{grid.cols * size, grid.rows * size, img.channels, {}};
    stitched.px.resize(static_cast<std::size_t>(stitched.width) * stitched.height * img.channels);
    for (const auto& p : patch::extract_patches(img, grid)) {
      for (std::uint32_t y = 0; y < size; ++y) {
        const auto src = p.image.px.begin() + static_cast<std::ptrdiff_t>(y) * size * img.channels;
        std::copy(src, src + static_cast<std::ptrdiff_t>(size) * img.channels,
                  stitched.px.begin() +
                      ((static_cast<std::ptrdiff_t>(p.row) * size + y) * stitched.width + p.col * size) * img.channels);
      }
    }
    if (!same_window(stitched, 0, 0, img, 0, 0, stitched.width, stitched.height)) {
      return {false, fmt("%ux%u patch %u does not reassemble", w, h, size)};
    }
  }

  const auto grid = patch::PatchGrid::fit(1000, 1000, 250, 250);
  std::vector<patch::SeriesFrame> series;
  for (int m = 1; m <= 12; ++m) series.push_back({{2020, m}, noise(rng, 1000, 1000, 3)});
  std::shuffle(series.begin(), series.end(), rng);
  const auto preview = patch::build_preview(series, 250, 250);
  for (const auto& f : series) {
    const auto row = static_cast<std::uint32_t>(f.month.month - 1);
    for (std::uint32_t k = 0; k < 16; ++k) {
      if (!same_window(preview, k * 250, row * 250, f.image, (k % 4) * 250, (k / 4) * 250, 250, 250)) {
        return {false, fmt("preview cell (%u, %u) differs", row, k)};
      }
    }
  }
  return {grid.count() == 16 && preview.width == 4000 && preview.height == 3000,
          fmt("200 random grids reassemble; 1000/250 -> %u patches; %ux%u preview cells exact", grid.count(),
              preview.width, preview.height)};
}

Outcome codecs() {
  const bool examples =
      store::layout_relpath({Satellite::S2, 7, {2020, 3}, 1, store::Kind::Raw}) ==
          "Sentinel-2/scene_0007/2020-03/raw_1.tif" &&
      store::layout_relpath({Satellite::S1, 42, {2021, 11}, 0, store::Kind::Converted}) ==
          "Sentinel-1/scene_0042/2021-11/img_0.png" &&
      patch::patch_filename(7, {2020, 3}, 1, 2) == "scene_0007_2020-03_r01_c02.png" &&
      patch::preview_relpath(7, Satellite::S2) == "previews/scene_0007_s2.png" &&
      store::item_id(Satellite::S1, 7, {2020, 3}, 2) == "S1-0007-2020-03-2";
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint32_t> id(0, 9999), yr(1970, 2099), mo(1, 12), small(0, 99), kind(0, 2);
  constexpr int kTrials = 10'000;
  for (int i = 0; i < kTrials; ++i) {
    const auto sat = i % 2 ? Satellite::S1 : Satellite::S2;
    const YearMonth ym{static_cast<int>(yr(rng)), static_cast<int>(mo(rng))};
    const store::LayoutKey key{sat, id(rng), ym, small(rng), static_cast<store::Kind>(kind(rng))};
    const patch::PatchName name{id(rng), ym, small(rng), small(rng), i % 3 ? ".png" : ".tif"};
    const auto ref = store::parse_item_id(store::item_id(sat, key.scene_id, ym, key.rank));
    if (store::parse_layout(store::layout_relpath(key)) != key ||
        patch::parse_patch_filename(patch::patch_filename(name)) != name || !ref || ref->scene_id != key.scene_id ||
        ref->rank != key.rank || ref->month != ym || ref->satellite != sat) {
      return {false, fmt("round trip failed at trial %d", i)};
    }
  }
  return {examples, fmt("examples %s; %d randomized round trips", examples ? "match" : "DIFFER", kTrials)};
}

Outcome resumability() {
  test::TempDir ref("forge-accept");
  if (!pipeline::run_full_auto(test::small_config(ref.path(), 2, 3)).ok) return {false, "reference run failed"};
  const auto want = store::load_manifest(ref.path());
  for (std::size_t stop = 0; stop < store::kStages.size(); ++stop) {
    test::TempDir dir("forge-accept");
    const auto cfg = test::small_config(dir.path(), 2, 3);
    pipeline::Hooks hooks;
    hooks.stop_after = [&](store::Stage s) { return s == store::kStages[stop]; };
    if (!pipeline::run_full_auto(cfg, hooks).ok || !pipeline::run_full_auto(cfg).ok) {
      return {false, fmt("run interrupted after %s failed", std::string(store::to_string(store::kStages[stop])).c_str())};
    }
    if (store::load_manifest(dir.path()) != want) {
      return {false, fmt("manifest differs after interrupting at %s",
                         std::string(store::to_string(store::kStages[stop])).c_str())};
    }
  }
  return {true, "interrupting after each of 5 stages then resuming matches the uninterrupted manifest"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"end-to-end default run selects 24 images", end_to_end},
      {"download plan has 72*N tasks", plan_arithmetic},
      {"generator lands on land and is uniform", generator},
      {"normalization matches high-precision oracle", normalization},
      {"cleaner selection and defect measurement", cleaner},
      {"patch reassembly and preview mosaic", patches},
      {"layout and filename codecs", codecs},
      {"resumability after any stage", resumability},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
