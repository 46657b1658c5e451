#include <fstream>
#include <random>
#include <regex>
#include <thread>

#include "doctest.h"
#include "forge/error.hpp"
#include "forge/io.hpp"
#include "forge/store.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::store;
using nlohmann::json;

namespace {

DatasetManifest sample() {
  DatasetManifest m;
  Region r;
  r.scene_id = 3;
  r.center = {-33.123456, 151.654321};
  MonthEntry me;
  me.month = {2020, 5};
  SatelliteMonth s2;
  for (std::uint32_t k = 0; k < 3; ++k) {
    Candidate c;
    c.rank = k;
    c.product_id = "P" + std::to_string(k);
    c.acquired_at = "2020-05-1" + std::to_string(k) + "T10:00:00Z";
    c.raw_path = layout_relpath({Satellite::S2, 3, {2020, 5}, k, Kind::Raw});
    c.image_path = layout_relpath({Satellite::S2, 3, {2020, 5}, k, Kind::Converted});
    c.report = make_report(0.01 * k, 0.1, {});
    c.decision = k == 1 ? Decision::Keep : Decision::Discard;
    c.decided_by = k == 2 ? DecidedBy::Human : DecidedBy::Auto;
    s2.candidates.push_back(c);
  }
  s2.selected = s2.candidates[1].best_path();
  me.per_satellite[Satellite::S2] = s2;
  SatelliteMonth s1;
  s1.unfavorable = true;
  me.per_satellite[Satellite::S1] = s1;
  r.months.push_back(me);
  r.months.push_back({{2020, 6}, {}});
  m.regions.push_back(r);
  m.stage_status[Stage::Generate] = StageStatus::Done;
  m.stage_status[Stage::Download] = StageStatus::Failed;
  return m;
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

TEST_CASE("layout paths") {
  CHECK(layout_relpath({Satellite::S1, 7, {2020, 1}, 0, Kind::Raw}) == "Sentinel-1/scene_0007/2020-01/raw_0.tif");
  CHECK(layout_relpath({Satellite::S2, 1234, {2021, 11}, 2, Kind::Converted}) ==
        "Sentinel-2/scene_1234/2021-11/img_2.png");
  CHECK(layout_relpath({Satellite::S2, 0, {2021, 11}, 1, Kind::ConvertedTiff}) ==
        "Sentinel-2/scene_0000/2021-11/img_1.tif");
  CHECK(layout_path("/data", Satellite::S1, 7, {2020, 1}, 0, Kind::Raw) ==
        fs::path("/data/Sentinel-1/scene_0007/2020-01/raw_0.tif"));
  CHECK(discarded_relpath("Sentinel-2/scene_0001/2020-01/img_2.png") ==
        "Sentinel-2/scene_0001/2020-01/discarded/img_2.png");

  for (const char* bad : {"Sentinel-3/scene_0007/2020-01/raw_0.tif", "Sentinel-1/scene_7/2020-01/raw_0.tif",
                          "Sentinel-1/scene_0007/2020-1/raw_0.tif", "Sentinel-1/scene_0007/2020-01/raw_0.png",
                          "Sentinel-1/scene_0007/2020-01/raw_00.tif", "Sentinel-1/scene_0007/2020-01/foo_0.tif",
                          "Sentinel-1/scene_0007/raw_0.tif", ""}) {
    CHECK_FALSE(parse_layout(bad));
  }

  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::uint32_t> id(0, 9999), mo(1, 12), rank(0, 20), kind(0, 2), sat(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const LayoutKey k{sat(rng) ? Satellite::S2 : Satellite::S1, id(rng), {2015 + i % 10, static_cast<int>(mo(rng))},
                      rank(rng), static_cast<Kind>(kind(rng))};
    REQUIRE(parse_layout(layout_relpath(k)) == k);
  }
}

TEST_CASE("stage names") {
  for (auto s : kStages) CHECK(parse_stage(to_string(s)) == s);
  CHECK(to_string(Stage::Extract) == "extract");
  CHECK_FALSE(parse_stage("upload"));
  for (auto s : {StageStatus::NotRun, StageStatus::Running, StageStatus::Done, StageStatus::Failed}) {
    CHECK(parse_stage_status(to_string(s)) == s);
  }
  DatasetManifest m;
  for (auto s : kStages) CHECK(m.status(s) == StageStatus::NotRun);
}

TEST_CASE("manifest JSON round trip") {
  const auto m = sample();
  const auto text = to_json(m);
  CHECK(manifest_from_json(text) == m);
  const auto j = json::parse(text);
  CHECK(j["version"] == kManifestVersion);
  CHECK(j["stage_status"]["download"] == to_string(StageStatus::Failed));

  auto other = j;
  other["version"] = 99;
  CHECK(code_of([&] { manifest_from_json(other.dump()); }) == ErrorCode::SchemaMismatch);
  CHECK(code_of([] { manifest_from_json("{"); }) == ErrorCode::CorruptManifest);
  CHECK(code_of([] { manifest_from_json("[]"); }) == ErrorCode::CorruptManifest);
  auto bad = j;
  bad["regions"][0]["months"][0]["month"] = "May 2020";
  CHECK(code_of([&] { manifest_from_json(bad.dump()); }) == ErrorCode::CorruptManifest);
}

TEST_CASE("commit and load") {
  test::TempDir dir;
  CHECK_FALSE(manifest_exists(dir.path()));
  CHECK(load_or_empty(dir.path()) == DatasetManifest{});
  CHECK(code_of([&] { load_manifest(dir.path()); }) == ErrorCode::Io);

  const auto m = sample();
  CHECK(code_of([&] { commit_manifest(dir.path(), m), load_manifest(dir.path()); }) == ErrorCode::CorruptManifest);

  const auto sel = dir.path() / *m.regions[0].months[0].per_satellite.at(Satellite::S2).selected;
  fs::create_directories(sel.parent_path());
  io::write_file_atomic(sel, std::string("png"));
  CHECK(load_manifest(dir.path()) == m);
  for (const auto& e : fs::directory_iterator(dir.path())) {
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  }

  auto broken = m;
  broken.regions[0].months[0].per_satellite.at(Satellite::S2).candidates[1].decision = Decision::Discard;
  CHECK(code_of([&] { validate(broken, dir.path()); }) == ErrorCode::CorruptManifest);
  broken = m;
  broken.regions[0].months[0].per_satellite.at(Satellite::S2).selected = "elsewhere.png";
  CHECK(code_of([&] { validate(broken, dir.path()); }) == ErrorCode::CorruptManifest);
}

TEST_CASE("concurrent updates are serialized") {
  test::TempDir dir;
  constexpr int kThreads = 8, kEach = 25;
  std::vector<std::thread> pool;
  for (int t = 0; t < kThreads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = 0; i < kEach; ++i) {
        update_manifest(dir.path(), [&](DatasetManifest& m) {
          Region r;
          r.scene_id = static_cast<std::uint32_t>(t * kEach + i);
          m.regions.push_back(r);
        });
      }
    });
  }
  for (auto& t : pool) t.join();
  const auto m = load_manifest(dir.path());
  REQUIRE(m.regions.size() == kThreads * kEach);
  std::vector<std::uint32_t> ids;
  for (const auto& r : m.regions) ids.push_back(r.scene_id);
  std::sort(ids.begin(), ids.end());
  for (std::uint32_t i = 0; i < ids.size(); ++i) CHECK(ids[i] == i);
}

TEST_CASE("counts") {
  auto m = sample();
  const auto& r = m.regions[0];
  CHECK(months_done(r) == 1);
  CHECK(unfavorable_count(r) == 1);
  CHECK(m.selected_count() == 1);
  CHECK(m.selected_count(Satellite::S1) == 0);
  CHECK(m.find_region(3) == &m.regions[0]);
  CHECK(m.find_region(4) == nullptr);
  CHECK(m.regions[0].find_month({2020, 6}) != nullptr);
  CHECK(m.regions[0].find_month({2020, 7}) == nullptr);
}

TEST_CASE("points GeoJSON") {
  const auto empty = json::parse(export_points_geojson(DatasetManifest{}));
  CHECK(empty["type"] == "FeatureCollection");
  CHECK(empty["features"].empty());

  DatasetManifest m;
  for (std::uint32_t i = 0; i < 5; ++i) {
    Region r;
    r.scene_id = i;
    r.center = {10.0 + i * 1.1234567, -20.0 - i * 2.7654321};
    m.regions.push_back(r);
  }
  m.regions.push_back(sample().regions[0]);
  m.regions.back().scene_id = 5;
  const auto text = export_points_geojson(m);
  const auto j = json::parse(text);
  REQUIRE(j["features"].size() == 6);
  const auto& f = j["features"][1];
  CHECK(f["type"] == "Feature");
  CHECK(f["geometry"]["type"] == "Point");
  CHECK(f["geometry"]["coordinates"][0].get<double>() == doctest::Approx(-22.765432).epsilon(1e-12));
  CHECK(f["geometry"]["coordinates"][1].get<double>() == doctest::Approx(11.123457).epsilon(1e-12));
  CHECK(f["properties"]["scene_id"] == 1);
  CHECK(j["features"][5]["properties"]["months_done"] == 1);
  CHECK(j["features"][5]["properties"]["unfavorable_count"] == 1);
  CHECK(text.find("-33.123456") != std::string::npos);
  CHECK(text.find("151.654321") != std::string::npos);
  const std::regex too_long(R"(\d\.\d{7,})");
  CHECK_FALSE(std::regex_search(text, too_long));
}

TEST_CASE("review item ids") {
  CHECK(item_id(Satellite::S2, 7, {2020, 3}, 1) == "S2-0007-2020-03-1");
  const auto ref = parse_item_id("S1-0123-2021-12-2");
  REQUIRE(ref);
  CHECK(ref->satellite == Satellite::S1);
  CHECK(ref->scene_id == 123);
  CHECK(ref->month == YearMonth{2021, 12});
  CHECK(ref->rank == 2);
  for (const char* bad : {"S3-0007-2020-03-1", "S2-7-2020-03-1", "S2-0007-2020-3-1", "S2-0007-2020-03", "", "S2-0007-2020-03-x"}) {
    CHECK_FALSE(parse_item_id(bad));
  }
}
