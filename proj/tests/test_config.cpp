#include <cstdlib>

#include "doctest.h"
#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/io.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace forge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

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

TEST_CASE("defaults") {
  const PipelineConfig cfg;
  CHECK(cfg.sampler.n_points == 10);
  CHECK(cfg.download.months == 12);
  CHECK(cfg.download.candidates == 3);
  CHECK(cfg.clean.thresholds.missing_max == 0.05);
  CHECK(cfg.clean.thresholds.cloud_max == 0.30);
  CHECK(cfg.extract.patch_px == 250);
  CHECK(cfg.extract.stride() == 250);
  CHECK(cfg.convert.mode == convert::Mode::MinMax);
  CHECK(cfg.provider.provider == "mock");
  CHECK(cfg.root == "dataset");
  cfg.validate();
}

TEST_CASE("INI parsing") {
  const auto cfg = parse_config(R"(
# comment
[sampler]
n_points = 25
seed = 99
lat_min = -10.5
mask = /tmp/mask.wmsk

[download]
from = 2021-04
months = 6
satellites = S2
s2_bands = B4,B3,B2,B8,QA60
provider = http://localhost:8090/
backoff_ms = 20

; another comment
[convert]
mode = std
stats_scope = image

[clean]
cloud_max = 0.2
manual = true

[extract]
patch = 200
stride = 100

[output]
root = /data/out
)");
  CHECK(cfg.sampler.n_points == 25);
  CHECK(cfg.sampler.seed == 99);
  CHECK(cfg.sampler.lat_min == -10.5);
  CHECK(cfg.mask == "/tmp/mask.wmsk");
  CHECK(cfg.mask_path() == "/tmp/mask.wmsk");
  CHECK(cfg.download.from == YearMonth{2021, 4});
  CHECK(cfg.download.months == 6);
  CHECK(cfg.download.satellites == std::vector<Satellite>{Satellite::S2});
  CHECK(cfg.download.s2_bands == std::vector<std::string>{"B4", "B3", "B2", "B8", "QA60"});
  CHECK(cfg.provider.provider == "http://localhost:8090/");
  CHECK(cfg.retry.initial_backoff == std::chrono::milliseconds(20));
  CHECK(cfg.convert.mode == convert::Mode::Standardize);
  CHECK(cfg.convert.scope == convert::StatsScope::Image);
  CHECK(cfg.clean.thresholds.cloud_max == 0.2);
  CHECK(cfg.clean.manual);
  CHECK(cfg.extract.stride() == 100);
  CHECK(cfg.root == "/data/out");
  CHECK(cfg.sampler.lat_max == 84.0);
  cfg.validate();
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK(code_of([] { parse_config("[sampler]\nn_pionts = 3\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[sampling]\nn_points = 3\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("n_points = 3\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[sampler]\nn_points = many\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[sampler]\nn_points = -3\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[convert]\nmode = gamma\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[clean]\nmanual = maybe\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[download]\nfrom = 2020-13\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[download]\nsatellites = S1,S3\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[sampler\nseed = 1\n"); }) == ErrorCode::ConfigError);
  PipelineConfig c;
  CHECK(code_of([&] { c.set("sampler.nope", "1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { c.get("nope"); }) == ErrorCode::ConfigError);
}

TEST_CASE("validation") {
  auto invalid = [](const std::function<void(PipelineConfig&)>& edit) {
    PipelineConfig c;
    edit(c);
    return code_of([&] { c.validate(); }) == ErrorCode::ConfigError;
  };
  CHECK(invalid([](auto& c) { c.sampler.lat_min = 50, c.sampler.lat_max = 40; }));
  CHECK(invalid([](auto& c) { c.sampler.lat_max = 95; }));
  CHECK(invalid([](auto& c) { c.download.months = 0; }));
  CHECK(invalid([](auto& c) { c.download.candidates = 0; }));
  CHECK(invalid([](auto& c) { c.download.satellites.clear(); }));
  CHECK(invalid([](auto& c) { c.download.s2_bands = {"B4", "B3"}; }));
  CHECK(invalid([](auto& c) { c.provider.provider = "ftp://x"; }));
  CHECK(invalid([](auto& c) { c.clean.thresholds.cloud_max = 1.5; }));
  CHECK(invalid([](auto& c) { c.clean.thresholds.missing_max = -0.1; }));
  CHECK(invalid([](auto& c) { c.extract.patch_px = 0; }));
  CHECK(invalid([](auto& c) { c.extract.patch_px = 1200; }));
  CHECK(invalid([](auto& c) { c.retry.max_attempts = 0; }));
  CHECK(invalid([](auto& c) { c.service.port = 70000; }));
  CHECK(invalid([](auto& c) { c.root.clear(); }));
}

TEST_CASE("INI round trip") {
  PipelineConfig c;
  c.sampler.lat_min = -12.345678901234;
  c.sampler.seed = 18446744073709551615ull;
  c.download.satellites = {Satellite::S1};
  c.clean.black_threshold = 3e-5;
  c.convert.mode = convert::Mode::RawTiff;
  c.convert.scope = convert::StatsScope::Band;
  c.service.ui_dir = "/srv/ui";
  const auto again = parse_config(to_ini(c));
  for (const auto& k : PipelineConfig::keys()) CHECK_MESSAGE(again.get(k) == c.get(k), k);
  CHECK(again.sampler.lat_min == c.sampler.lat_min);
}

TEST_CASE("precedence: flags over file over defaults") {
  test::TempDir dir;
  io::write_file_atomic(dir / "forge.ini", std::string("[sampler]\nn_points = 4\nseed = 5\n[extract]\npatch = 100\n"));
  auto cfg = load_config(dir / "forge.ini");
  CHECK(cfg.sampler.n_points == 4);
  CHECK(cfg.sampler.seed == 5);
  CHECK(cfg.download.months == 12);
  cfg.set("sampler.seed", "6");
  CHECK(cfg.sampler.seed == 6);
  CHECK(cfg.sampler.n_points == 4);
  CHECK(cfg.extract.patch_px == 100);
  CHECK(code_of([&] { load_config(dir / "missing.ini"); }) == ErrorCode::ConfigError);

  PipelineConfig base;
  base.root = "/kept";
  CHECK(parse_config("[sampler]\nseed = 1\n", base).root == "/kept");
}

TEST_CASE("JSON form") {
  PipelineConfig c;
  const auto j = json::parse(to_json(c));
  CHECK(j["sampler"]["n_points"] == "10");
  CHECK(j["clean"]["cloud_max"] == "0.3");
  CHECK(j["output"]["root"] == "dataset");
  std::size_t n = 0;
  for (const auto& [sec, body] : j.items()) n += body.size();
  CHECK(n == PipelineConfig::keys().size());

  apply_json(c, R"({"sampler": {"n_points": 3, "lat_min": -1.5}, "clean": {"manual": true, "cloud_max": "0.25"}})");
  CHECK(c.sampler.n_points == 3);
  CHECK(c.sampler.lat_min == -1.5);
  CHECK(c.clean.manual);
  CHECK(c.clean.thresholds.cloud_max == 0.25);
  CHECK(c.download.months == 12);

  CHECK(code_of([&] { apply_json(c, "{bad"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { apply_json(c, "[1]"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { apply_json(c, R"({"sampler": {"bogus": 1}})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { apply_json(c, R"({"sampler": 4})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { apply_json(c, R"({"sampler": {"n_points": [1]}})"); }) == ErrorCode::ConfigError);
}

TEST_CASE("bundled mask location") {
  const auto p = default_mask_path();
  CHECK(p.filename() == "water_mask_025deg.wmsk");
  CHECK(fs::exists(p));
  ::setenv("FORGE_DATA_DIR", "/elsewhere", 1);
  CHECK(default_mask_path() == fs::path("/elsewhere/water_mask_025deg.wmsk"));
  ::unsetenv("FORGE_DATA_DIR");
  CHECK(PipelineConfig{}.mask_path() == p);
}
