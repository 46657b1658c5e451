#include "doctest.h"
#include "forge/cleaner.hpp"
#include "forge/error.hpp"
#include "forge/io.hpp"
#include "forge/mock_provider.hpp"
#include "forge/service.hpp"
#include "httplib.h"
#include "json.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Running {
  test::TempDir dir;
  std::shared_ptr<catalog::MockProvider> mock = std::make_shared<catalog::MockProvider>(0, catalog::MockScenario{});
  std::unique_ptr<Service> svc;
  std::unique_ptr<httplib::Client> http;

  explicit Running(bool manual = false, std::chrono::milliseconds latency = std::chrono::milliseconds(0)) {
    auto cfg = test::small_config(dir.path() / "ds");
    cfg.service.port = 0;
    cfg.clean.manual = manual;
    mock->set_latency(latency);
    pipeline::Hooks hooks;
    hooks.provider = mock;
    svc = std::make_unique<Service>(cfg, hooks);
    http = std::make_unique<httplib::Client>("127.0.0.1", svc->start());
  }

  json get(const std::string& path, int want = 200) {
    auto res = http->Get(path);
    REQUIRE(res);
    CHECK_MESSAGE(res->status == want, path << " -> " << res->body);
    return json::parse(res->body);
  }
  json send(const std::string& method, const std::string& path, const json& body, int want) {
    auto res = method == "PUT" ? http->Put(path, body.dump(), "application/json")
                               : http->Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK_MESSAGE(res->status == want, path << " -> " << res->body);
    return json::parse(res->body);
  }
  fs::path root() const { return svc->config().root; }
};

void check_error(const json& j, const std::string& code) {
  REQUIRE(j.contains("error"));
  CHECK(j["error"]["code"] == code);
  CHECK(j["error"]["message"].is_string());
}

}  // namespace

TEST_CASE("stage specs") {
  using store::Stage;
  CHECK(parse_stage_spec(R"("all")").empty());
  CHECK(parse_stage_spec(R"("clean")") == std::vector<Stage>{Stage::Clean});
  CHECK(parse_stage_spec(R"(["convert","clean"])") == std::vector<Stage>{Stage::Convert, Stage::Clean});
  for (const char* bad : {R"("upload")", "[]", "3", R"(["clean", 1])", "{"}) {
    CHECK_THROWS_AS(parse_stage_spec(bad), Error);
  }
}

TEST_CASE("job queue runs jobs in order") {
  test::TempDir dir;
  auto mock = std::make_shared<catalog::MockProvider>(0, catalog::MockScenario{});
  mock->set_latency(std::chrono::milliseconds(20));
  pipeline::Hooks hooks;
  hooks.provider = mock;
  JobQueue q(hooks);
  const auto cfg = test::small_config(dir.path());
  const auto a = q.submit({}, cfg);
  const auto b = q.submit({store::Stage::Extract}, cfg);
  CHECK(a == "job-1");
  CHECK(b == "job-2");
  CHECK(q.get(b)->state == JobState::Queued);
  q.wait_idle();
  const auto ja = *q.get(a);
  CHECK(ja.state == JobState::Done);
  CHECK(ja.progress.at(store::Stage::Download).done == ja.progress.at(store::Stage::Download).total);
  CHECK_FALSE(ja.log.empty());
  CHECK(ja.log.size() <= JobQueue::kLogTail);
  CHECK(q.get(b)->state == JobState::Done);
  CHECK(q.list().size() == 2);
  CHECK_FALSE(q.get("job-9"));

  auto bad = cfg;
  bad.download.months = 0;
  CHECK_THROWS_AS(q.submit({}, bad), Error);

  test::TempDir other;
  const auto c = q.submit({store::Stage::Convert}, test::small_config(other.path()));
  q.wait_idle();
  const auto jc = *q.get(c);
  CHECK(jc.state == JobState::Failed);
  CHECK(jc.failed_stage == store::Stage::Convert);
  CHECK(jc.error.find("MissingPrerequisite") != std::string::npos);
  const auto j = json::parse(to_json(jc));
  CHECK(j["state"] == "Failed");
  CHECK(j["failed_stage"] == "convert");
}

TEST_CASE("jobs and results over HTTP") {
  Running s(false, std::chrono::milliseconds(10));
  CHECK(s.get("/api/health")["ok"] == true);
  const auto first = s.send("POST", "/api/jobs", json::object(), 202);
  CHECK(first["job_id"] == "job-1");
  const auto second = s.send("POST", "/api/jobs", {{"stage", "extract"}}, 202);
  CHECK(second["state"] == "Queued");
  s.svc->jobs().wait_idle();

  const auto job = s.get("/api/jobs/job-1");
  CHECK(job["state"] == "Done");
  CHECK(job["stage_status"]["extract"] == "Done");
  CHECK(s.get("/api/jobs").size() == 2);
  check_error(s.get("/api/jobs/job-77", 404), "UnknownItem");
  check_error(s.send("POST", "/api/jobs", {{"stage", "upload"}}, 400), "InvalidArgument");
  check_error(s.send("POST", "/api/jobs", {{"overrides", {{"download", {{"months", 0}}}}}}, 400), "ConfigError");
  check_error(s.send("POST", "/api/jobs", json::array(), 400), "InvalidArgument");

  const auto gj = s.get("/api/points.geojson");
  CHECK(gj["type"] == "FeatureCollection");
  CHECK(gj["features"].size() == 1);

  const auto scenes = s.get("/api/scenes");
  REQUIRE(scenes.size() == 1);
  CHECK(scenes[0]["months_done"] == 2);
  CHECK(scenes[0]["unfavorable_count"] == 0);
  CHECK(scenes[0]["previews"].contains("S1"));

  const auto png = s.http->Get(scenes[0]["previews"]["S2"].get<std::string>());
  REQUIRE(png);
  CHECK(png->status == 200);
  CHECK(png->get_header_value("Content-Type") == "image/png");
  CHECK(png->body.substr(1, 3) == "PNG");
  check_error(s.get("/api/scenes/0/preview.png?satellite=S9", 400), "InvalidArgument");
  check_error(s.get("/api/scenes/12/preview.png", 404), "UnknownItem");

  const auto scene = s.get("/api/scenes/0");
  CHECK(scene["scene_id"] == 0);
  const auto& cand = scene["months"][0]["satellites"]["S2"]["candidates"][0];
  CHECK(cand["item_id"] == store::item_id(Satellite::S2, 0, {2020, 1}, 0));
  check_error(s.get("/api/scenes/5", 404), "UnknownItem");
}

TEST_CASE("review endpoints") {
  Running s(true);
  s.send("POST", "/api/jobs", json::object(), 202);
  s.svc->jobs().wait_idle();

  const auto pending = s.get("/api/review/pending");
  const auto direct = clean::list_pending(s.root(), true);
  REQUIRE(pending.size() == direct.size());
  REQUIRE(pending.size() == 12);
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(pending[i]["item_id"] == direct[i].id);
    CHECK(pending[i]["report"]["score"].get<double>() == direct[i].report->score);
  }

  const auto id = direct[0].id;
  const auto kept = s.send("POST", "/api/review/" + id, {{"decision", "keep"}}, 200);
  CHECK(kept["decision"] == "Keep");
  CHECK(kept["decided_by"] == "Human");
  check_error(s.send("POST", "/api/review/" + id, {{"decision", "discard"}}, 409), "AlreadyResolved");
  check_error(s.send("POST", "/api/review/S2-0042-2020-01-0", {{"decision", "keep"}}, 404), "UnknownItem");
  check_error(s.send("POST", "/api/review/" + direct[1].id, {{"decision", "maybe"}}, 400), "InvalidArgument");
  CHECK(s.get("/api/review/pending").size() == 11);

  s.send("PUT", "/api/config", {{"clean", {{"manual", false}}}}, 200);
  check_error(s.get("/api/review/pending", 409), "ManualModeDisabled");
  check_error(s.send("POST", "/api/review/" + direct[1].id, {{"decision", "keep"}}, 409), "ManualModeDisabled");
}

TEST_CASE("config endpoint") {
  Running s;
  const auto before = s.get("/api/config");
  CHECK(before["sampler"]["n_points"] == "1");
  const auto after = s.send("PUT", "/api/config", {{"sampler", {{"n_points", 3}}}}, 200);
  CHECK(after["sampler"]["n_points"] == "3");
  CHECK(s.svc->config().sampler.n_points == 3);
  check_error(s.send("PUT", "/api/config", {{"sampler", {{"nope", 1}}}}, 400), "ConfigError");
  check_error(s.send("PUT", "/api/config", {{"extract", {{"patch", 99999}}}}, 400), "ConfigError");
  CHECK(s.svc->config().extract.patch_px == 40);
  CHECK(s.get("/api/config") == after);
}

TEST_CASE("file browsing stays inside the dataset") {
  Running s;
  fs::create_directories(s.root() / "sub");
  io::write_file_atomic(s.root() / "sub" / "a.txt", std::string("hello"));
  io::write_file_atomic(s.dir / "secret.txt", std::string("TOPSECRET"));

  const auto listing = s.get("/api/files/");
  REQUIRE(listing.size() == 1);
  CHECK(listing[0]["name"] == "sub");
  CHECK(listing[0]["dir"] == true);
  auto res = s.http->Get("/api/files/sub/a.txt");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "hello");
  check_error(s.get("/api/files/sub/none.txt", 404), "UnknownItem");

  for (const char* evil : {"/api/files/../secret.txt", "/api/files/sub/../../secret.txt", "/api/files/%2e%2e/secret.txt",
                           "/api/files//etc/passwd"}) {
    auto r = s.http->Get(evil);
    REQUIRE(r);
    CHECK_MESSAGE(r->status >= 400, evil);
    CHECK(r->body.find("TOPSECRET") == std::string::npos);
    CHECK(r->body.find("root:") == std::string::npos);
  }
}

TEST_CASE("schemas are published") {
  Running s;
  for (const auto& [name, text] : api_schemas()) {
    const auto j = s.get("/api/schemas/" + name + ".json");
    CHECK(j == json::parse(text));
    CHECK(j.contains("$schema"));
  }
  CHECK(api_schemas().size() == 9);
  check_error(s.get("/api/schemas/nothing.json", 404), "UnknownItem");
}
