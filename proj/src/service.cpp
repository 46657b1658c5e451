#include "forge/service.hpp"

#include <algorithm>
#include <filesystem>

#include "forge/cleaner.hpp"
#include "forge/error.hpp"
#include "forge/io.hpp"
#include "forge/patch.hpp"
#include "forge/store.hpp"
#include "httplib.h"
#include "json.hpp"

namespace forge::service {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "Queued";
    case JobState::Running: return "Running";
    case JobState::Done: return "Done";
    case JobState::Failed: return "Failed";
  }
  return "?";
}

namespace {

json job_json(const Job& j) {
  json stages = json::array();
  if (j.stages.empty()) stages.push_back("all");
  for (auto s : j.stages) stages.push_back(store::to_string(s));
  json progress = json::object();
  for (const auto& [s, p] : j.progress) progress[std::string(store::to_string(s))] = {{"done", p.done}, {"total", p.total}};
  json status = json::object();
  try {
    for (const auto& [s, st] : store::load_or_empty(j.config.root).stage_status) {
      status[std::string(store::to_string(s))] = store::to_string(st);
    }
  } catch (const std::exception&) {
  }
  return {{"id", j.id},
          {"stages", stages},
          {"state", to_string(j.state)},
          {"progress", progress},
          {"log", json(std::vector<std::string>(j.log.begin(), j.log.end()))},
          {"failed_stage", j.failed_stage ? json(store::to_string(*j.failed_stage)) : json(nullptr)},
          {"error", j.error.empty() ? json(nullptr) : json(j.error)},
          {"stage_status", status}};
}

}  // namespace

std::string to_json(const Job& j) { return job_json(j).dump(); }

JobQueue::JobQueue(pipeline::Hooks base) : base_(std::move(base)), thread_([this] { worker(); }) {}

JobQueue::~JobQueue() { shutdown(); }

void JobQueue::shutdown() {
  {
    std::lock_guard g(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::string JobQueue::submit(std::vector<pipeline::Stage> stages, const PipelineConfig& cfg) {
  cfg.validate();
  std::lock_guard g(mu_);
  Job j;
  j.id = "job-" + std::to_string(next_id_++);
  j.stages = std::move(stages);
  j.config = cfg;
  const auto id = j.id;
  jobs_.emplace(id, std::move(j));
  order_.push_back(id);
  pending_.push_back(id);
  cv_.notify_all();
  return id;
}

std::optional<Job> JobQueue::get(const std::string& id) const {
  std::lock_guard g(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::vector<Job> JobQueue::list() const {
  std::lock_guard g(mu_);
  std::vector<Job> out;
  for (const auto& id : order_) out.push_back(jobs_.at(id));
  return out;
}

void JobQueue::wait_idle() {
  std::unique_lock lk(mu_);
  idle_cv_.wait(lk, [&] { return pending_.empty() && !busy_; });
}

Job* JobQueue::find(const std::string& id) {
  const auto it = jobs_.find(id);
  return it == jobs_.end() ? nullptr : &it->second;
}

void JobQueue::worker() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return stopping_ || !pending_.empty(); });
      if (stopping_) return;
      id = pending_.front();
      pending_.pop_front();
      busy_ = true;
      find(id)->state = JobState::Running;
    }
    run(id);
    {
      std::lock_guard g(mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

void JobQueue::run(const std::string& id) {
  PipelineConfig cfg;
  std::vector<pipeline::Stage> stages;
  {
    std::lock_guard g(mu_);
    cfg = find(id)->config;
    stages = find(id)->stages;
  }
  pipeline::Hooks hooks = base_;
  hooks.progress = [this, id, base = base_.progress](pipeline::Stage s, std::size_t done, std::size_t total) {
    {
      std::lock_guard g(mu_);
      find(id)->progress[s] = {done, total};
    }
    if (base) base(s, done, total);
  };
  hooks.log = [this, id, base = base_.log](const std::string& line) {
    {
      std::lock_guard g(mu_);
      auto& log = find(id)->log;
      log.push_back(line);
      while (log.size() > kLogTail) log.pop_front();
    }
    if (base) base(line);
  };

  pipeline::JobResult result;
  try {
    if (stages.empty()) {
      result = pipeline::run_full_auto(cfg, hooks);
    } else {
      for (auto s : stages) {
        result = pipeline::run_stage(s, cfg, hooks);
        if (!result.ok) break;
      }
    }
  } catch (const Error& e) {
    result.ok = false;
    result.error = e.what();
    if (e.code() == ErrorCode::MissingPrerequisite && !stages.empty()) result.failed_stage = stages.front();
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
  }
  std::lock_guard g(mu_);
  auto* j = find(id);
  j->state = result.ok ? JobState::Done : JobState::Failed;
  j->failed_stage = result.failed_stage;
  j->error = result.error;
}

std::vector<pipeline::Stage> parse_stage_spec(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  std::vector<std::string> names;
  if (j.is_string()) {
    names.push_back(j.get<std::string>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_string()) throw Error(ErrorCode::InvalidArgument, "stage names must be strings");
      names.push_back(v.get<std::string>());
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "stage must be a string or an array of strings");
  }
  std::vector<pipeline::Stage> out;
  for (const auto& n : names) {
    if (n == "all") {
      if (names.size() != 1) throw Error(ErrorCode::InvalidArgument, "'all' cannot be combined with other stages");
      return {};
    }
    const auto s = store::parse_stage(n);
    if (!s) throw Error(ErrorCode::InvalidArgument, "unknown stage '" + n + "'");
    out.push_back(*s);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no stage given");
  return out;
}

namespace {

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownItem: return 404;
    case ErrorCode::AlreadyResolved:
    case ErrorCode::ManualModeDisabled: return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError: return 400;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Every handler goes through here so errors share one JSON shape.
template <class Fn>
httplib::Server::Handler guard(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "InvalidArgument", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

std::string content_type(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".tif") return "image/tiff";
  if (ext == ".json") return "application/json";
  if (ext == ".csv") return "text/csv";
  return "application/octet-stream";
}

// Relative path under root without escaping it; nullopt otherwise.
std::optional<fs::path> safe_join(const fs::path& root, const std::string& rel) {
  const fs::path p = fs::path(rel).lexically_normal();
  if (p.is_absolute()) return std::nullopt;
  for (const auto& part : p) {
    if (part == "..") return std::nullopt;
  }
  return root / p;
}

json review_json(const clean::ReviewItem& it) {
  json report = nullptr;
  if (it.report) {
    report = {{"missing_fraction", it.report->missing_fraction},
              {"cloud_fraction", it.report->cloud_fraction},
              {"score", it.report->score},
              {"verdict", to_string(it.report->verdict)},
              {"cloud_low_confidence", it.report->cloud_low_confidence}};
  }
  return {{"item_id", it.id},
          {"satellite", to_string(it.satellite)},
          {"scene_id", it.scene_id},
          {"month", it.month.str()},
          {"rank", it.rank},
          {"image_path", it.image_path},
          {"image_url", "/api/files/" + it.image_path},
          {"report", report},
          {"decision", to_string(it.decision)},
          {"decided_by", to_string(it.decided_by)}};
}

}  // namespace

Service::Service(PipelineConfig cfg, pipeline::Hooks hooks)
    : cfg_(std::move(cfg)),
      jobs_(std::make_unique<JobQueue>(std::move(hooks))),
      server_(std::make_unique<httplib::Server>()) {
  install();
}

Service::~Service() {
  stop();
  jobs_->shutdown();
}

PipelineConfig Service::config() const {
  std::lock_guard g(cfg_mu_);
  return cfg_;
}

void Service::install() {
  auto& s = *server_;

  s.Get("/api/health", guard([](const httplib::Request&, httplib::Response& res) { send_json(res, {{"ok", true}}); }));

  s.Post("/api/jobs", guard([this](const httplib::Request& req, httplib::Response& res) {
    const json body = req.body.empty() ? json::object() : json::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
    const auto stages = parse_stage_spec(body.value("stage", json("all")).dump());
    PipelineConfig cfg = config();
    if (body.contains("overrides")) apply_json(cfg, body["overrides"].dump());
    const auto id = jobs_->submit(stages, cfg);
    const auto job = jobs_->get(id);
    send_json(res, {{"job_id", id}, {"state", to_string(job->state)}}, 202);
  }));

  s.Get("/api/jobs", guard([this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& j : jobs_->list()) out.push_back(json::parse(to_json(j)));
    send_json(res, out);
  }));

  s.Get(R"(/api/jobs/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
    const auto job = jobs_->get(req.matches[1]);
    if (!job) return send_error(res, 404, "UnknownItem", "no job " + std::string(req.matches[1]));
    res.set_content(to_json(*job), "application/json");
  }));

  s.Get("/api/config", guard([this](const httplib::Request&, httplib::Response& res) {
    res.set_content(to_json(config()), "application/json");
  }));

  s.Put("/api/config", guard([this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard g(cfg_mu_);
    PipelineConfig next = cfg_;
    apply_json(next, req.body);
    next.validate();
    cfg_ = std::move(next);
    res.set_content(to_json(cfg_), "application/json");
  }));

  s.Get("/api/points.geojson", guard([this](const httplib::Request&, httplib::Response& res) {
    res.set_content(store::export_points_geojson(store::load_or_empty(config().root)), "application/geo+json");
  }));

  s.Get("/api/scenes", guard([this](const httplib::Request&, httplib::Response& res) {
    const auto cfg = config();
    const auto m = store::load_or_empty(cfg.root);
    json out = json::array();
    for (const auto& r : m.regions) {
      json previews = json::object();
      for (auto sat : {Satellite::S1, Satellite::S2}) {
        if (fs::exists(fs::path(cfg.root) / patch::preview_relpath(r.scene_id, sat))) {
          previews[std::string(to_string(sat))] = "/api/scenes/" + std::to_string(r.scene_id) +
                                                  "/preview.png?satellite=" + std::string(to_string(sat));
        }
      }
      out.push_back({{"scene_id", r.scene_id},
                     {"lat", r.center.lat},
                     {"lon", r.center.lon},
                     {"months_done", store::months_done(r)},
                     {"unfavorable_count", store::unfavorable_count(r)},
                     {"previews", previews}});
    }
    send_json(res, out);
  }));

  s.Get(R"(/api/scenes/(\d+))", guard([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = static_cast<std::uint32_t>(std::stoul(req.matches[1]));
    const auto m = store::load_or_empty(config().root);
    const auto* r = m.find_region(id);
    if (!r) return send_error(res, 404, "UnknownItem", "no scene " + std::to_string(id));
    store::DatasetManifest one;
    one.regions.push_back(*r);
    json scene = json::parse(store::to_json(one))["regions"][0];
    for (auto& me : scene["months"]) {
      const auto ym = *YearMonth::parse(me["month"].get<std::string>());
      for (auto& [sat, sm] : me["satellites"].items()) {
        for (auto& c : sm["candidates"]) {
          c["item_id"] = store::item_id(*parse_satellite(sat), id, ym, c["rank"].get<std::uint32_t>());
        }
      }
    }
    send_json(res, scene);
  }));

  s.Get(R"(/api/scenes/(\d+)/preview\.png)", guard([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = static_cast<std::uint32_t>(std::stoul(req.matches[1]));
    std::vector<Satellite> sats{Satellite::S2, Satellite::S1};
    if (req.has_param("satellite")) {
      const auto sat = parse_satellite(req.get_param_value("satellite"));
      if (!sat) throw Error(ErrorCode::InvalidArgument, "unknown satellite");
      sats = {*sat};
    }
    for (auto sat : sats) {
      const fs::path p = fs::path(config().root) / patch::preview_relpath(id, sat);
      if (fs::exists(p)) {
        const auto bytes = io::read_file(p);
        res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
        return;
      }
    }
    send_error(res, 404, "UnknownItem", "no preview for scene " + std::to_string(id));
  }));

  s.Get("/api/review/pending", guard([this](const httplib::Request&, httplib::Response& res) {
    const auto cfg = config();
    json out = json::array();
    for (const auto& it : clean::list_pending(cfg.root, cfg.clean.manual)) out.push_back(review_json(it));
    send_json(res, out);
  }));

  s.Post(R"(/api/review/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
    const auto cfg = config();
    const json body = json::parse(req.body);
    const auto text = body.at("decision").get<std::string>();
    std::optional<Decision> d;
    if (text == "keep" || text == "Keep") d = Decision::Keep;
    if (text == "discard" || text == "Discard") d = Decision::Discard;
    if (!d) throw Error(ErrorCode::InvalidArgument, "decision must be keep or discard");
    send_json(res, review_json(clean::resolve_review(cfg.root, req.matches[1], *d, cfg.clean.manual)));
  }));

  s.Get(R"(/api/schemas/([a-z_]+)\.json)", guard([](const httplib::Request& req, httplib::Response& res) {
    const auto& all = api_schemas();
    const auto it = all.find(req.matches[1]);
    if (it == all.end()) return send_error(res, 404, "UnknownItem", "no schema " + std::string(req.matches[1]));
    res.set_content(it->second, "application/schema+json");
  }));

  s.Get(R"(/api/files(/.*)?)", guard([this](const httplib::Request& req, httplib::Response& res) {
    const fs::path root = config().root;
    std::string rel = req.matches[1];
    while (!rel.empty() && rel.front() == '/') rel.erase(0, 1);
    const auto p = safe_join(root, rel);
    if (!p) return send_error(res, 400, "InvalidArgument", "path escapes the dataset root");
    if (fs::is_directory(*p)) {
      json out = json::array();
      std::vector<fs::directory_entry> entries(fs::directory_iterator(*p), fs::directory_iterator{});
      std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.path() < b.path(); });
      for (const auto& e : entries) {
        out.push_back({{"name", e.path().filename().string()},
                       {"dir", e.is_directory()},
                       {"size", e.is_regular_file() ? e.file_size() : 0}});
      }
      return send_json(res, out);
    }
    if (!fs::is_regular_file(*p)) return send_error(res, 404, "UnknownItem", "no file " + rel);
    const auto bytes = io::read_file(*p);
    res.set_content(std::string(bytes.begin(), bytes.end()), content_type(*p));
  }));

  const auto ui = config().service.ui_dir;
  if (!ui.empty()) s.set_mount_point("/", ui);
}

int Service::start() {
  const auto cfg = config();
  const int port = cfg.service.port == 0 ? server_->bind_to_any_port(cfg.service.host)
                                         : (server_->bind_to_port(cfg.service.host, cfg.service.port) ? cfg.service.port : -1);
  if (port < 0) {
    throw Error(ErrorCode::Io, "cannot bind " + cfg.service.host + ":" + std::to_string(cfg.service.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void Service::run() {
  const auto cfg = config();
  if (!server_->listen(cfg.service.host, cfg.service.port)) {
    throw Error(ErrorCode::Io, "cannot listen on " + cfg.service.host + ":" + std::to_string(cfg.service.port));
  }
}

void Service::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace forge::service
