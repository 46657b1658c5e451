// forge: command line front end for the dataset pipeline.

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/geo.hpp"
#include "forge/http_provider.hpp"
#include "forge/mock_provider.hpp"
#include "forge/pipeline.hpp"
#include "forge/service.hpp"
#include "forge/simd/kernels.hpp"
#include "forge/store.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

using forge::PipelineConfig;
using forge::pipeline::Stage;

// Flag value -> config key. Only flags the user actually passed are applied.
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<std::string> raw;  // --set section.key=value

  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
  void apply(PipelineConfig& cfg) const {
    for (const auto& kv : raw) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw forge::Error(forge::ErrorCode::ConfigError, "--set expects key=value: " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [k, v] : values) cfg.set(k, v);
  }
};

void print_result(const forge::pipeline::JobResult& r) {
  for (const auto& s : r.stages) {
    std::printf("%-8s %s\n", std::string(forge::store::to_string(s.stage)).c_str(),
                s.skipped ? "skipped (already done)" : s.summary.c_str());
  }
  if (!r.ok) {
    std::fprintf(stderr, "stage %s failed: %s\n",
                 r.failed_stage ? std::string(forge::store::to_string(*r.failed_stage)).c_str() : "?",
                 r.error.c_str());
  }
}

forge::pipeline::Hooks cli_hooks(bool quiet) {
  forge::pipeline::Hooks h;
  if (!quiet) {
    h.log = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };
    h.progress = [](Stage s, std::size_t done, std::size_t total) {
      if (total > 0 && (done == total || done % 25 == 0)) {
        std::fprintf(stderr, "  %s %zu/%zu\n", std::string(forge::store::to_string(s)).c_str(), done, total);
      }
    };
  }
  return h;
}

forge::service::Service* g_service = nullptr;
forge::catalog::CatalogServer* g_catalog = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
  if (g_catalog) g_catalog->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: build Sentinel-1/2 time-series datasets"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  bool quiet = false;
  bool print_config = false;
  Overrides ov;
  app.add_option("--config", config_path, "INI settings file")->check(CLI::ExistingFile);
  app.add_option("--set", ov.raw, "Override any setting: section.key=value (repeatable)");
  app.add_flag("-q,--quiet", quiet, "Only print results");
  app.add_flag("--print-config", print_config, "Print the effective settings and exit");

  auto root_flags = [&](CLI::App* sub) {
    ov.bind(sub, "--root", "output.root", "Dataset root directory");
  };

  auto* all = app.add_subcommand("all", "Run every stage, skipping those already done");
  root_flags(all);

  auto* gen = app.add_subcommand("generate", "Sample land points");
  root_flags(gen);
  ov.bind(gen, "--n", "sampler.n_points", "Number of points");
  ov.bind(gen, "--seed", "sampler.seed", "RNG seed");
  ov.bind(gen, "--lat-min", "sampler.lat_min", "Southern bound");
  ov.bind(gen, "--lat-max", "sampler.lat_max", "Northern bound");
  ov.bind(gen, "--lon-min", "sampler.lon_min", "Western bound");
  ov.bind(gen, "--lon-max", "sampler.lon_max", "Eastern bound");
  ov.bind(gen, "--scene-px", "sampler.scene_px", "Scene size in pixels");
  ov.bind(gen, "--gsd", "sampler.gsd_m", "Meters per pixel");
  ov.bind(gen, "--mask", "sampler.mask", "Water mask file");
  std::string gen_out;
  gen->add_option("--out", gen_out, "Also write the points CSV here");

  auto* dl = app.add_subcommand("download", "Fetch candidate rasters");
  ov.bind(dl, "--out,--root", "output.root", "Dataset root directory");
  std::string dl_points;
  dl->add_option("--points", dl_points, "Points CSV (default: the root's points.csv)")->check(CLI::ExistingFile);
  ov.bind(dl, "--from", "download.from", "First month, YYYY-MM");
  ov.bind(dl, "--months", "download.months", "Number of months");
  ov.bind(dl, "--satellites", "download.satellites", "s1,s2");
  ov.bind(dl, "--candidates", "download.candidates", "Candidates per month");
  ov.bind(dl, "--provider", "download.provider", "mock or catalog base URL");
  ov.bind(dl, "--workers", "download.workers", "Parallel workers");

  auto* conv = app.add_subcommand("convert", "Normalize raw rasters into images");
  root_flags(conv);
  ov.bind(conv, "--mode", "convert.mode", "minmax|std|max|tiff");
  ov.bind(conv, "--stats-scope", "convert.stats_scope", "image|band|auto");

  auto* cln = app.add_subcommand("clean", "Score candidates and select one per month");
  root_flags(cln);
  ov.bind(cln, "--missing-max", "clean.missing_max", "Missing-data threshold");
  ov.bind(cln, "--cloud-max", "clean.cloud_max", "Cloud threshold");
  bool manual = false;
  cln->add_flag("--manual", manual, "Leave decisions to manual review");

  auto* ext = app.add_subcommand("extract", "Cut patches and build previews");
  root_flags(ext);
  ov.bind(ext, "--patch", "extract.patch", "Patch size in pixels");
  ov.bind(ext, "--stride", "extract.stride", "Stride in pixels");

  auto* srv = app.add_subcommand("serve", "Serve the HTTP API");
  root_flags(srv);
  ov.bind(srv, "--host", "service.host", "Bind address");
  ov.bind(srv, "--port", "service.port", "Port");
  ov.bind(srv, "--ui", "service.ui_dir", "Static UI directory");
  ov.bind(srv, "--manual", "clean.manual", "Enable the review queue (true|false)");

  auto* mock = app.add_subcommand("mock-catalog", "Serve the synthetic catalog over HTTP");
  std::string mock_host = "127.0.0.1";
  int mock_port = 8090;
  std::uint64_t mock_seed = 0;
  std::string mock_scenario;
  mock->add_option("--host", mock_host, "Bind address");
  mock->add_option("--port", mock_port, "Port");
  mock->add_option("--seed", mock_seed, "Catalog seed");
  mock->add_option("--scenario", mock_scenario, "Scenario JSON")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (mock->parsed()) {
    try {
      auto scenario = mock_scenario.empty() ? forge::catalog::MockScenario{}
                                            : forge::catalog::MockScenario::load(mock_scenario);
      forge::catalog::MockProvider provider(mock_seed, std::move(scenario));
      forge::catalog::CatalogServer server(provider);
      g_catalog = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "mock catalog on http://%s:%d\n", mock_host.c_str(), mock_port);
      server.run(mock_host, mock_port);
      g_catalog = nullptr;
      return kExitOk;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitConfig;
    }
  }

  if (app.get_subcommands().empty() && !print_config) {
    std::cerr << app.help();
    return kExitConfig;
  }

  PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = forge::load_config(config_path);
    ov.apply(cfg);
    if (manual) cfg.clean.manual = true;
    cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
  if (print_config) {
    std::cout << forge::to_ini(cfg);
    return kExitOk;
  }
  if (!quiet) std::fprintf(stderr, "kernels: %s\n", std::string(forge::simd::active().name).c_str());

  const auto hooks = cli_hooks(quiet);
  try {
    if (srv->parsed()) {
      forge::service::Service service(cfg, hooks);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "serving on http://%s:%d/api\n", cfg.service.host.c_str(), cfg.service.port);
      service.run();
      g_service = nullptr;
      return kExitOk;
    }

    forge::pipeline::JobResult result;
    if (all->parsed()) {
      result = forge::pipeline::run_full_auto(cfg, hooks);
    } else if (gen->parsed()) {
      result = forge::pipeline::run_stage(Stage::Generate, cfg, hooks);
      if (result.ok && !gen_out.empty()) {
        forge::geo::save_points(forge::geo::load_points(std::filesystem::path(cfg.root) / "points.csv"), gen_out);
      }
    } else if (dl->parsed()) {
      if (!dl_points.empty()) forge::pipeline::import_points(cfg, dl_points);
      result = forge::pipeline::run_stage(Stage::Download, cfg, hooks);
    } else if (conv->parsed()) {
      result = forge::pipeline::run_stage(Stage::Convert, cfg, hooks);
    } else if (cln->parsed()) {
      result = forge::pipeline::run_stage(Stage::Clean, cfg, hooks);
    } else if (ext->parsed()) {
      result = forge::pipeline::run_stage(Stage::Extract, cfg, hooks);
    }
    print_result(result);
    return result.ok ? kExitOk : kExitStage;
  } catch (const forge::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == forge::ErrorCode::ConfigError ? kExitConfig : kExitStage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStage;
  }
}
