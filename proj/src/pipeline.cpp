#include "forge/pipeline.hpp"

#include <algorithm>
#include <mutex>

#include "forge/cleaner.hpp"
#include "forge/converter.hpp"
#include "forge/error.hpp"
#include "forge/geotiff.hpp"
#include "forge/http_provider.hpp"
#include "forge/mock_provider.hpp"
#include "forge/parallel.hpp"
#include "forge/patch.hpp"
#include "forge/png.hpp"

namespace forge::pipeline {

namespace fs = std::filesystem;

namespace {

class Reporter {
 public:
  Reporter(const Hooks& hooks, Stage stage) : hooks_(hooks), stage_(stage) {}
  void operator()(std::size_t done, std::size_t total) const {
    if (!hooks_.progress) return;
    std::lock_guard g(mu_);
    hooks_.progress(stage_, done, total);
  }
  void log(const std::string& line) const {
    if (!hooks_.log) return;
    std::lock_guard g(mu_);
    hooks_.log(line);
  }

 private:
  const Hooks& hooks_;
  Stage stage_;
  mutable std::mutex mu_;
};

void set_status(const fs::path& root, Stage s, store::StageStatus st) {
  store::update_manifest(root, [&](store::DatasetManifest& m) {
    m.stage_status[s] = st;
    if (st == store::StageStatus::Running) {
      bool later = false;
      for (auto t : store::kStages) {
        if (later) m.stage_status[t] = store::StageStatus::NotRun;
        later = later || t == s;
      }
    }
  });
}

std::string stage_generate(const PipelineConfig& cfg, const Reporter& rep) {
  const fs::path root = cfg.root;
  const auto mask = geo::load_mask(cfg.mask_path());
  const auto points = geo::generate_points(cfg.sampler, mask);
  geo::save_points(points, root / std::string(store::kPointsName));
  store::update_manifest(root, [&](store::DatasetManifest& m) {
    std::vector<store::Region> regions;
    for (std::uint32_t i = 0; i < points.size(); ++i) {
      const auto* old = m.find_region(i);
      if (old && old->center.lat == points[i].lat && old->center.lon == points[i].lon) {
        regions.push_back(*old);
      } else {
        regions.push_back({i, points[i], {}});
      }
    }
    m.regions = std::move(regions);
  });
  rep(points.size(), points.size());
  return std::to_string(points.size()) + " points";
}

std::string stage_download(const PipelineConfig& cfg, const Hooks& hooks, const Reporter& rep) {
  const fs::path root = cfg.root;
  const auto points = geo::load_points(root / std::string(store::kPointsName));
  auto dl = cfg.download;
  dl.scene_px = cfg.sampler.scene_size_px;
  dl.gsd_m = cfg.sampler.gsd_m;
  const auto plan = catalog::plan_downloads(points, dl);

  std::shared_ptr<catalog::Provider> provider = hooks.provider;
  if (!provider) provider = make_provider(cfg);
  const auto report = catalog::run_plan(plan, *provider, root, cfg.retry, cfg.provider.workers,
                                        [&](std::size_t d, std::size_t t) { rep(d, t); });

  // Rebuild candidate lists from the files on disk, keeping prior decisions.
  store::update_manifest(root, [&](store::DatasetManifest& m) {
    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
      const auto& t = plan.tasks[i];
      auto* region = m.find_region(t.scene_id);
      if (!region) {
        m.regions.push_back({t.scene_id, points[t.scene_id], {}});
        region = &m.regions.back();
      }
      auto* me = region->find_month(t.month);
      if (!me) {
        region->months.push_back({t.month, {}});
        std::sort(region->months.begin(), region->months.end(),
                  [](const auto& a, const auto& b) { return a.month < b.month; });
        me = region->find_month(t.month);
      }
      auto& sm = me->per_satellite[t.satellite];
      const auto& res = report.results[i];
      if (res.outcome != catalog::TaskOutcome::Ok && res.outcome != catalog::TaskOutcome::Skipped) continue;

      const store::LayoutKey key{t.satellite, t.scene_id, t.month, t.candidate_rank, store::Kind::Raw};
      catalog::ProductDescriptor d;
      if (res.descriptor) {
        d = *res.descriptor;
      } else {
        d = catalog::descriptor_from_json(read_geotiff(store::layout_path(root, key)).metadata());
      }
      auto it = std::find_if(sm.candidates.begin(), sm.candidates.end(),
                             [&](const auto& c) { return c.rank == t.candidate_rank; });
      if (it != sm.candidates.end() && it->product_id == d.product_id) continue;
      store::Candidate c;
      c.rank = t.candidate_rank;
      c.product_id = d.product_id;
      c.acquired_at = d.acquired_at.iso();
      c.raw_path = store::layout_relpath(key);
      if (it != sm.candidates.end()) {
        *it = c;
      } else {
        sm.candidates.push_back(c);
        std::sort(sm.candidates.begin(), sm.candidates.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
      }
    }
  });

  const auto failed = report.count(catalog::TaskOutcome::Failed);
  std::string summary = std::to_string(report.count(catalog::TaskOutcome::Ok)) + " fetched, " +
                        std::to_string(report.count(catalog::TaskOutcome::Skipped)) + " present, " +
                        std::to_string(report.count(catalog::TaskOutcome::Empty)) + " empty, " +
                        std::to_string(failed) + " failed";
  if (failed > 0) {
    for (const auto& r : report.results) {
      if (r.outcome == catalog::TaskOutcome::Failed) {
        rep.log("download failed: " + r.error);
        break;
      }
    }
    throw Error(ErrorCode::StageFailed, summary);
  }
  return summary;
}

std::string stage_convert(const PipelineConfig& cfg, const Reporter& rep) {
  const fs::path root = cfg.root;
  std::size_t converted = 0, present = 0, warned = 0;
  std::vector<std::string> errors;
  store::update_manifest(root, [&](store::DatasetManifest& m) {
    struct Job {
      store::Candidate* cand;
      store::LayoutKey key;
    };
    std::vector<Job> jobs;
    for (auto& r : m.regions) {
      for (auto& me : r.months) {
        for (auto& [sat, sm] : me.per_satellite) {
          for (auto& c : sm.candidates) {
            if (c.image_path && fs::exists(root / fs::path(*c.image_path))) {
              ++present;
              continue;
            }
            jobs.push_back({&c, {sat, r.scene_id, me.month, c.rank, store::Kind::Raw}});
          }
        }
      }
    }
    std::mutex mu;
    std::size_t done = 0;
    parallel_for(jobs.size(), cfg.provider.workers, [&](std::size_t i) {
      auto& job = jobs[i];
      auto key = job.key;
      key.kind = cfg.convert.mode == convert::Mode::RawTiff ? store::Kind::ConvertedTiff : store::Kind::Converted;
      try {
        const Raster raw = read_geotiff(store::layout_path(root, job.key));
        const auto res = convert::convert_product(raw, key.satellite, cfg.convert, store::layout_path(root, key));
        job.cand->image_path = store::layout_relpath(key);
        std::lock_guard g(mu);
        ++converted;
        if (!res.warnings.empty()) {
          ++warned;
          rep.log(store::layout_relpath(key) + ": " + res.warnings.front());
        }
      } catch (const std::exception& e) {
        std::lock_guard g(mu);
        errors.push_back(store::layout_relpath(job.key) + ": " + e.what());
      }
      std::lock_guard g(mu);
      rep(++done, jobs.size());
    });
  });
  std::string summary = std::to_string(converted) + " converted, " + std::to_string(present) + " present, " +
                        std::to_string(warned) + " with warnings";
  if (!errors.empty()) {
    rep.log("convert failed: " + errors.front());
    throw Error(ErrorCode::StageFailed, summary + ", " + std::to_string(errors.size()) + " failed");
  }
  return summary;
}

std::string stage_clean(const PipelineConfig& cfg, const Reporter& rep) {
  const auto report = clean::clean_auto(cfg.root, cfg.clean, [&](std::size_t d, std::size_t t) { rep(d, t); });
  for (const auto& e : report.errors) rep.log("clean: " + e);
  std::string summary = std::to_string(report.kept) + " kept, " + std::to_string(report.discarded) +
                        " discarded, " + std::to_string(report.pending) + " pending, " +
                        std::to_string(report.unfavorable) + " unfavorable";
  if (!report.errors.empty()) throw Error(ErrorCode::StageFailed, summary + ", " + report.errors.front());
  return summary;
}

std::string stage_extract(const PipelineConfig& cfg, const Reporter& rep) {
  const fs::path root = cfg.root;
  const auto m = store::load_manifest(root);
  struct Job {
    const store::Region* region;
    Satellite sat;
  };
  std::vector<Job> jobs;
  for (const auto& r : m.regions) {
    for (auto sat : {Satellite::S1, Satellite::S2}) jobs.push_back({&r, sat});
  }
  const std::uint32_t patch = cfg.extract.patch_px;
  const std::uint32_t stride = cfg.extract.stride();
  std::mutex mu;
  std::size_t done = 0, patches = 0, previews = 0;
  parallel_for(jobs.size(), cfg.provider.workers, [&](std::size_t i) {
    const auto& [region, sat] = jobs[i];
    const fs::path dir = root / store::fs::path(patch::patch_dir_relpath(region->scene_id, sat));
    std::error_code ec;
    fs::remove_all(dir, ec);
    std::vector<patch::SeriesFrame> frames;
    std::size_t written = 0;
    for (const auto& me : region->months) {
      const auto it = me.per_satellite.find(sat);
      if (it == me.per_satellite.end() || !it->second.selected) continue;
      const fs::path src = root / fs::path(*it->second.selected);
      Image8 img;
      if (src.extension() == ".tif") {
        const Raster r = read_geotiff(src);
        const auto grid = patch::PatchGrid::fit(r.width(), r.height(), patch, stride);
        for (const auto& p : patch::extract_patches(r, grid)) {
          write_geotiff(p.image, dir / patch::patch_filename({region->scene_id, me.month, p.row, p.col, ".tif"}));
          ++written;
        }
        img = convert::render(r, sat, {convert::Mode::MinMax, std::nullopt});
      } else {
        img = read_png(src);
        const auto grid = patch::PatchGrid::fit(img.width, img.height, patch, stride);
        for (const auto& p : patch::extract_patches(img, grid)) {
          write_png(p.image, dir / patch::patch_filename(region->scene_id, me.month, p.row, p.col));
          ++written;
        }
      }
      frames.push_back({me.month, std::move(img)});
    }
    const fs::path preview = root / fs::path(patch::preview_relpath(region->scene_id, sat));
    fs::remove(preview, ec);
    if (!frames.empty()) write_png(patch::build_preview(std::move(frames), patch, stride), preview);
    std::lock_guard g(mu);
    patches += written;
    previews += fs::exists(preview);
    rep(++done, jobs.size());
  });
  return std::to_string(patches) + " patches, " + std::to_string(previews) + " previews";
}

void check_prerequisite(Stage stage, const PipelineConfig& cfg) {
  const auto pre = prerequisite(stage);
  if (!pre) return;
  const auto m = store::load_or_empty(cfg.root);
  if (m.status(*pre) != store::StageStatus::Done) {
    throw Error(ErrorCode::MissingPrerequisite, std::string(store::to_string(stage)) + " requires " +
                                                    std::string(store::to_string(*pre)) + " to be done");
  }
}

StageResult execute(Stage stage, const PipelineConfig& cfg, const Hooks& hooks) {
  Reporter rep(hooks, stage);
  rep.log("stage " + std::string(store::to_string(stage)) + " started");
  set_status(cfg.root, stage, store::StageStatus::Running);
  StageResult res{stage, false, {}};
  try {
    switch (stage) {
      case Stage::Generate: res.summary = stage_generate(cfg, rep); break;
      case Stage::Download: res.summary = stage_download(cfg, hooks, rep); break;
      case Stage::Convert: res.summary = stage_convert(cfg, rep); break;
      case Stage::Clean: res.summary = stage_clean(cfg, rep); break;
      case Stage::Extract: res.summary = stage_extract(cfg, rep); break;
    }
  } catch (...) {
    set_status(cfg.root, stage, store::StageStatus::Failed);
    throw;
  }
  set_status(cfg.root, stage, store::StageStatus::Done);
  rep.log("stage " + std::string(store::to_string(stage)) + " done: " + res.summary);
  return res;
}

JobResult guarded(Stage stage, const PipelineConfig& cfg, const Hooks& hooks, JobResult& job) {
  try {
    job.stages.push_back(execute(stage, cfg, hooks));
  } catch (const std::exception& e) {
    job.ok = false;
    job.failed_stage = stage;
    job.error = e.what();
    if (hooks.log) hooks.log("stage " + std::string(store::to_string(stage)) + " failed: " + e.what());
  }
  return job;
}

}  // namespace

std::unique_ptr<catalog::Provider> make_provider(const PipelineConfig& cfg) {
  if (cfg.provider.provider == "mock") {
    auto scenario = cfg.provider.scenario.empty() ? catalog::MockScenario{}
                                                  : catalog::MockScenario::load(cfg.provider.scenario);
    return std::make_unique<catalog::MockProvider>(cfg.provider.mock_seed, std::move(scenario));
  }
  return std::make_unique<catalog::HttpProvider>(cfg.provider.provider, std::chrono::seconds(cfg.provider.timeout_s));
}

void import_points(const PipelineConfig& cfg, const fs::path& csv) {
  const fs::path root = cfg.root;
  const auto points = geo::load_points(csv);
  set_status(root, Stage::Generate, store::StageStatus::Running);
  geo::save_points(points, root / std::string(store::kPointsName));
  store::update_manifest(root, [&](store::DatasetManifest& m) {
    m.regions.clear();
    for (std::uint32_t i = 0; i < points.size(); ++i) m.regions.push_back({i, points[i], {}});
  });
  set_status(root, Stage::Generate, store::StageStatus::Done);
}

std::optional<Stage> prerequisite(Stage s) {
  switch (s) {
    case Stage::Generate: return std::nullopt;
    case Stage::Download: return Stage::Generate;
    case Stage::Convert: return Stage::Download;
    case Stage::Clean: return Stage::Convert;
    case Stage::Extract: return Stage::Clean;
  }
  return std::nullopt;
}

JobResult run_stage(Stage stage, const PipelineConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  check_prerequisite(stage, cfg);
  JobResult job;
  return guarded(stage, cfg, hooks, job);
}

JobResult run_full_auto(const PipelineConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  JobResult job;
  for (auto stage : store::kStages) {
    if (store::load_or_empty(cfg.root).status(stage) == store::StageStatus::Done) {
      job.stages.push_back({stage, true, "already done"});
      continue;
    }
    guarded(stage, cfg, hooks, job);
    if (!job.ok) break;
    if (hooks.stop_after && hooks.stop_after(stage)) break;
  }
  return job;
}

}  // namespace forge::pipeline
