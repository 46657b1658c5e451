#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forge/catalog.hpp"
#include "forge/config.hpp"
#include "forge/store.hpp"

namespace forge::pipeline {

using store::Stage;

struct Hooks {
  /// Per-task counters: (stage, done, total). May be called from worker threads.
  std::function<void(Stage, std::size_t, std::size_t)> progress;
  std::function<void(const std::string&)> log;
  /// Returning true after a stage completes halts run_full_auto there.
  std::function<bool(Stage)> stop_after;
  /// Replaces the provider named in the config.
  std::shared_ptr<catalog::Provider> provider;
};

struct StageResult {
  Stage stage = Stage::Generate;
  bool skipped = false;  // already Done on entry
  std::string summary;
};

struct JobResult {
  bool ok = true;
  std::optional<Stage> failed_stage;
  std::string error;
  std::vector<StageResult> stages;
};

std::unique_ptr<catalog::Provider> make_provider(const PipelineConfig& cfg);

/// Stage whose Done status the given stage requires, if any.
std::optional<Stage> prerequisite(Stage s);

/// Runs one stage. Throws Error(ConfigError) for an invalid config and
/// Error(MissingPrerequisite) when the preceding stage is not Done; stage
/// failures are reported in the result and recorded as Failed. Re-running
/// a stage resets every later stage to NotRun.
JobResult run_stage(Stage stage, const PipelineConfig& cfg, const Hooks& hooks = {});

/// Installs an externally produced point list as the generate stage output
/// and marks that stage Done.
void import_points(const PipelineConfig& cfg, const std::filesystem::path& csv);

/// generate -> download -> convert -> clean -> extract, skipping stages
/// already Done. Validates the config before anything runs.
JobResult run_full_auto(const PipelineConfig& cfg, const Hooks& hooks = {});

}  // namespace forge::pipeline
