#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/geo.hpp"
#include "forge/raster.hpp"
#include "forge/types.hpp"

namespace forge::catalog {

struct ProductQuery {
  geo::SceneFootprint footprint;
  Satellite satellite = Satellite::S2;
  UtcTime start;  // inclusive
  UtcTime end;    // inclusive
  std::vector<std::string> bands;
  std::uint32_t max_candidates = 3;
  /// Routing hint for providers that key content by scene.
  std::optional<std::uint32_t> scene_id;

  void validate() const;
  /// Month whose middle is the temporal ranking reference.
  YearMonth reference_month() const { return start.year_month(); }
};

struct ProductDescriptor {
  std::string product_id;
  Satellite satellite = Satellite::S2;
  UtcTime acquired_at;
  std::optional<double> cloud_pct_meta;  // S2 only, [0, 100]
  std::vector<std::string> available_bands;

  bool operator==(const ProductDescriptor&) const = default;
};

std::string to_json(const ProductDescriptor& d);
/// Throws Error(MalformedResponse).
ProductDescriptor descriptor_from_json(const std::string& text);

/// Catalog backend contract. Implementations must be safe to call from
/// several threads at once.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string name() const = 0;
  /// Raw catalog search; ranking and truncation happen in query().
  virtual std::vector<ProductDescriptor> search(const ProductQuery& q) = 0;
  /// One plane per requested band, size_px x size_px, georeferenced to the
  /// footprint bbox.
  virtual Raster fetch(const ProductDescriptor& d, std::span<const std::string> bands,
                       const geo::SceneFootprint& footprint) = 0;
};

/// S2: ascending cloud_pct_meta (missing metadata ranks last), then distance
/// to mid-month. S1: distance to mid-month. Remaining ties by product_id.
void rank_candidates(std::vector<ProductDescriptor>& products, Satellite sat, YearMonth month);

/// search + window filter + ranking + truncation to max_candidates.
std::vector<ProductDescriptor> query(Provider& provider, const ProductQuery& q);

/// Checks bands against the descriptor (Error(BandUnavailable)) and the
/// returned raster against the footprint (Error(TruncatedPayload)).
Raster fetch(Provider& provider, const ProductDescriptor& d, std::span<const std::string> bands,
             const geo::SceneFootprint& footprint);

/// North-up transform anchored at the bbox top-left corner.
GeoTransform transform_for(const geo::SceneFootprint& fp);

std::vector<std::string> default_bands(Satellite sat);

struct DownloadConfig {
  YearMonth from{2020, 1};
  std::uint32_t months = 12;
  std::vector<Satellite> satellites{Satellite::S1, Satellite::S2};
  std::uint32_t candidates = 3;
  std::vector<std::string> s1_bands = default_bands(Satellite::S1);
  std::vector<std::string> s2_bands = default_bands(Satellite::S2);
  std::uint32_t scene_px = 1000;
  double gsd_m = 10.0;

  const std::vector<std::string>& bands(Satellite s) const {
    return s == Satellite::S1 ? s1_bands : s2_bands;
  }
};

struct DownloadTask {
  std::uint32_t scene_id = 0;
  Satellite satellite = Satellite::S2;
  std::uint32_t month_slot = 0;
  YearMonth month;
  std::uint32_t candidate_rank = 0;
  ProductQuery query;
};

struct DownloadPlan {
  std::vector<DownloadTask> tasks;
  std::uint32_t months = 0;
};

/// Every (scene, satellite, month, candidate) cell in that nesting order.
/// Throws Error(EmptyDateRange) for zero months.
DownloadPlan plan_downloads(std::span<const geo::GeoPoint> points, const DownloadConfig& cfg);

struct RetryPolicy {
  std::uint32_t max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  /// Max in-flight provider requests.
  std::uint32_t rate_limit = 4;

  void validate() const;
};

enum class TaskOutcome { Ok, Skipped, Empty, Failed };
std::string_view to_string(TaskOutcome o);

struct TaskResult {
  TaskOutcome outcome = TaskOutcome::Failed;
  std::uint32_t attempts = 0;  // fetch attempts made in this run
  std::string error;
  std::optional<ProductDescriptor> descriptor;
};

struct DownloadReport {
  std::vector<TaskResult> results;  // parallel to plan.tasks
  std::size_t count(TaskOutcome o) const;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// Fetches every task whose raw file is absent into the store layout. Never
/// throws for per-task failures; they are recorded in the report.
DownloadReport run_plan(const DownloadPlan& plan, Provider& provider,
                        const std::filesystem::path& root, const RetryPolicy& policy,
                        unsigned workers = 4, const Progress& progress = {});

}  // namespace forge::catalog
