#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/geo.hpp"
#include "forge/quality.hpp"
#include "forge/types.hpp"

namespace forge::store {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// On-disk layout
//
//   <root>/Sentinel-1|Sentinel-2/scene_{id:04}/{YYYY-MM}/{raw|img}_{rank}.{tif|png}
//
// RawTiff conversions land at img_{rank}.tif. Discarded converted images are
// moved to a `discarded/` folder next to the month's files.

enum class Kind { Raw, Converted, ConvertedTiff };

struct LayoutKey {
  Satellite satellite = Satellite::S2;
  std::uint32_t scene_id = 0;
  YearMonth month;
  std::uint32_t rank = 0;
  Kind kind = Kind::Raw;

  auto operator<=>(const LayoutKey&) const = default;
};

/// Relative path with '/' separators.
std::string layout_relpath(const LayoutKey& key);
fs::path layout_path(const fs::path& root, const LayoutKey& key);
fs::path layout_path(const fs::path& root, Satellite sat, std::uint32_t scene_id, YearMonth month,
                     std::uint32_t rank, Kind kind);
/// Inverse of layout_relpath; accepts only canonical spellings.
std::optional<LayoutKey> parse_layout(std::string_view relpath);

/// `<dir>/discarded/<name>` for a month-folder file.
std::string discarded_relpath(std::string_view relpath);

inline constexpr std::string_view kManifestName = "manifest.json";
inline constexpr std::string_view kPointsName = "points.csv";
inline constexpr int kManifestVersion = 1;

// ---------------------------------------------------------------------------
// Manifest

enum class Stage { Generate, Download, Convert, Clean, Extract };
inline constexpr std::array<Stage, 5> kStages = {Stage::Generate, Stage::Download, Stage::Convert,
                                                 Stage::Clean, Stage::Extract};
enum class StageStatus { NotRun, Running, Done, Failed };

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view t);
std::string_view to_string(StageStatus s);
std::optional<StageStatus> parse_stage_status(std::string_view t);

struct Candidate {
  std::uint32_t rank = 0;
  std::string product_id;
  std::string acquired_at;  // ISO-8601 UTC
  std::string raw_path;     // relative to root
  std::optional<std::string> image_path;  // converted image, relative to root
  std::optional<QualityReport> report;
  Decision decision = Decision::Pending;
  DecidedBy decided_by = DecidedBy::Auto;

  /// Path a selection refers to: the converted image when present.
  const std::string& best_path() const { return image_path ? *image_path : raw_path; }
  bool operator==(const Candidate&) const = default;
};

struct SatelliteMonth {
  std::vector<Candidate> candidates;
  std::optional<std::string> selected;
  bool unfavorable = false;

  bool operator==(const SatelliteMonth&) const = default;
};

struct MonthEntry {
  YearMonth month;
  std::map<Satellite, SatelliteMonth> per_satellite;

  bool operator==(const MonthEntry&) const = default;
};

struct Region {
  std::uint32_t scene_id = 0;
  geo::GeoPoint center;
  std::vector<MonthEntry> months;

  bool operator==(const Region&) const = default;
  MonthEntry* find_month(YearMonth ym);
};

struct DatasetManifest {
  int version = kManifestVersion;
  std::vector<Region> regions;
  std::map<Stage, StageStatus> stage_status;

  DatasetManifest();
  bool operator==(const DatasetManifest&) const = default;

  StageStatus status(Stage s) const { return stage_status.at(s); }
  Region* find_region(std::uint32_t scene_id);
  const Region* find_region(std::uint32_t scene_id) const;
  std::size_t selected_count() const;
  std::size_t selected_count(Satellite sat) const;
};

std::string to_json(const DatasetManifest& m);
/// Throws Error(CorruptManifest) for bad JSON or structure and
/// Error(SchemaMismatch) for a different version.
DatasetManifest manifest_from_json(std::string_view text);

/// Structural invariants plus existence of every selected file under root.
/// Throws Error(CorruptManifest).
void validate(const DatasetManifest& m, const fs::path& root);

/// Atomic replace of <root>/manifest.json.
void commit_manifest(const fs::path& root, const DatasetManifest& m);
/// Validates invariants; throws Error(Io) when absent.
DatasetManifest load_manifest(const fs::path& root);
bool manifest_exists(const fs::path& root);
/// Empty manifest when none exists yet.
DatasetManifest load_or_empty(const fs::path& root);

/// Single-writer read-modify-commit under a per-root lock. Returns the
/// committed manifest.
DatasetManifest update_manifest(const fs::path& root,
                                const std::function<void(DatasetManifest&)>& mutate);

/// FeatureCollection of Point features (lon, lat), 6-decimal coordinates,
/// properties {scene_id, months_done, unfavorable_count}.
std::string export_points_geojson(const DatasetManifest& m);

/// months_done: months with at least one selected image.
std::size_t months_done(const Region& r);
/// (month, satellite) cells flagged unfavorable.
std::size_t unfavorable_count(const Region& r);

/// Review item id: "{S1|S2}-{scene:04}-{YYYY-MM}-{rank}".
std::string item_id(Satellite sat, std::uint32_t scene_id, YearMonth month, std::uint32_t rank);
struct ItemRef {
  Satellite satellite;
  std::uint32_t scene_id;
  YearMonth month;
  std::uint32_t rank;
};
std::optional<ItemRef> parse_item_id(std::string_view id);

}  // namespace forge::store
