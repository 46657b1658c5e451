#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/quality.hpp"
#include "forge/raster.hpp"
#include "forge/types.hpp"

namespace forge::clean {

/// QA60 bit 10 (opaque cloud) and bit 11 (cirrus).
inline constexpr std::uint32_t kQa60CloudBits = (1u << 10) | (1u << 11);

struct CleanerConfig {
  Thresholds thresholds;
  /// Fraction of full scale below which a pixel counts as black.
  double black_threshold = 1e-4;
  /// Minimum area (fraction of the image) of a border-touching constant
  /// rectangle before it counts as gray fill.
  double gray_min_area = 0.01;
  double s1_full_scale = 1.0;
  double s2_full_scale = 10'000.0;
  /// Brightness fallback: all of B4/B3/B2 above this fraction of full scale.
  double bright_threshold = 0.9;
  /// Manual review mode: candidates are left Pending for a human.
  bool manual = false;
  unsigned workers = 0;  // 0 = hardware concurrency

  double full_scale(Satellite s) const { return s == Satellite::S1 ? s1_full_scale : s2_full_scale; }
};

/// Pixels that belong to a border-touching constant-valued rectangle of at
/// least `min_area_frac` of the image (all bands equal bit-for-bit).
std::vector<std::uint8_t> gray_fill_mask(const Raster& r, double min_area_frac);

/// A pixel is missing if every band is nodata, or every band is below
/// `black_abs`, or it lies in gray fill.
double missing_fraction(const Raster& r, double black_abs, double gray_min_area);
double missing_fraction(const Raster& r, Satellite sat, const CleanerConfig& cfg);

/// Fraction of QA60 samples with bit 10 or 11 set.
double cloud_fraction(std::span<const float> qa60);

struct CloudEstimate {
  double fraction = 0.0;
  bool low_confidence = false;
};

/// QA60 when present, otherwise the fraction of pixels whose B4, B3 and B2
/// all exceed bright_threshold * full scale (flagged low-confidence).
CloudEstimate estimate_cloud(const Raster& r, const CleanerConfig& cfg);

/// S1 reports always carry cloud_fraction = 0.
QualityReport score_candidate(const Raster& r, Satellite sat, const CleanerConfig& cfg);

/// Minimum score among Pass reports; ties go to the earliest acquisition
/// (then the lower index). `acquired_at` may be empty.
std::optional<std::size_t> select_best(std::span<const QualityReport> reports,
                                       std::span<const std::int64_t> acquired_at = {});

struct CleanReport {
  std::size_t scored = 0;
  std::size_t kept = 0;
  std::size_t discarded = 0;
  std::size_t pending = 0;
  std::size_t unfavorable = 0;
  std::vector<std::string> errors;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// Scores every candidate in the manifest under `root` and records Keep /
/// Discard (or Pending in manual mode). Human decisions are never
/// overridden. Discarded converted images move to a `discarded/` sibling.
CleanReport clean_auto(const std::filesystem::path& root, const CleanerConfig& cfg,
                       const Progress& progress = {});

struct ReviewItem {
  std::string id;
  Satellite satellite = Satellite::S2;
  std::uint32_t scene_id = 0;
  YearMonth month;
  std::uint32_t rank = 0;
  std::string image_path;
  std::optional<QualityReport> report;
  Decision decision = Decision::Pending;
  DecidedBy decided_by = DecidedBy::Auto;
};

/// Throws Error(ManualModeDisabled) when `manual_enabled` is false.
std::vector<ReviewItem> list_pending(const std::filesystem::path& root, bool manual_enabled);

/// Human Keep/Discard. Works on Pending or Auto-decided items; a second
/// human decision throws Error(AlreadyResolved). Keep makes the item the
/// month's selection (any other Keep is demoted to Discard).
ReviewItem resolve_review(const std::filesystem::path& root, const std::string& item_id,
                          Decision decision, bool manual_enabled);

}  // namespace forge::clean
