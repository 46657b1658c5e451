#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace forge {

enum class Satellite : std::uint8_t { S1, S2 };

/// "S1" / "S2".
std::string_view to_string(Satellite s);
/// Accepts "S1", "s1", "sentinel-1", "Sentinel-1" and the S2 equivalents.
std::optional<Satellite> parse_satellite(std::string_view text);
/// Layout folder name: "Sentinel-1" / "Sentinel-2".
std::string_view folder_name(Satellite s);

/// A calendar month, the unit of the download time series.
struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12

  auto operator<=>(const YearMonth&) const = default;

  YearMonth plus_months(int n) const;
  int days_in_month() const;
  /// "YYYY-MM"
  std::string str() const;
  static std::optional<YearMonth> parse(std::string_view text);
};

/// Calendar date, used for acquisition timestamps (UTC, day resolution is
/// all the ranking rule needs; the time of day rides along as seconds).
struct UtcTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int seconds_of_day = 0;

  auto operator<=>(const UtcTime&) const = default;

  /// Seconds since 1970-01-01T00:00:00Z.
  std::int64_t epoch_seconds() const;
  static UtcTime from_epoch_seconds(std::int64_t s);
  /// ISO-8601 "YYYY-MM-DDTHH:MM:SSZ".
  std::string iso() const;
  static std::optional<UtcTime> parse_iso(std::string_view text);

  YearMonth year_month() const { return {year, month}; }
};

/// Midpoint of a calendar month (the ranking reference).
std::int64_t mid_month_epoch(YearMonth ym);

}  // namespace forge
