#include "forge/types.hpp"

#include <charconv>
#include <cstdio>

namespace forge {

std::string_view to_string(Satellite s) { return s == Satellite::S1 ? "S1" : "S2"; }

std::string_view folder_name(Satellite s) {
  return s == Satellite::S1 ? "Sentinel-1" : "Sentinel-2";
}

std::optional<Satellite> parse_satellite(std::string_view t) {
  if (t == "S1" || t == "s1" || t == "sentinel-1" || t == "Sentinel-1") return Satellite::S1;
  if (t == "S2" || t == "s2" || t == "sentinel-2" || t == "Sentinel-2") return Satellite::S2;
  return std::nullopt;
}

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(yoe + era * 400 + (m <= 2));
}

}  // namespace

YearMonth YearMonth::plus_months(int n) const {
  int idx = year * 12 + (month - 1) + n;
  return {idx / 12, idx % 12 + 1};
}

int YearMonth::days_in_month() const {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return month == 2 && is_leap(year) ? 29 : kDays[month - 1];
}

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

std::optional<YearMonth> YearMonth::parse(std::string_view t) {
  if (t.size() != 7 || t[4] != '-') return std::nullopt;
  YearMonth ym;
  if (!parse_int(t.substr(0, 4), ym.year) || !parse_int(t.substr(5, 2), ym.month)) {
    return std::nullopt;
  }
  if (ym.month < 1 || ym.month > 12) return std::nullopt;
  return ym;
}

std::int64_t UtcTime::epoch_seconds() const {
  return days_from_civil(year, month, day) * 86400 + seconds_of_day;
}

UtcTime UtcTime::from_epoch_seconds(std::int64_t s) {
  std::int64_t days = s >= 0 ? s / 86400 : (s - 86399) / 86400;
  UtcTime t;
  civil_from_days(days, t.year, t.month, t.day);
  t.seconds_of_day = static_cast<int>(s - days * 86400);
  return t;
}

std::string UtcTime::iso() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", year, month, day,
                seconds_of_day / 3600, (seconds_of_day / 60) % 60, seconds_of_day % 60);
  return buf;
}

std::optional<UtcTime> UtcTime::parse_iso(std::string_view t) {
  // YYYY-MM-DD or YYYY-MM-DDTHH:MM:SS[Z]
  if (t.size() < 10 || t[4] != '-' || t[7] != '-') return std::nullopt;
  UtcTime out;
  if (!parse_int(t.substr(0, 4), out.year) || !parse_int(t.substr(5, 2), out.month) ||
      !parse_int(t.substr(8, 2), out.day)) {
    return std::nullopt;
  }
  if (out.month < 1 || out.month > 12 || out.day < 1 ||
      out.day > YearMonth{out.year, out.month}.days_in_month()) {
    return std::nullopt;
  }
  if (t.size() == 10) return out;
  if (t.size() < 19 || t[10] != 'T' || t[13] != ':' || t[16] != ':') return std::nullopt;
  if (t.size() > 20 || (t.size() == 20 && t[19] != 'Z')) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!parse_int(t.substr(11, 2), hh) || !parse_int(t.substr(14, 2), mm) ||
      !parse_int(t.substr(17, 2), ss) || hh > 23 || mm > 59 || ss > 60) {
    return std::nullopt;
  }
  out.seconds_of_day = hh * 3600 + mm * 60 + ss;
  return out;
}

std::int64_t mid_month_epoch(YearMonth ym) {
  const std::int64_t start = UtcTime{ym.year, ym.month, 1, 0}.epoch_seconds();
  return start + static_cast<std::int64_t>(ym.days_in_month()) * 86400 / 2;
}

}  // namespace forge
