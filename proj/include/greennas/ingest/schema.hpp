#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "greennas/error.hpp"

namespace greennas {

inline constexpr std::size_t kNumFeatures = 8;
inline constexpr int kSchemaVersion = 1;

struct FeatureInfo {
  std::string_view name;
  std::string_view unit;
};

// Canonical column order shared by ingestion, training and inference.
inline constexpr std::array<FeatureInfo, kNumFeatures> kFeatureSchema{{
    {"temperature_2m", "°C"},
    {"relative_humidity_2m", "%"},
    {"precipitation", "mm"},
    {"surface_pressure", "hPa"},
    {"cloud_cover", "%"},
    {"wind_speed_10m", "km/h"},
    {"wind_direction_10m", "°"},
    {"shortwave_radiation", "W/m²"},
}};

enum Feature : std::size_t {
  kTemperature = 0,
  kHumidity,
  kPrecipitation,
  kPressure,
  kCloudCover,
  kWindSpeed,
  kWindDirection,
  kRadiation,
};

using Date = std::chrono::year_month_day;
using TimePoint = std::chrono::sys_seconds;

// Parses "YYYY-MM-DD".
inline Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  std::string buf(text);
  char tail = 0;
  if (std::sscanf(buf.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
    throw PreconditionError("invalid date '" + buf + "', expected YYYY-MM-DD");
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw PreconditionError("invalid calendar date '" + buf + "'");
  return date;
}

inline std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

inline TimePoint midnight_utc(Date date) {
  return std::chrono::sys_seconds{std::chrono::sys_days{date}};
}

// Number of hourly rows covering [start 00:00, end 23:00], both days inclusive.
inline std::size_t hours_inclusive(Date start, Date end) {
  auto days = (std::chrono::sys_days{end} - std::chrono::sys_days{start}).count() + 1;
  return days > 0 ? static_cast<std::size_t>(days) * 24 : 0;
}

struct CalendarSlot {
  unsigned month;  // 1..12
  unsigned hour;   // 0..23
};

inline CalendarSlot calendar_slot(TimePoint t) {
  auto day = std::chrono::floor<std::chrono::days>(t);
  std::chrono::year_month_day ymd{day};
  auto hour = std::chrono::duration_cast<std::chrono::hours>(t - day).count();
  return {static_cast<unsigned>(ymd.month()), static_cast<unsigned>(hour)};
}

// "2019-01-01T00:00"
inline std::string format_hour(TimePoint t) {
  auto day = std::chrono::floor<std::chrono::days>(t);
  auto hour = std::chrono::duration_cast<std::chrono::hours>(t - day).count();
  char buf[8];
  std::snprintf(buf, sizeof buf, "T%02d:00", static_cast<int>(hour));
  return format_date(std::chrono::year_month_day{day}) + buf;
}

inline TimePoint parse_hour(std::string_view text) {
  if (text.size() < 16 || text[10] != 'T')
    throw DataError("invalid timestamp '" + std::string(text) + "'");
  Date date = parse_date(text.substr(0, 10));
  int hour = 0, minute = 0;
  std::string rest(text.substr(11));
  if (std::sscanf(rest.c_str(), "%d:%d", &hour, &minute) != 2 || minute != 0 || hour < 0 ||
      hour > 23)
    throw DataError("timestamp not aligned to a whole hour: '" + std::string(text) + "'");
  return midnight_utc(date) + std::chrono::hours{hour};
}

}  // namespace greennas
