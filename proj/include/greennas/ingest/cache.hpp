#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "greennas/ingest/series.hpp"

namespace greennas {

namespace fs = std::filesystem;

namespace detail {

inline std::string sanitize_for_filename(const std::string& s) {
  std::string out;
  for (unsigned char c : s) out.push_back(std::isalnum(c) || c == '-' ? static_cast<char>(c) : '_');
  return out;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "NA") return std::nan("");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("unparseable number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_view(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline std::string header_value(const std::string& header, const std::string& key) {
  const std::string needle = key + "=";
  auto pos = header.find(needle);
  if (pos == std::string::npos) throw DataError("cache header lacks '" + key + "'");
  pos += needle.size();
  auto end = header.find(';', pos);
  return header.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

inline std::string column_header() {
  std::string line = "time";
  for (const auto& f : kFeatureSchema) {
    line += ',';
    line += f.name;
    line += " [";
    line += f.unit;
    line += ']';
  }
  return line;
}

}  // namespace detail

// One file per (city, range, schema version).
inline fs::path cache_path(const fs::path& cache_dir, const CityRecord& city, Date start, Date end) {
  return cache_dir / (detail::sanitize_for_filename(city.name) + "_" + format_date(start) + "_" +
                      format_date(end) + "_v" + std::to_string(kSchemaVersion) + ".csv");
}

// Writes the series as delimited text through a temporary file followed by a
// rename, so concurrent writers of one key never expose a partial file.
inline void write_cache_file(const fs::path& path, const HourlySeries& s) {
  validate_series(s);
  static std::atomic<unsigned long> counter{0};
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << '.' << counter++;
  const fs::path tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write cache file " + tmp.string());
    out << "# greennas hourly cache; schema_version=" << kSchemaVersion << "; city=" << s.city.name
        << "; latitude=" << detail::format_double(s.city.latitude)
        << "; longitude=" << detail::format_double(s.city.longitude)
        << "; climate_zone=" << s.city.climate_zone
        << "; role=" << (s.city.role == CityRole::Source ? "source" : "target")
        << "; start=" << format_hour(s.start_time) << "; rows=" << s.rows() << '\n';
    out << detail::column_header() << '\n';
    for (std::size_t i = 0; i < s.rows(); ++i) {
      out << format_hour(s.time_at(i));
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(f);
        out << ',' << (s.missing(r, c) ? std::string("NA") : detail::format_double(s.values(r, c)));
      }
      out << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for cache file " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move cache file into place: " + path.string() + ": " + ec.message());
  }
}

// Throws DataError if the file is truncated, has the wrong schema, or any row
// fails to parse.
inline HourlySeries read_cache_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cache file " + path.string());
  std::string header, columns;
  if (!std::getline(in, header) || header.rfind("# greennas hourly cache", 0) != 0)
    throw DataError("cache file has no header: " + path.string());
  if (detail::header_value(header, "schema_version") != std::to_string(kSchemaVersion))
    throw DataError("cache schema version mismatch: " + path.string());
  if (!std::getline(in, columns) || columns != detail::column_header())
    throw DataError("cache column header mismatch: " + path.string());

  HourlySeries s;
  s.city.name = detail::header_value(header, "city");
  s.city.latitude = detail::parse_double(detail::header_value(header, "latitude"));
  s.city.longitude = detail::parse_double(detail::header_value(header, "longitude"));
  s.city.climate_zone = detail::header_value(header, "climate_zone");
  s.city.role = detail::header_value(header, "role") == "target" ? CityRole::Target : CityRole::Source;
  s.start_time = parse_hour(detail::header_value(header, "start"));
  const auto rows = std::stoull(detail::header_value(header, "rows"));

  s.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(kNumFeatures));
  s.missing = MaskMatrix::Constant(s.values.rows(), s.values.cols(), false);
  std::string line;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw DataError("cache file truncated at row " + std::to_string(i));
    auto fields = detail::split_view(line, ',');
    if (fields.size() != kNumFeatures + 1) throw DataError("cache row " + std::to_string(i) + " malformed");
    if (parse_hour(fields[0]) != s.time_at(i))
      throw DataError("cache row " + std::to_string(i) + " breaks hourly contiguity");
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const double v = detail::parse_double(fields[f + 1]);
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(f);
      s.values(r, c) = v;
      s.missing(r, c) = std::isnan(v);
    }
  }
  if (std::getline(in, line) && !line.empty()) throw DataError("trailing data in cache file " + path.string());
  return s;
}

}  // namespace greennas
