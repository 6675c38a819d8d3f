#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "greennas/ingest/cache.hpp"

namespace greennas {

inline constexpr const char* kArchiveHost = "archive-api.open-meteo.com";
inline constexpr const char* kArchivePath = "/v1/archive";

struct HttpResponse {
  int status = 0;  // 0 = transport failure (no HTTP status)
  std::string body;
  std::optional<std::chrono::seconds> retry_after;
};

// Seam between the archive client and the network, so tests can substitute a
// scripted server.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& host, const std::string& path_and_query) = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

inline std::string archive_query(const CityRecord& city, Date start, Date end) {
  std::string hourly;
  for (const auto& f : kFeatureSchema) {
    if (!hourly.empty()) hourly += ',';
    hourly += f.name;
  }
  char coords[96];
  std::snprintf(coords, sizeof coords, "latitude=%.4f&longitude=%.4f", city.latitude, city.longitude);
  return std::string(kArchivePath) + "?" + coords + "&start_date=" + format_date(start) +
         "&end_date=" + format_date(end) + "&hourly=" + hourly + "&timezone=UTC";
}

// Decodes an archive JSON payload. API nulls become NaN with the missing flag set.
inline HourlySeries parse_archive_response(const std::string& body, const CityRecord& city, Date start,
                                           Date end) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("archive payload is not valid JSON: ") + e.what());
  }
  if (!doc.contains("hourly") || !doc["hourly"].is_object())
    throw DataError("archive payload missing field 'hourly'");
  const auto& hourly = doc["hourly"];
  const std::size_t expected = hours_inclusive(start, end);

  if (!hourly.contains("time") || !hourly["time"].is_array())
    throw DataError("archive payload missing field 'hourly.time'");
  const auto& times = hourly["time"];
  if (times.size() != expected)
    throw DataError("archive payload field 'hourly.time' has " + std::to_string(times.size()) +
                    " entries, expected " + std::to_string(expected));

  HourlySeries s;
  s.city = city;
  s.start_time = midnight_utc(start);
  if (parse_hour(times.front().get<std::string>()) != s.start_time)
    throw DataError("archive payload starts at " + times.front().get<std::string>() + ", expected " +
                    format_hour(s.start_time));
  s.values.resize(static_cast<Eigen::Index>(expected), static_cast<Eigen::Index>(kNumFeatures));
  s.missing = MaskMatrix::Constant(s.values.rows(), s.values.cols(), false);

  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const std::string name(kFeatureSchema[f].name);
    if (!hourly.contains(name) || !hourly[name].is_array())
      throw DataError("archive payload missing field 'hourly." + name + "'");
    const auto& column = hourly[name];
    if (column.size() != expected)
      throw DataError("archive payload field 'hourly." + name + "' is incomplete");
    for (std::size_t i = 0; i < expected; ++i) {
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(f);
      if (column[i].is_null()) {
        s.values(r, c) = std::nan("");
        s.missing(r, c) = true;
      } else if (column[i].is_number()) {
        s.values(r, c) = column[i].get<double>();
      } else {
        throw DataError("archive payload field 'hourly." + name + "' has a non-numeric entry");
      }
    }
  }
  return s;
}

// Client for the Open-Meteo historical archive. When a cache directory is
// configured, every successful fetch is stored there before it is returned.
class OpenMeteoArchive {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit OpenMeteoArchive(HttpTransport& transport, RetryPolicy policy = {},
                            std::optional<fs::path> cache_dir = std::nullopt,
                            Sleeper sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
      : transport_(transport), policy_(policy), cache_dir_(std::move(cache_dir)), sleep_(std::move(sleeper)) {}

  HourlySeries fetch_city_history(const CityRecord& city, Date start, Date end) {
    validate_city(city);
    require(std::chrono::sys_days{start} < std::chrono::sys_days{end},
            "fetch range must satisfy start < end (" + format_date(start) + " .. " + format_date(end) + ")");
    const auto query = archive_query(city, start, end);
    auto backoff = policy_.initial_backoff;
    std::string last_problem;
    for (int attempt = 1; attempt <= policy_.attempts; ++attempt) {
      HttpResponse response;
      try {
        response = transport_.get(kArchiveHost, query);
      } catch (const std::exception& e) {
        response.status = 0;
        response.body = e.what();
      }
      if (response.status == 200) {
        auto series = parse_archive_response(response.body, city, start, end);
        if (cache_dir_) write_cache_file(cache_path(*cache_dir_, city, start, end), series);
        return series;
      }
      std::chrono::milliseconds wait = backoff;
      if (response.status == 429) {
        if (response.retry_after) wait = std::max(wait, std::chrono::milliseconds(*response.retry_after));
        last_problem = "HTTP 429 rate limited";
      } else if (response.status == 0) {
        last_problem = "network failure: " + response.body;
      } else if (response.status >= 500) {
        last_problem = "HTTP " + std::to_string(response.status);
      } else {
        throw DataError("archive request for " + city.name + " rejected with HTTP " +
                        std::to_string(response.status) + ": " + response.body);
      }
      if (attempt == policy_.attempts)
        throw RetriableError("fetch for " + city.name + " failed after " + std::to_string(attempt) +
                                 " attempts (" + last_problem + ")",
                             attempt, wait);
      sleep_(wait);
      backoff *= 2;
    }
    throw RetriableError("fetch for " + city.name + " not attempted", 0, backoff);
  }

 private:
  HttpTransport& transport_;
  RetryPolicy policy_;
  std::optional<fs::path> cache_dir_;
  Sleeper sleep_;
};

// Returns the cached series when a valid file exists for the key; otherwise
// fetches and stores. Corrupt files are removed and refetched.
inline HourlySeries cache_get_or_fetch(OpenMeteoArchive& archive, const CityRecord& city, Date start, Date end,
                                       const fs::path& cache_dir) {
  if (!fs::is_directory(cache_dir)) throw IoError("cache directory does not exist: " + cache_dir.string());
  const auto path = cache_path(cache_dir, city, start, end);
  if (fs::exists(path)) {
    try {
      auto series = read_cache_file(path);
      series.city = city;
      return series;
    } catch (const DataError& e) {
      std::clog << "[greennas] warning: discarding corrupt cache file " << path.string() << ": " << e.what()
                << '\n';
      fs::remove(path);
    }
  }
  auto series = archive.fetch_city_history(city, start, end);
  write_cache_file(path, series);
  return series;
}

}  // namespace greennas
