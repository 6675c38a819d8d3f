#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include <unistd.h>

#include "greennas/ingest/open_meteo.hpp"
#include "greennas/ingest/synthetic.hpp"

using namespace greennas;
namespace fs = std::filesystem;

namespace {

const CityRecord kSantiago{"Santiago", -33.45, -70.67, "Csb", CityRole::Target};

std::string archive_payload(Date start, Date end, const std::string& drop_field = {}, bool with_null = false) {
  const auto n = hours_inclusive(start, end);
  nlohmann::json hourly;
  std::vector<std::string> times;
  for (std::size_t i = 0; i < n; ++i) times.push_back(format_hour(midnight_utc(start) + std::chrono::hours(i)));
  hourly["time"] = times;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const std::string name(kFeatureSchema[f].name);
    if (name == drop_field) continue;
    nlohmann::json col = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
      if (with_null && f == 0 && i == 3)
        col.push_back(nullptr);
      else
        col.push_back(static_cast<double>(f) * 100.0 + static_cast<double>(i) * 0.25);
    }
    hourly[name] = col;
  }
  return nlohmann::json{{"latitude", -33.45}, {"hourly", hourly}}.dump();
}

// Replays a fixed list of responses and records every request.
class ScriptedTransport : public HttpTransport {
 public:
  std::vector<HttpResponse> script;
  std::vector<std::string> requests;

  HttpResponse get(const std::string& host, const std::string& path) override {
    requests.push_back(host + path);
    if (requests.size() > script.size()) return script.back();
    return script[requests.size() - 1];
  }
};

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("greennas_ingest_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::vector<std::chrono::milliseconds> sleeps;
OpenMeteoArchive make_archive(HttpTransport& t, std::optional<fs::path> dir = std::nullopt) {
  sleeps.clear();
  return OpenMeteoArchive(t, {}, std::move(dir), [](std::chrono::milliseconds d) { sleeps.push_back(d); });
}

const Date d0 = parse_date("2019-01-01"), d1 = parse_date("2019-01-02"), d2 = parse_date("2019-01-03");

}  // namespace

TEST(Calendar, HourCounts) {
  EXPECT_EQ(hours_inclusive(d0, d1), 48u);
  // 2019..2024 holds two leap years: 6*365 + 2 = 2192 days.
  EXPECT_EQ(hours_inclusive(d0, parse_date("2024-12-31")), 52608u);
  EXPECT_THROW(parse_date("2019-02-30"), PreconditionError);
  const auto t = parse_hour("2020-07-04T13:00");
  EXPECT_EQ(format_hour(t), "2020-07-04T13:00");
  EXPECT_EQ(calendar_slot(t).month, 7u);
  EXPECT_EQ(calendar_slot(t).hour, 13u);
}

TEST(Cities, DefaultListAndConfigRoundTrip) {
  const auto cities = default_cities();
  EXPECT_EQ(cities_with_role(cities, CityRole::Source).size(), 18u);
  EXPECT_EQ(cities_with_role(cities, CityRole::Target).size(), 6u);
  EXPECT_NO_THROW(validate_city_list(cities));
  TempDir dir;
  const auto path = (dir.path / "cities.json").string();
  save_cities(path, cities);
  EXPECT_EQ(load_cities(path), cities);

  auto bad = cities;
  bad[0].latitude = 95.0;
  EXPECT_THROW(validate_city_list(bad), DataError);
  EXPECT_THROW(validate_city_list(cities_with_role(cities, CityRole::Source)), DataError);
}

TEST(Fetch, ParsesPayloadAndQuery) {
  ScriptedTransport t;
  t.script = {{200, archive_payload(d0, d1, {}, true), {}}};
  auto archive = make_archive(t);
  const auto s = archive.fetch_city_history(kSantiago, d0, d1);
  EXPECT_EQ(s.rows(), 48u);
  EXPECT_EQ(s.values.cols(), 8);
  EXPECT_TRUE(s.missing(3, 0));
  EXPECT_TRUE(std::isnan(s.values(3, 0)));
  EXPECT_EQ(s.missing.count(), 1);
  EXPECT_EQ(s.values(5, 2), 201.25);
  ASSERT_EQ(t.requests.size(), 1u);
  const auto& q = t.requests[0];
  EXPECT_NE(q.find("archive-api.open-meteo.com/v1/archive?"), std::string::npos);
  EXPECT_NE(q.find("start_date=2019-01-01&end_date=2019-01-02"), std::string::npos);
  EXPECT_NE(q.find("hourly=temperature_2m,relative_humidity_2m,precipitation,surface_pressure,cloud_cover,"
                   "wind_speed_10m,wind_direction_10m,shortwave_radiation"),
            std::string::npos);
  EXPECT_NE(q.find("timezone=UTC"), std::string::npos);
}

TEST(Fetch, RejectsEmptyRange) {
  ScriptedTransport t;
  t.script = {{200, "{}", {}}};
  auto archive = make_archive(t);
  EXPECT_THROW(archive.fetch_city_history(kSantiago, d1, d1), PreconditionError);
  EXPECT_THROW(archive.fetch_city_history(kSantiago, d1, d0), PreconditionError);
  EXPECT_TRUE(t.requests.empty());
}

TEST(Fetch, MissingFieldIsNamed) {
  ScriptedTransport t;
  t.script = {{200, archive_payload(d0, d1, "surface_pressure"), {}}};
  auto archive = make_archive(t);
  try {
    archive.fetch_city_history(kSantiago, d0, d1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("hourly.surface_pressure"), std::string::npos);
  }
}

TEST(Fetch, RetriesWithExponentialBackoff) {
  ScriptedTransport t;
  t.script = {{0, "connection reset", {}}, {503, "", {}}, {200, archive_payload(d0, d1), {}}};
  auto archive = make_archive(t);
  EXPECT_EQ(archive.fetch_city_history(kSantiago, d0, d1).rows(), 48u);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(sleeps[0], std::chrono::milliseconds(1000));
  EXPECT_EQ(sleeps[1], std::chrono::milliseconds(2000));
}

TEST(Fetch, GivesUpAfterThreeAttempts) {
  ScriptedTransport t;
  t.script = {{0, "unreachable", {}}};
  auto archive = make_archive(t);
  try {
    archive.fetch_city_history(kSantiago, d0, d1);
    FAIL();
  } catch (const RetriableError& e) {
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(t.requests.size(), 3u);
}

TEST(Fetch, RateLimitHonorsRetryAfter) {
  ScriptedTransport t;
  t.script = {{429, "", std::chrono::seconds(7)}, {200, archive_payload(d0, d1), {}}};
  auto archive = make_archive(t);
  archive.fetch_city_history(kSantiago, d0, d1);
  ASSERT_EQ(sleeps.size(), 1u);
  EXPECT_EQ(sleeps[0], std::chrono::milliseconds(7000));

  ScriptedTransport always;
  always.script = {{429, "", std::chrono::seconds(30)}};
  auto limited = make_archive(always);
  try {
    limited.fetch_city_history(kSantiago, d0, d1);
    FAIL();
  } catch (const RetriableError& e) {
    EXPECT_EQ(e.backoff(), std::chrono::milliseconds(30000));
  }
}

TEST(Fetch, ClientErrorIsNotRetried) {
  ScriptedTransport t;
  t.script = {{400, "bad request", {}}};
  auto archive = make_archive(t);
  EXPECT_THROW(archive.fetch_city_history(kSantiago, d0, d1), DataError);
  EXPECT_EQ(t.requests.size(), 1u);
}

TEST(Cache, SecondCallHitsCache) {
  TempDir dir;
  ScriptedTransport t;
  t.script = {{200, archive_payload(d0, d1, {}, true), {}}, {200, archive_payload(d0, d2), {}}};
  auto archive = make_archive(t);
  const auto a = cache_get_or_fetch(archive, kSantiago, d0, d1, dir.path);
  const auto b = cache_get_or_fetch(archive, kSantiago, d0, d1, dir.path);
  EXPECT_EQ(t.requests.size(), 1u);
  EXPECT_EQ(a.start_time, b.start_time);
  EXPECT_TRUE((a.missing == b.missing).all());
  for (Eigen::Index k = 0; k < a.values.size(); ++k) {
    if (a.missing.data()[k]) continue;
    EXPECT_EQ(a.values.data()[k], b.values.data()[k]);
  }
  cache_get_or_fetch(archive, kSantiago, d0, d2, dir.path);
  EXPECT_EQ(t.requests.size(), 2u);
  EXPECT_NE(cache_path(dir.path, kSantiago, d0, d1), cache_path(dir.path, kSantiago, d0, d2));
}

TEST(Cache, TruncatedFileIsRefetched) {
  TempDir dir;
  ScriptedTransport t;
  t.script = {{200, archive_payload(d0, d1), {}}};
  auto archive = make_archive(t);
  cache_get_or_fetch(archive, kSantiago, d0, d1, dir.path);
  const auto path = cache_path(dir.path, kSantiago, d0, d1);
  fs::resize_file(path, fs::file_size(path) / 2);
  EXPECT_THROW(read_cache_file(path), DataError);
  const auto s = cache_get_or_fetch(archive, kSantiago, d0, d1, dir.path);
  EXPECT_EQ(s.rows(), 48u);
  EXPECT_EQ(t.requests.size(), 2u);
  EXPECT_NO_THROW(read_cache_file(path));
}

TEST(Cache, MissingDirectoryIsAnError) {
  ScriptedTransport t;
  t.script = {{200, archive_payload(d0, d1), {}}};
  auto archive = make_archive(t);
  EXPECT_THROW(cache_get_or_fetch(archive, kSantiago, d0, d1, "/nonexistent/greennas"), IoError);
}

TEST(Cache, RoundTripIsBitExact) {
  TempDir dir;
  auto s = generate_synthetic_city(3, 200, ClimateProfile::Tropical);
  s.missing(10, 4) = true;
  s.values(10, 4) = std::nan("");
  const auto path = dir.path / "x.csv";
  write_cache_file(path, s);
  const auto back = read_cache_file(path);
  EXPECT_EQ(back.city, s.city);
  EXPECT_EQ(back.start_time, s.start_time);
  EXPECT_TRUE((back.missing == s.missing).all());
  for (Eigen::Index k = 0; k < s.values.size(); ++k)
    if (!s.missing.data()[k]) EXPECT_EQ(back.values.data()[k], s.values.data()[k]);
}

TEST(Synthetic, Deterministic) {
  const auto a = generate_synthetic_city(7, 1000, ClimateProfile::Temperate);
  const auto b = generate_synthetic_city(7, 1000, ClimateProfile::Temperate);
  const auto c = generate_synthetic_city(8, 1000, ClimateProfile::Temperate);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_FALSE(a.missing.any());
  EXPECT_THROW(generate_synthetic_city(1, 47, ClimateProfile::Arid), PreconditionError);
}

TEST(Synthetic, PhysicalConstraints) {
  for (auto profile : {ClimateProfile::Temperate, ClimateProfile::Tropical, ClimateProfile::Arid}) {
    const auto s = generate_synthetic_city(11, 8760, profile);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      const auto r = s.values.row(static_cast<Eigen::Index>(i));
      const auto hour = calendar_slot(s.time_at(i)).hour;
      if (hour <= 6 || hour >= 18) EXPECT_EQ(r(kRadiation), 0.0);
      EXPECT_GE(r(kRadiation), 0.0);
      EXPECT_GE(r(kHumidity), 0.0);
      EXPECT_LE(r(kHumidity), 100.0);
      EXPECT_GE(r(kCloudCover), 0.0);
      EXPECT_LE(r(kCloudCover), 100.0);
      EXPECT_GE(r(kPrecipitation), 0.0);
      EXPECT_GE(r(kWindSpeed), 0.0);
      EXPECT_GE(r(kWindDirection), 0.0);
      EXPECT_LT(r(kWindDirection), 360.0);
      EXPECT_GT(r(kPressure), 850.0);
      EXPECT_LT(r(kPressure), 1085.0);
      EXPECT_GT(r(kTemperature), -60.0);
      EXPECT_LT(r(kTemperature), 60.0);
    }
  }
}

TEST(Synthetic, TemperatureStatistics) {
  const auto s = generate_synthetic_city(5, 8760, ClimateProfile::Temperate);
  const Eigen::VectorXd temp = s.values.col(kTemperature);
  const Eigen::VectorXd pres = s.values.col(kPressure);
  const double mean = temp.mean();
  const Eigen::VectorXd c = temp.array() - mean;
  const auto n = c.size();
  const double lag24 = c.head(n - 24).dot(c.tail(n - 24)) / c.squaredNorm();
  EXPECT_GT(lag24, 0.5);
  const Eigen::VectorXd cp = pres.array() - pres.mean();
  EXPECT_LT(c.dot(cp), 0.0);
}

TEST(Series, ImputesShortGapsOnly) {
  auto s = generate_synthetic_city(1, 100, ClimateProfile::Arid);
  const double before = s.values(9, 0), after = s.values(13, 0);
  for (int i = 10; i < 13; ++i) {
    s.values(i, 0) = std::nan("");
    s.missing(i, 0) = true;
  }
  for (int i = 40; i < 47; ++i) {
    s.values(i, 1) = std::nan("");
    s.missing(i, 1) = true;
  }
  const auto out = impute_short_gaps(s);
  EXPECT_NEAR(out.values(11, 0), 0.5 * (before + after), 1e-12);
  EXPECT_FALSE(out.missing(11, 0));
  EXPECT_TRUE(out.missing(43, 1));
  EXPECT_TRUE(std::isnan(out.values(43, 1)));
}
