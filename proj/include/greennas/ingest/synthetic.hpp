#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "greennas/ingest/series.hpp"

namespace greennas {

enum class ClimateProfile { Temperate, Tropical, Arid };

inline std::string to_string(ClimateProfile p) {
  switch (p) {
    case ClimateProfile::Temperate: return "temperate";
    case ClimateProfile::Tropical: return "tropical";
    case ClimateProfile::Arid: return "arid";
  }
  return "unknown";
}

inline ClimateProfile parse_profile(const std::string& s) {
  if (s == "temperate") return ClimateProfile::Temperate;
  if (s == "tropical") return ClimateProfile::Tropical;
  if (s == "arid") return ClimateProfile::Arid;
  throw PreconditionError("unknown climate profile '" + s + "'");
}

namespace detail {

struct ProfileParams {
  double temp_mean, annual_amp, diurnal_amp, temp_sigma;
  double humidity_base, rain_rate, pressure_base, cloud_base, wind_base, radiation_peak;
  double latitude, longitude;
  const char* koppen;
};

inline ProfileParams profile_params(ClimateProfile p) {
  switch (p) {
    case ClimateProfile::Temperate:
      return {12.0, 10.0, 5.0, 0.35, 72.0, 0.10, 1013.0, 55.0, 12.0, 850.0, 47.0, 8.0, "Cfb"};
    case ClimateProfile::Tropical:
      return {27.0, 2.0, 4.0, 0.25, 80.0, 0.18, 1009.0, 65.0, 8.0, 1000.0, 5.0, 100.0, "Af"};
    case ClimateProfile::Arid:
      return {24.0, 8.0, 9.0, 0.30, 30.0, 0.01, 1007.0, 15.0, 14.0, 1050.0, 25.0, 45.0, "BWh"};
  }
  throw PreconditionError("unknown climate profile");
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

// Deterministic synthetic hourly record starting 2019-01-01T00:00Z. Temperature
// is an annual sinusoid plus a diurnal sinusoid plus AR(1) noise; pressure
// tracks the temperature anomaly with opposite sign; radiation is zero
// whenever the sun is below the horizon (hours 18..06 UTC).
inline HourlySeries generate_synthetic_city(std::uint64_t seed, std::size_t n_hours,
                                            ClimateProfile profile) {
  require(n_hours >= 48, "synthetic series needs at least 48 hours");
  using std::numbers::pi;
  const auto p = detail::profile_params(profile);

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(profile)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  HourlySeries s;
  s.city = {"synthetic-" + to_string(profile) + "-" + std::to_string(seed), p.latitude,
            p.longitude, p.koppen, CityRole::Source};
  s.start_time = midnight_utc(Date{std::chrono::year{2019}, std::chrono::January, std::chrono::day{1}});
  s.values.resize(static_cast<Eigen::Index>(n_hours), static_cast<Eigen::Index>(kNumFeatures));
  s.missing = MaskMatrix::Constant(s.values.rows(), s.values.cols(), false);

  double temp_noise = 0.0, pressure_noise = 0.0, humidity_noise = 0.0, cloud_latent = 0.0,
         wind_noise = 0.0;
  double wind_dir = 360.0 * unif(rng);
  const double cloud_offset = std::log(p.cloud_base / (100.0 - p.cloud_base));

  for (std::size_t i = 0; i < n_hours; ++i) {
    const double hour = static_cast<double>(i % 24);
    const double day_of_year = static_cast<double>(i) / 24.0;
    const double annual = std::sin(2.0 * pi * (day_of_year - 110.0) / 365.25);
    const double diurnal = std::sin(2.0 * pi * (hour - 9.0) / 24.0);

    temp_noise = 0.95 * temp_noise + p.temp_sigma * gauss(rng);
    pressure_noise = 0.98 * pressure_noise + 0.25 * gauss(rng);
    humidity_noise = 0.9 * humidity_noise + 1.5 * gauss(rng);
    cloud_latent = 0.97 * cloud_latent + 0.25 * gauss(rng);
    wind_noise = 0.95 * wind_noise + 0.8 * gauss(rng);

    const double temp_anomaly = p.annual_amp * annual + p.diurnal_amp * diurnal + temp_noise;
    const double temperature = p.temp_mean + temp_anomaly;
    const double cloud = 100.0 * detail::logistic(cloud_offset + cloud_latent);
    const double humidity = std::clamp(
        p.humidity_base - 1.8 * p.diurnal_amp * diurnal + 0.2 * (cloud - p.cloud_base) + humidity_noise,
        2.0, 100.0);
    const double pressure = p.pressure_base - 0.45 * temp_anomaly + pressure_noise;

    double precipitation = 0.0;
    if (cloud > 75.0 && unif(rng) < p.rain_rate * (cloud - 75.0) / 25.0)
      precipitation = -1.2 * std::log(1.0 - unif(rng));

    const double wind_speed =
        std::max(0.0, p.wind_base + 3.0 * std::sin(2.0 * pi * (hour - 14.0) / 24.0) + wind_noise);
    wind_dir = std::fmod(wind_dir + 8.0 * gauss(rng) + 360.0, 360.0);

    const double sun = std::sin(2.0 * pi * (hour - 6.0) / 24.0);
    const double radiation =
        sun > 1e-9 ? p.radiation_peak * sun * (1.0 + 0.2 * annual) * (1.0 - 0.7 * cloud / 100.0) : 0.0;

    auto row = s.values.row(static_cast<Eigen::Index>(i));
    row(kTemperature) = temperature;
    row(kHumidity) = humidity;
    row(kPrecipitation) = precipitation;
    row(kPressure) = pressure;
    row(kCloudCover) = cloud;
    row(kWindSpeed) = wind_speed;
    row(kWindDirection) = wind_dir;
    row(kRadiation) = radiation;
  }
  return s;
}

}  // namespace greennas
