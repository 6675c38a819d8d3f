#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "greennas/error.hpp"

namespace greennas {

enum class CityRole { Source, Target };

struct CityRecord {
  std::string name;
  double latitude = 0.0;
  double longitude = 0.0;
  std::string climate_zone;  // Köppen code, e.g. "Cfa"
  CityRole role = CityRole::Source;

  bool operator==(const CityRecord&) const = default;
};

inline void validate_city(const CityRecord& city) {
  if (city.name.empty()) throw DataError("city record without a name");
  if (!(city.latitude >= -90.0 && city.latitude <= 90.0))
    throw DataError("latitude out of range for " + city.name);
  if (!(city.longitude >= -180.0 && city.longitude <= 180.0))
    throw DataError("longitude out of range for " + city.name);
}

// Both roles must be represented.
inline void validate_city_list(const std::vector<CityRecord>& cities) {
  bool any_source = false, any_target = false;
  for (const auto& c : cities) {
    validate_city(c);
    any_source |= c.role == CityRole::Source;
    any_target |= c.role == CityRole::Target;
  }
  if (!any_source || !any_target)
    throw DataError("city list must contain at least one source and one target city");
}

inline std::vector<CityRecord> cities_with_role(const std::vector<CityRecord>& cities,
                                                CityRole role) {
  std::vector<CityRecord> out;
  for (const auto& c : cities)
    if (c.role == role) out.push_back(c);
  return out;
}

// 18 source + 6 target cities spanning tropical, arid, temperate and
// continental climates.
inline std::vector<CityRecord> default_cities() {
  using R = CityRole;
  return {
      {"Athens", 37.98, 23.73, "Csa", R::Source},
      {"Belgrade", 44.79, 20.45, "Cfa", R::Source},
      {"Buenos Aires", -34.60, -58.38, "Cfa", R::Source},
      {"Busan", 35.18, 129.08, "Cwa", R::Source},
      {"Chengdu", 30.66, 104.07, "Cwa", R::Source},
      {"Chongqing", 29.56, 106.55, "Cfa", R::Source},
      {"Delhi", 28.61, 77.21, "Cwa", R::Source},
      {"Dhaka", 23.81, 90.41, "Aw", R::Source},
      {"Harare", -17.83, 31.05, "Cwb", R::Source},
      {"Kiev", 50.45, 30.52, "Dfb", R::Source},
      {"Kolkata", 22.57, 88.36, "Aw", R::Source},
      {"Lahore", 31.55, 74.34, "BSh", R::Source},
      {"Lima", -12.05, -77.04, "BWh", R::Source},
      {"Luanda", -8.84, 13.23, "BSh", R::Source},
      {"Lusaka", -15.39, 28.32, "Cwa", R::Source},
      {"Maputo", -25.97, 32.57, "Aw", R::Source},
      {"Mumbai", 19.08, 72.88, "Am", R::Source},
      {"San Salvador", 13.69, -89.22, "Aw", R::Source},
      {"Santiago", -33.45, -70.67, "Csb", R::Target},
      {"Sofia", 42.70, 23.32, "Dfb", R::Target},
      {"São Paulo", -23.55, -46.63, "Cfa", R::Target},
      {"Windhoek", -22.56, 17.08, "BSh", R::Target},
      {"Wuhan", 30.59, 114.31, "Cfa", R::Target},
      {"Zagreb", 45.81, 15.98, "Cfb", R::Target},
  };
}

inline void to_json(nlohmann::json& j, const CityRecord& c) {
  j = {{"name", c.name},
       {"latitude", c.latitude},
       {"longitude", c.longitude},
       {"climate_zone", c.climate_zone},
       {"role", c.role == CityRole::Source ? "source" : "target"}};
}

inline void from_json(const nlohmann::json& j, CityRecord& c) {
  c.name = j.at("name").get<std::string>();
  c.latitude = j.at("latitude").get<double>();
  c.longitude = j.at("longitude").get<double>();
  c.climate_zone = j.value("climate_zone", std::string{});
  const auto role = j.at("role").get<std::string>();
  if (role == "source")
    c.role = CityRole::Source;
  else if (role == "target")
    c.role = CityRole::Target;
  else
    throw DataError("unknown city role '" + role + "' for " + c.name);
}

// Config file layout: {"cities": [{name, latitude, longitude, climate_zone, role}, ...]}
inline std::vector<CityRecord> load_cities(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open city config " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed city config " + path + ": " + e.what());
  }
  std::vector<CityRecord> cities;
  try {
    cities = doc.at("cities").get<std::vector<CityRecord>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed city config " + path + ": " + e.what());
  }
  validate_city_list(cities);
  return cities;
}

inline void save_cities(const std::string& path, const std::vector<CityRecord>& cities) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write city config " + path);
  out << nlohmann::json{{"cities", cities}}.dump(2) << '\n';
}

}  // namespace greennas
