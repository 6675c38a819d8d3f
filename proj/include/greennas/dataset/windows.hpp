#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "greennas/dataset/scaler.hpp"

namespace greennas {

inline constexpr std::size_t kLookback = 24;

struct WindowOrigin {
  std::uint32_t city = 0;  // index into WindowedDataset::cities
  std::uint64_t row = 0;   // first input row in the city's series

  bool operator==(const WindowOrigin&) const = default;
};

// Supervised pairs: N windows of [lookback x features] scaled inputs with the
// following row as target. Storage is row-major float32.
struct WindowedDataset {
  std::size_t lookback = kLookback;
  std::size_t features = kNumFeatures;
  std::vector<float> x;  // [N x lookback x features]
  std::vector<float> y;  // [N x features]
  std::vector<std::string> cities;
  std::vector<WindowOrigin> origins;

  std::size_t size() const { return origins.size(); }
  bool empty() const { return origins.empty(); }
  std::size_t window_stride() const { return lookback * features; }

  std::span<const float> window(std::size_t i) const { return {x.data() + i * window_stride(), window_stride()}; }
  std::span<float> window(std::size_t i) { return {x.data() + i * window_stride(), window_stride()}; }
  std::span<const float> target(std::size_t i) const { return {y.data() + i * features, features}; }

  const std::string& city_of(std::size_t i) const { return cities[origins[i].city]; }

  std::uint32_t city_index(const std::string& name) {
    for (std::size_t c = 0; c < cities.size(); ++c)
      if (cities[c] == name) return static_cast<std::uint32_t>(c);
    cities.push_back(name);
    return static_cast<std::uint32_t>(cities.size() - 1);
  }

  void push(std::span<const float> window_values, std::span<const float> target_values, const std::string& city,
            std::uint64_t row) {
    x.insert(x.end(), window_values.begin(), window_values.end());
    y.insert(y.end(), target_values.begin(), target_values.end());
    origins.push_back({city_index(city), row});
  }

  void append(const WindowedDataset& other) {
    require(other.lookback == lookback && other.features == features,
            "cannot concatenate datasets with different window shapes");
    for (std::size_t i = 0; i < other.size(); ++i)
      push(other.window(i), other.target(i), other.city_of(i), other.origins[i].row);
  }

  WindowedDataset subset(std::span<const std::size_t> indices) const {
    WindowedDataset out;
    out.lookback = lookback;
    out.features = features;
    out.x.reserve(indices.size() * window_stride());
    out.y.reserve(indices.size() * features);
    for (auto i : indices) out.push(window(i), target(i), city_of(i), origins[i].row);
    return out;
  }
};

// Window i takes rows [i, i+T) as input and row i+T as target. `row_offset`
// is added to recorded origins so windows built from a segment keep their
// position in the full series. Windows touching a NaN (unimputed gap) are
// skipped.
inline WindowedDataset make_windows(const RowMatrix& scaled, std::size_t lookback = kLookback,
                                    const std::string& city = {}, std::size_t row_offset = 0) {
  const auto n = static_cast<std::size_t>(scaled.rows());
  require(lookback >= 1, "make_windows: lookback must be positive");
  if (n <= lookback)
    throw DataError("make_windows: " + std::to_string(n) + " rows cannot form a window with lookback " +
                    std::to_string(lookback));
  if (scaled.cols() != static_cast<Eigen::Index>(kNumFeatures))
    throw DataError("make_windows: expected 8 feature columns");

  std::vector<bool> bad_row(n);
  for (std::size_t i = 0; i < n; ++i) bad_row[i] = !scaled.row(static_cast<Eigen::Index>(i)).allFinite();
  // bad_before[i] = number of bad rows in [0, i)
  std::vector<std::size_t> bad_before(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) bad_before[i + 1] = bad_before[i] + (bad_row[i] ? 1 : 0);

  WindowedDataset ds;
  ds.lookback = lookback;
  ds.features = kNumFeatures;
  const std::size_t count = n - lookback;
  ds.x.reserve(count * lookback * kNumFeatures);
  ds.y.reserve(count * kNumFeatures);
  ds.origins.reserve(count);
  const auto city_id = ds.city_index(city);

  for (std::size_t i = 0; i < count; ++i) {
    if (bad_before[i + lookback + 1] - bad_before[i] != 0) continue;
    for (std::size_t t = 0; t <= lookback; ++t) {
      auto row = scaled.row(static_cast<Eigen::Index>(i + t));
      auto& dst = t < lookback ? ds.x : ds.y;
      for (Eigen::Index f = 0; f < row.size(); ++f) dst.push_back(static_cast<float>(row(f)));
    }
    ds.origins.push_back({city_id, static_cast<std::uint64_t>(i + row_offset)});
  }
  return ds;
}

// Windows built strictly inside `range` of an already scaled matrix.
inline WindowedDataset make_range_windows(const RowMatrix& scaled, RowRange range, std::size_t lookback,
                                          const std::string& city) {
  require(range.end <= static_cast<std::size_t>(scaled.rows()), "window range exceeds series length");
  RowMatrix segment = scaled.middleRows(static_cast<Eigen::Index>(range.begin), static_cast<Eigen::Index>(range.size()));
  return make_windows(segment, lookback, city, range.begin);
}

}  // namespace greennas
