#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "greennas/baselines/metrics.hpp"
#include "greennas/ingest/series.hpp"

namespace greennas {

// X_{t+1} = X_t: the last input row of every window.
inline Predictions persistence_forecast(const WindowedDataset& ds) {
  require(ds.lookback >= 1, "persistence_forecast: empty windows");
  Predictions out(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(ds.features));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto w = ds.window(i);
    const auto last = w.subspan((ds.lookback - 1) * ds.features, ds.features);
    for (std::size_t f = 0; f < ds.features; ++f)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = last[f];
  }
  return out;
}

// Mean per (month, hour-of-day, feature) over a training segment.
struct ClimatologyTable {
  std::array<std::array<std::array<double, kNumFeatures>, 24>, 12> mean{};
  std::array<std::array<std::array<std::size_t, kNumFeatures>, 24>, 12> count{};
  std::array<double, kNumFeatures> global_mean{};

  double lookup(unsigned month, unsigned hour, std::size_t f) const {
    return count[month - 1][hour][f] > 0 ? mean[month - 1][hour][f] : global_mean[f];
  }
};

// `rows[i]` was observed at `times[i]`. Non-finite cells are ignored.
inline ClimatologyTable climatology_fit(const RowMatrix& rows, std::span<const TimePoint> times) {
  require(static_cast<std::size_t>(rows.rows()) == times.size(), "climatology_fit: rows/timestamps mismatch");
  require(rows.cols() == static_cast<Eigen::Index>(kNumFeatures), "climatology_fit: expected 8 feature columns");
  ClimatologyTable t;
  std::array<double, kNumFeatures> sum{};
  std::array<std::size_t, kNumFeatures> n{};
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto slot = calendar_slot(times[i]);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const double v = rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
      if (!std::isfinite(v)) continue;
      t.mean[slot.month - 1][slot.hour][f] += v;
      ++t.count[slot.month - 1][slot.hour][f];
      sum[f] += v;
      ++n[f];
    }
  }
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    require(n[f] > 0, "climatology_fit: no observed values for feature " + std::string(kFeatureSchema[f].name));
    t.global_mean[f] = sum[f] / static_cast<double>(n[f]);
  }
  for (std::size_t m = 0; m < 12; ++m)
    for (std::size_t h = 0; h < 24; ++h)
      for (std::size_t f = 0; f < kNumFeatures; ++f)
        if (t.count[m][h][f] > 0) t.mean[m][h][f] /= static_cast<double>(t.count[m][h][f]);
  return t;
}

// Convenience: fit on `range` of a (scaled) series that starts at `start`.
inline ClimatologyTable climatology_fit(const RowMatrix& values, TimePoint start, RowRange range) {
  require(range.end <= static_cast<std::size_t>(values.rows()), "climatology_fit: range exceeds series");
  std::vector<TimePoint> times(range.size());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = start + std::chrono::hours(range.begin + i);
  return climatology_fit(RowMatrix(values.middleRows(static_cast<Eigen::Index>(range.begin),
                                                     static_cast<Eigen::Index>(range.size()))),
                         times);
}

inline Predictions climatology_forecast(const ClimatologyTable& table, std::span<const TimePoint> times) {
  Predictions out(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto slot = calendar_slot(times[i]);
    for (std::size_t f = 0; f < kNumFeatures; ++f)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
          static_cast<float>(table.lookup(slot.month, slot.hour, f));
  }
  return out;
}

// Timestamp of each window's target row, given each city's series start.
inline std::vector<TimePoint> target_times(const WindowedDataset& ds, const std::map<std::string, TimePoint>& starts) {
  std::vector<TimePoint> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto it = starts.find(ds.city_of(i));
    if (it == starts.end()) throw PreconditionError("target_times: no start time for city " + ds.city_of(i));
    out[i] = it->second + std::chrono::hours(ds.origins[i].row + ds.lookback);
  }
  return out;
}

// Climatology over a pooled dataset: one table per city, each city's windows
// forecast from its own table.
inline Predictions climatology_forecast(const std::map<std::string, ClimatologyTable>& tables,
                                        const WindowedDataset& ds, const std::map<std::string, TimePoint>& starts) {
  const auto times = target_times(ds, starts);
  Predictions out(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto it = tables.find(ds.city_of(i));
    if (it == tables.end()) throw PreconditionError("climatology_forecast: no table for city " + ds.city_of(i));
    out.row(static_cast<Eigen::Index>(i)) = climatology_forecast(it->second, std::span(&times[i], 1));
  }
  return out;
}

}  // namespace greennas
