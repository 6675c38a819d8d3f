#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "greennas/dataset/windows.hpp"

namespace greennas {

enum class Segment { Train, Val, Test };

inline std::string to_string(Segment s) {
  switch (s) {
    case Segment::Train: return "train";
    case Segment::Val: return "val";
    case Segment::Test: return "test";
  }
  return "unknown";
}

// Chronological train/val/test partition of one city's rows.
struct SplitSpec {
  std::array<double, 3> fractions{0.7, 0.15, 0.15};
  std::size_t n_rows = 0;
  std::size_t train_end = 0;
  std::size_t val_end = 0;

  RowRange range(Segment s) const {
    switch (s) {
      case Segment::Train: return {0, train_end};
      case Segment::Val: return {train_end, val_end};
      case Segment::Test: return {val_end, n_rows};
    }
    return {};
  }
};

namespace detail {
// floor() with a tolerance for products like 0.85 * 1000 = 849.999...
inline std::size_t floor_rows(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}
}  // namespace detail

inline SplitSpec chronological_split(std::size_t n_rows, std::array<double, 3> fractions = {0.7, 0.15, 0.15},
                                     std::size_t lookback = kLookback) {
  for (double f : fractions) require(f > 0.0, "split fractions must be positive");
  require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) <= 1e-9, "split fractions must sum to 1");
  SplitSpec s;
  s.fractions = fractions;
  s.n_rows = n_rows;
  s.train_end = detail::floor_rows(fractions[0], n_rows);
  s.val_end = detail::floor_rows(fractions[0] + fractions[1], n_rows);
  for (auto seg : {Segment::Train, Segment::Val, Segment::Test})
    if (s.range(seg).size() < lookback + 1)
      throw DataError(to_string(seg) + " segment has " + std::to_string(s.range(seg).size()) +
                      " rows, needs at least " + std::to_string(lookback + 1));
  return s;
}

inline SplitSpec chronological_split(const HourlySeries& series, std::array<double, 3> fractions = {0.7, 0.15, 0.15},
                                     std::size_t lookback = kLookback) {
  return chronological_split(series.rows(), fractions, lookback);
}

// Target-city layout: an adaptation pool (first 70%) for transfer draws and a
// test segment (last 30%). The first 20% of the test segment calibrates
// conformal intervals; the rest measures coverage.
struct TargetLayout {
  std::size_t n_rows = 0;
  std::size_t pool_end = 0;
  std::size_t calib_end = 0;

  RowRange pool() const { return {0, pool_end}; }
  RowRange test() const { return {pool_end, n_rows}; }
  RowRange calibration() const { return {pool_end, calib_end}; }
  RowRange evaluation() const { return {calib_end, n_rows}; }
};

inline TargetLayout target_layout(std::size_t n_rows, double pool_fraction = 0.7, double calibration_fraction = 0.2,
                                  std::size_t lookback = kLookback) {
  require(pool_fraction > 0.0 && pool_fraction < 1.0, "pool fraction must lie in (0, 1)");
  require(calibration_fraction > 0.0 && calibration_fraction < 1.0, "calibration fraction must lie in (0, 1)");
  TargetLayout t;
  t.n_rows = n_rows;
  t.pool_end = detail::floor_rows(pool_fraction, n_rows);
  t.calib_end = t.pool_end + detail::floor_rows(calibration_fraction, n_rows - t.pool_end);
  const std::pair<const char*, RowRange> parts[] = {
      {"adaptation pool", t.pool()}, {"calibration", t.calibration()}, {"evaluation", t.evaluation()}};
  for (const auto& [name, range] : parts)
    if (range.size() < lookback + 1)
      throw DataError(std::string(name) + " segment has " + std::to_string(range.size()) + " rows, needs at least " +
                      std::to_string(lookback + 1));
  return t;
}

// A city ready for pooling: raw series, its own scaler, its split.
struct CityPartition {
  HourlySeries series;
  ScalerParams scaler;
  SplitSpec split;
};

// Fits the scaler on the training segment only.
inline CityPartition partition_city(HourlySeries series, std::array<double, 3> fractions = {0.7, 0.15, 0.15},
                                    std::size_t lookback = kLookback) {
  auto split = chronological_split(series, fractions, lookback);
  auto scaler = fit_scaler(series, split.range(Segment::Train));
  return {std::move(series), std::move(scaler), split};
}

// Concatenates per-city windows of one segment, each city scaled by its own
// parameters.
inline WindowedDataset assemble_pooled(std::span<const CityPartition> cities, Segment segment,
                                       std::size_t lookback = kLookback) {
  if (cities.empty()) throw PreconditionError("assemble_pooled: no cities given");
  WindowedDataset pooled;
  pooled.lookback = lookback;
  for (const auto& c : cities) {
    validate_series(c.series);
    const RowMatrix scaled = apply_scaler(c.series, c.scaler);
    pooled.append(make_range_windows(scaled, c.split.range(segment), lookback, c.series.city.name));
  }
  return pooled;
}

// A target city prepared for adaptation and evaluation. The scaler is fit on
// the adaptation pool; test windows cover the whole test segment, calibration
// and evaluation windows its two parts.
struct TargetCity {
  HourlySeries series;
  TargetLayout layout;
  ScalerParams scaler;
  RowMatrix scaled;
  WindowedDataset test, calibration, evaluation;

  const std::string& name() const { return series.city.name; }
};

inline TargetCity prepare_target(HourlySeries series, std::size_t lookback = kLookback) {
  validate_series(series);
  TargetCity t;
  t.layout = target_layout(series.rows(), 0.7, 0.2, lookback);
  t.scaler = fit_scaler(series, t.layout.pool());
  t.scaled = apply_scaler(series, t.scaler);
  const auto& name = series.city.name;
  t.test = make_range_windows(t.scaled, t.layout.test(), lookback, name);
  t.calibration = make_range_windows(t.scaled, t.layout.calibration(), lookback, name);
  t.evaluation = make_range_windows(t.scaled, t.layout.evaluation(), lookback, name);
  t.series = std::move(series);
  return t;
}

inline WindowedDataset pooled_segment(std::span<const TargetCity> targets,
                                      WindowedDataset TargetCity::*segment) {
  require(!targets.empty(), "no target cities given");
  WindowedDataset out;
  out.lookback = (targets.front().*segment).lookback;
  for (const auto& t : targets) out.append(t.*segment);
  return out;
}

}  // namespace greennas
