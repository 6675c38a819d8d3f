#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "greennas/ingest/series.hpp"

namespace greennas {

// Half-open row interval [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return size() == 0; }
  bool operator==(const RowRange&) const = default;
};

struct ScalerParams {
  std::string city;
  std::array<double, kNumFeatures> min{};
  std::array<double, kNumFeatures> max{};

  bool degenerate(std::size_t f) const { return min[f] == max[f]; }
  bool operator==(const ScalerParams&) const = default;
};

// Per-feature min/max over `train_range` only; missing cells are skipped.
inline ScalerParams fit_scaler(const HourlySeries& series, RowRange train_range) {
  require(!train_range.empty(), "fit_scaler: empty training range");
  require(train_range.end <= series.rows(), "fit_scaler: training range exceeds series length");
  ScalerParams p;
  p.city = series.city.name;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = train_range.begin; i < train_range.end; ++i) {
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(f);
      if (series.missing(r, c)) continue;
      lo = std::min(lo, series.values(r, c));
      hi = std::max(hi, series.values(r, c));
    }
    if (lo > hi)
      throw DataError("fit_scaler: feature " + std::string(kFeatureSchema[f].name) + " has no observed values in " +
                      series.city.name + "'s training range");
    p.min[f] = lo;
    p.max[f] = hi;
  }
  return p;
}

// (x - min) / (max - min) per column; degenerate columns map to 0. Values
// outside the fitted range are not clipped.
inline RowMatrix apply_scaler(const RowMatrix& values, const ScalerParams& p) {
  if (values.cols() != static_cast<Eigen::Index>(kNumFeatures))
    throw DataError("apply_scaler: matrix has " + std::to_string(values.cols()) + " columns, scaler expects 8");
  RowMatrix out(values.rows(), values.cols());
  for (Eigen::Index f = 0; f < values.cols(); ++f) {
    const auto uf = static_cast<std::size_t>(f);
    if (p.degenerate(uf))
      out.col(f) = values.col(f).unaryExpr([](double x) { return std::isnan(x) ? x : 0.0; });
    else
      out.col(f) = (values.col(f).array() - p.min[uf]) / (p.max[uf] - p.min[uf]);
  }
  return out;
}

inline RowMatrix apply_scaler(const HourlySeries& series, const ScalerParams& p) {
  return apply_scaler(series.values, p);
}

// Degenerate columns come back as the fitted constant.
inline RowMatrix inverse_scaler(const RowMatrix& scaled, const ScalerParams& p) {
  if (scaled.cols() != static_cast<Eigen::Index>(kNumFeatures))
    throw DataError("inverse_scaler: matrix has " + std::to_string(scaled.cols()) + " columns, scaler expects 8");
  RowMatrix out(scaled.rows(), scaled.cols());
  for (Eigen::Index f = 0; f < scaled.cols(); ++f) {
    const auto uf = static_cast<std::size_t>(f);
    out.col(f) = scaled.col(f).array() * (p.max[uf] - p.min[uf]) + p.min[uf];
  }
  return out;
}

}  // namespace greennas
