#pragma once

#include <Eigen/Dense>

#include "greennas/error.hpp"
#include "greennas/ingest/cities.hpp"
#include "greennas/ingest/schema.hpp"

namespace greennas {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One city's contiguous hourly record. Row i is start_time + i hours; gaps are
// flagged in `missing`, never represented by dropping rows.
struct HourlySeries {
  CityRecord city;
  TimePoint start_time{};
  RowMatrix values;     // [n_hours x 8], raw physical units
  MaskMatrix missing;   // [n_hours x 8]

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }

  TimePoint time_at(std::size_t row) const {
    return start_time + std::chrono::hours{static_cast<long>(row)};
  }

  // True when any feature of `row` is still missing.
  bool row_missing(std::size_t row) const { return missing.row(static_cast<Eigen::Index>(row)).any(); }
};

inline void validate_series(const HourlySeries& s) {
  if (s.values.cols() != static_cast<Eigen::Index>(kNumFeatures))
    throw DataError("series for " + s.city.name + " has " + std::to_string(s.values.cols()) +
                    " columns, expected 8");
  if (s.missing.rows() != s.values.rows() || s.missing.cols() != s.values.cols())
    throw DataError("missing mask shape does not match values for " + s.city.name);
  auto since_midnight = s.start_time - std::chrono::floor<std::chrono::hours>(s.start_time);
  if (since_midnight.count() != 0) throw DataError("series start is not aligned to a whole hour");
}

// Linearly interpolates runs of missing values no longer than `max_gap` hours
// that have valid neighbours on both sides. Longer runs and runs touching the
// series ends stay flagged so downstream windowing can exclude them.
inline HourlySeries impute_short_gaps(HourlySeries s, std::size_t max_gap = 6) {
  const auto n = static_cast<Eigen::Index>(s.rows());
  for (Eigen::Index f = 0; f < s.values.cols(); ++f) {
    Eigen::Index i = 0;
    while (i < n) {
      if (!s.missing(i, f)) {
        ++i;
        continue;
      }
      Eigen::Index j = i;
      while (j < n && s.missing(j, f)) ++j;
      const auto len = static_cast<std::size_t>(j - i);
      if (i > 0 && j < n && len <= max_gap) {
        const double left = s.values(i - 1, f), right = s.values(j, f);
        for (Eigen::Index k = i; k < j; ++k) {
          const double w = static_cast<double>(k - i + 1) / static_cast<double>(len + 1);
          s.values(k, f) = left + w * (right - left);
          s.missing(k, f) = false;
        }
      }
      i = j;
    }
  }
  return s;
}

}  // namespace greennas
