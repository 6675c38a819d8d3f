#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "greennas/nn/train.hpp"

namespace greennas::robustness {

// Per-feature split conformal half-widths.
struct ConformalCalibration {
  double alpha = 0.05;
  std::vector<double> q;
  std::size_t n_cal = 0;
};

// Rank of the conformal quantile among n sorted scores (1-based). May exceed n.
inline std::size_t conformal_rank(std::size_t n, double alpha) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n + 1) * (1.0 - alpha) - 1e-12));
}

// Scores are absolute residuals |y - y_hat| per feature (column).
inline ConformalCalibration conformal_calibrate(const Predictions& pred, const Predictions& truth, double alpha = 0.05) {
  require(alpha > 0.0 && alpha < 1.0, "conformal: alpha must lie in (0, 1)");
  require(pred.rows() == truth.rows() && pred.cols() == truth.cols(), "conformal: prediction/truth shape mismatch");
  if (pred.rows() == 0) throw DataError("conformal: calibration set is empty");
  ConformalCalibration c;
  c.alpha = alpha;
  c.n_cal = static_cast<std::size_t>(pred.rows());
  const std::size_t k = conformal_rank(c.n_cal, alpha);
  std::vector<double> s(c.n_cal);
  for (Eigen::Index f = 0; f < pred.cols(); ++f) {
    for (std::size_t i = 0; i < c.n_cal; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      s[i] = std::abs(static_cast<double>(truth(r, f)) - static_cast<double>(pred(r, f)));
    }
    if (k > c.n_cal) {
      c.q.push_back(std::numeric_limits<double>::infinity());
    } else {
      std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k - 1), s.end());
      c.q.push_back(s[k - 1]);
    }
  }
  return c;
}

inline ConformalCalibration conformal_calibrate(const nn::Network<float>& net, const WindowedDataset& calibration,
                                                double alpha = 0.05) {
  if (calibration.empty()) throw DataError("conformal: calibration set is empty");
  return conformal_calibrate(nn::predict(net, calibration), Predictions(targets_of(calibration)), alpha);
}

struct Intervals {
  Predictions lower, upper;
};

inline Intervals conformal_interval(const Predictions& point, const ConformalCalibration& c) {
  require(static_cast<std::size_t>(point.cols()) == c.q.size(), "conformal: feature count differs from calibration");
  Intervals out{point, point};
  for (Eigen::Index f = 0; f < point.cols(); ++f) {
    const auto q = static_cast<float>(c.q[static_cast<std::size_t>(f)]);
    out.lower.col(f).array() -= q;
    out.upper.col(f).array() += q;
  }
  return out;
}

inline Intervals conformal_interval(const nn::Network<float>& net, const WindowedDataset& ds,
                                    const ConformalCalibration& c) {
  return conformal_interval(nn::predict(net, ds), c);
}

struct Coverage {
  std::vector<double> per_feature;
  double macro = 0.0;
  double mean_width = 0.0;
};

inline Coverage empirical_coverage(const Intervals& iv, const Predictions& truth) {
  require(iv.lower.rows() == truth.rows() && iv.lower.cols() == truth.cols(), "coverage: shape mismatch");
  require(truth.rows() >= 1, "coverage: no test points");
  Coverage c;
  const auto n = static_cast<double>(truth.rows());
  double width = 0.0;
  for (Eigen::Index f = 0; f < truth.cols(); ++f) {
    std::size_t inside = 0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      inside += iv.lower(i, f) <= truth(i, f) && truth(i, f) <= iv.upper(i, f);
      width += static_cast<double>(iv.upper(i, f)) - static_cast<double>(iv.lower(i, f));
    }
    c.per_feature.push_back(static_cast<double>(inside) / n);
  }
  c.macro = std::accumulate(c.per_feature.begin(), c.per_feature.end(), 0.0) / static_cast<double>(c.per_feature.size());
  c.mean_width = width / (n * static_cast<double>(truth.cols()));
  return c;
}

}  // namespace greennas::robustness
