#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "greennas/dataset/windows.hpp"
#include "greennas/nn/train.hpp"

namespace greennas::robustness {

inline constexpr std::size_t kMaxHorizon = 48;

// Recursive forecasts for a batch of seed windows (row-major [B x T x F]).
// Element h of the result holds the step-(h+1) predictions as [B x F]. Each
// prediction is appended to its window and the oldest row dropped.
inline std::vector<Predictions> recursive_forecast_batch(const nn::Network<float>& net, std::span<const float> seeds,
                                                         std::size_t batch, std::size_t lookback, std::size_t horizon) {
  require(horizon >= 1 && horizon <= kMaxHorizon, "recursive forecast: horizon must lie in [1, 48]");
  const auto F = static_cast<std::size_t>(net.spec().input_features);
  require(static_cast<std::size_t>(net.spec().outputs) == F, "recursive forecast: outputs must match inputs");
  if (seeds.size() != batch * lookback * F) throw DataError("recursive forecast: seed tensor has the wrong size");
  std::vector<float> buf(seeds.begin(), seeds.end());
  std::vector<Predictions> out;
  for (std::size_t h = 1; h <= horizon; ++h) {
    const nn::Mat<float> y = net.forward(nn::pack_tensor<float>(buf, batch, lookback, F), static_cast<int>(lookback),
                                     static_cast<int>(batch));
    if (!y.allFinite()) throw NumericError("recursive forecast: non-finite prediction at step " + std::to_string(h));
    out.emplace_back(y.transpose());
    for (std::size_t b = 0; b < batch; ++b) {
      float* w = buf.data() + b * lookback * F;
      std::copy(w + F, w + lookback * F, w);
      for (std::size_t f = 0; f < F; ++f) w[(lookback - 1) * F + f] = y(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

// One seed window [T x F] row-major; returns [H x F].
inline Predictions recursive_forecast(const nn::Network<float>& net, std::span<const float> seed, std::size_t horizon,
                                      std::size_t lookback = kLookback) {
  const auto steps = recursive_forecast_batch(net, seed, 1, lookback, horizon);
  Predictions out(static_cast<Eigen::Index>(horizon), net.spec().outputs);
  for (std::size_t h = 0; h < horizon; ++h) out.row(static_cast<Eigen::Index>(h)) = steps[h].row(0);
  return out;
}

struct HorizonReport {
  std::vector<double> rmse;  // index h-1
  std::size_t windows = 0;
};

// RMSE per horizon over seed windows inside `range` of a scaled series whose
// next `horizon` rows are also inside the range and finite. Every `stride`-th
// start is used.
inline HorizonReport horizon_rmse(const nn::Network<float>& net, const RowMatrix& scaled, RowRange range,
                                  std::size_t horizon, std::size_t lookback = kLookback, std::size_t stride = 1) {
  require(stride >= 1, "horizon: stride must be positive");
  require(range.end <= static_cast<std::size_t>(scaled.rows()), "horizon: range exceeds series");
  const auto F = static_cast<std::size_t>(scaled.cols());
  std::vector<float> seeds;
  std::vector<std::size_t> starts;
  for (std::size_t s = range.begin; s + lookback + horizon <= range.end; s += stride) {
    const auto block = scaled.middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(lookback + horizon));
    if (!block.allFinite()) continue;
    starts.push_back(s);
    for (std::size_t t = 0; t < lookback; ++t)
      for (std::size_t f = 0; f < F; ++f)
        seeds.push_back(static_cast<float>(scaled(static_cast<Eigen::Index>(s + t), static_cast<Eigen::Index>(f))));
  }
  if (starts.empty()) throw DataError("horizon: no seed window fits the range");
  HorizonReport rep;
  rep.windows = starts.size();
  std::vector<double> sse(horizon, 0.0);
  constexpr std::size_t kChunk = 512;
  for (std::size_t c = 0; c < starts.size(); c += kChunk) {
    const std::size_t B = std::min(kChunk, starts.size() - c);
    const auto steps = recursive_forecast_batch(
        net, std::span<const float>(seeds).subspan(c * lookback * F, B * lookback * F), B, lookback, horizon);
    for (std::size_t h = 0; h < horizon; ++h)
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < F; ++f) {
          const double d = static_cast<double>(steps[h](static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(f))) -
                           scaled(static_cast<Eigen::Index>(starts[c + b] + lookback + h), static_cast<Eigen::Index>(f));
          sse[h] += d * d;
        }
  }
  for (double s : sse) rep.rmse.push_back(std::sqrt(s / static_cast<double>(starts.size() * F)));
  return rep;
}

}  // namespace greennas::robustness
