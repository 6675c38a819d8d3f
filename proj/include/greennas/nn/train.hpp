#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "greennas/baselines/metrics.hpp"
#include "greennas/nn/adam.hpp"
#include "greennas/nn/network.hpp"

namespace greennas::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 50;
  int patience = 10;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t frozen_layers = 0;  // leading hidden layers kept fixed

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

inline void validate_config(const TrainConfig& c) {
  require(c.batch_size > 0, "batch_size must be positive");
  require(c.max_epochs >= 0, "max_epochs must be non-negative");
  require(c.patience >= 1, "patience must be at least 1");
  require(c.max_epochs == 0 || c.patience < c.max_epochs, "patience must be smaller than max_epochs");
  require(c.learning_rate >= 0.0, "learning rate must be non-negative");
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_rmse = 0.0;
};

struct TrainMeta {
  int epochs_run = 0;
  int best_epoch = 0;  // 0 = initial weights
  double best_val_rmse = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  std::vector<EpochRecord> curve;
};

struct TrainedModel {
  Network<float> net;
  TrainMeta meta;
  std::vector<std::string> scaler_ids;

  const ModelSpec& spec() const { return net.spec(); }
};

// Inference over a whole dataset in fixed-size batches; dropout disabled.
template <class S>
Predictions predict(const Network<S>& net, const WindowedDataset& ds, std::size_t batch_size = 512) {
  Predictions out(static_cast<Eigen::Index>(ds.size()), net.spec().outputs);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    const std::size_t end = std::min(ds.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Mat<S> y = net.forward(gather_inputs<S>(ds, idx), static_cast<int>(ds.lookback), static_cast<int>(idx.size()));
    out.middleRows(static_cast<Eigen::Index>(start), y.cols()) = y.transpose().template cast<float>();
  }
  return out;
}

inline Predictions predict(const TrainedModel& model, const WindowedDataset& ds, std::size_t batch_size = 512) {
  return predict(model.net, ds, batch_size);
}

template <class S>
double evaluate_rmse(const Network<S>& net, const WindowedDataset& ds) {
  return rmse(predict(net, ds), targets_of(ds));
}

// Forward pass over a row-major [B x T x F] tensor. `training` enables
// dropout, which then needs an rng.
inline Predictions forward(const TrainedModel& model, std::span<const float> x, std::size_t batch,
                           std::size_t lookback = kLookback, bool training = false,
                           std::mt19937_64* dropout_rng = nullptr) {
  const auto F = static_cast<std::size_t>(model.spec().input_features);
  if (x.size() != batch * lookback * F)
    throw DataError("forward: expected " + std::to_string(batch * lookback * F) + " input values, got " +
                    std::to_string(x.size()));
  for (float v : x)
    if (!std::isfinite(v)) throw NumericError("forward: non-finite input");
  require(!training || dropout_rng, "forward: training mode needs a dropout rng");
  const Mat<float> y = model.net.forward(pack_tensor<float>(x, batch, lookback, F), static_cast<int>(lookback),
                                         static_cast<int>(batch), nullptr, training ? dropout_rng : nullptr);
  return y.transpose();
}

// Mini-batch Adam with per-epoch validation and early stopping. Returns the
// weights of the best validation epoch. Deterministic for a given
// (seed, data, spec, config). `init` overrides the seeded initialization.
inline TrainedModel train(const ModelSpec& spec, const WindowedDataset& train_set, const WindowedDataset& val_set,
                          const TrainConfig& cfg, const Network<float>* init = nullptr) {
  validate_config(cfg);
  require(!train_set.empty(), "train: training set is empty");
  require(!val_set.empty(), "train: validation set is empty");
  require(train_set.lookback == val_set.lookback, "train: train/val lookback differ");

  TrainedModel model;
  model.net = init ? *init : init_weights<float>(spec, cfg.seed);
  if (!(model.net.spec() == spec)) throw PreconditionError("train: initial weights do not match the spec");
  model.meta.seed = cfg.seed;

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  const int T = static_cast<int>(train_set.lookback);
  AdamState<float> adam;
  const auto adam_cfg = cfg.adam();

  // The first epoch always becomes the reference; initial weights are only
  // scored when no epoch runs.
  double best = std::numeric_limits<double>::infinity();
  if (cfg.max_epochs == 0) best = evaluate_rmse(model.net, val_set);
  Network<float> best_net = model.net;
  int since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Trace<float> trace;
  auto params = model.net.trainable_params(cfg.frozen_layers);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const int B = static_cast<int>(idx.size());
      const Mat<float> x = gather_inputs<float>(train_set, idx);
      const Mat<float> y = gather_targets<float>(train_set, idx);
      const Mat<float> pred = model.net.forward(x, T, B, &trace, &dropout_rng);
      const Mat<float> diff = pred - y;
      loss_sum += static_cast<double>(diff.squaredNorm());
      model.net.zero_grad();
      model.net.backward(trace, (2.0f / static_cast<float>(diff.size())) * diff);
      adam_step<float>(params, adam, adam_cfg);
    }
    const double val = evaluate_rmse(model.net, val_set);
    if (!std::isfinite(val))
      throw NumericError("train: validation RMSE became non-finite at epoch " + std::to_string(epoch) + " for " +
                         to_descriptor(spec));
    model.meta.curve.push_back(
        {epoch, loss_sum / static_cast<double>(train_set.size() * train_set.features), val});
    model.meta.epochs_run = epoch;
    if (val < best) {
      best = val;
      best_net = model.net;
      model.meta.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.net = std::move(best_net);
  model.meta.best_val_rmse = best;
  return model;
}

}  // namespace greennas::nn
