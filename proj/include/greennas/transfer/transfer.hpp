#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <future>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "greennas/dataset/split.hpp"
#include "greennas/nn/train.hpp"
#include "greennas/transfer/stats.hpp"

namespace greennas::transfer {

inline nn::TrainedModel pretrain(const nn::ModelSpec& spec, const WindowedDataset& source_train,
                                 const WindowedDataset& source_val, const nn::TrainConfig& cfg) {
  require(!source_train.empty(), "pretrain: pooled source dataset is empty");
  return nn::train(spec, source_train, source_val, cfg);
}

// Continues training from the pretrained weights with the given protocol.
inline nn::TrainedModel finetune(const nn::TrainedModel& pretrained, const WindowedDataset& train_set,
                                 const WindowedDataset& val_set, const nn::TrainConfig& cfg) {
  require(!train_set.empty(), "finetune: fraction dataset is empty");
  require(cfg.frozen_layers <= pretrained.net.spec().layers.size(), "finetune: more frozen layers than the model has");
  auto out = nn::train(pretrained.net.spec(), train_set, val_set, cfg, &pretrained.net);
  out.scaler_ids = pretrained.scaler_ids;
  return out;
}

struct TransferConfig {
  std::vector<double> fractions{0.01, 0.10, 0.50, 1.00};
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  nn::TrainConfig train;     // scratch protocol
  nn::TrainConfig finetune;  // transfer protocol; seed is overwritten per trial
  double val_share = 0.15;   // tail of each block used for early stopping
  std::size_t workers = 1;
};

// Adaptation data drawn from one contiguous block per target city.
struct FractionBlock {
  std::size_t rows = 0;
  std::vector<RowRange> ranges;  // per target, in pool coordinates
  WindowedDataset train, val;
};

// Rows for a fraction of the pool, rounded down.
inline std::size_t block_rows(double fraction, std::size_t pool_rows) {
  require(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
  return fraction >= 1.0 ? pool_rows : static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool_rows)));
}

// Seeded contiguous block per target. The block's tail becomes early-stopping
// data when both parts can hold a window; otherwise validation reuses the
// training windows.
template <class Rng>
FractionBlock draw_block(std::span<const TargetCity> targets, double fraction, double val_share, Rng& rng) {
  FractionBlock b;
  for (const auto& t : targets) {
    const auto pool = t.layout.pool();
    const std::size_t T = t.test.lookback;
    const std::size_t L = block_rows(fraction, pool.size());
    if (L < T + 1)
      throw DataError("fraction " + std::to_string(fraction) + " gives " + std::to_string(L) + " rows for city '" +
                      t.name() + "', fewer than lookback + 1 = " + std::to_string(T + 1));
    const std::size_t start =
        pool.begin + std::uniform_int_distribution<std::size_t>(0, pool.size() - L)(rng);
    b.ranges.push_back({start, start + L});
    b.rows += L;
    const auto n_val = static_cast<std::size_t>(std::floor(val_share * static_cast<double>(L)));
    if (n_val >= T + 1 && L - n_val >= T + 1) {
      b.train.append(make_range_windows(t.scaled, {start, start + L - n_val}, T, t.name()));
      b.val.append(make_range_windows(t.scaled, {start + L - n_val, start + L}, T, t.name()));
    } else {
      auto w = make_range_windows(t.scaled, {start, start + L}, T, t.name());
      b.val.append(w);
      b.train.append(std::move(w));
    }
  }
  b.train.lookback = b.val.lookback = targets.front().test.lookback;
  return b;
}

struct TrialResult {
  std::size_t block_rows = 0, train_windows = 0;
  double scratch_rmse = 0.0, transfer_rmse = 0.0;
  std::vector<double> scratch_window_mse, transfer_window_mse;
};

struct FractionResult {
  double fraction = 0.0;
  std::size_t samples = 0;        // block rows summed over targets
  std::size_t train_windows = 0;  // per trial
  std::vector<double> scratch, transfer;
  double scratch_mean = 0.0, scratch_std = 0.0, transfer_mean = 0.0, transfer_std = 0.0;
  double improvement_pct = 0.0;
  TestResult ttest, wilcoxon;
};

struct TransferReport {
  std::string arch;
  std::size_t trials = 0;
  std::size_t pool_rows = 0;
  std::size_t test_windows = 0;
  std::vector<FractionResult> rows;
};

inline std::vector<double> window_mse(const Predictions& pred, const Predictions& truth) {
  std::vector<double> out(static_cast<std::size_t>(pred.rows()));
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    out[static_cast<std::size_t>(i)] =
        (pred.row(i).cast<double>() - truth.row(i).cast<double>()).squaredNorm() / static_cast<double>(pred.cols());
  return out;
}

inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t fraction_index, std::size_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fraction_index), static_cast<std::uint32_t>(trial)};
  std::array<std::uint32_t, 2> w{};
  seq.generate(w.begin(), w.end());
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

inline TrialResult run_trial(const nn::ModelSpec& spec, const nn::TrainedModel& pretrained,
                             std::span<const TargetCity> targets, const WindowedDataset& test, const Predictions& truth,
                             double fraction, std::size_t fraction_index, std::size_t trial, const TransferConfig& cfg) {
  const std::uint64_t s = trial_seed(cfg.seed, fraction_index, trial);
  std::mt19937_64 rng(s);
  const auto block = draw_block(targets, fraction, cfg.val_share, rng);
  nn::TrainConfig scratch_cfg = cfg.train, tune_cfg = cfg.finetune;
  scratch_cfg.seed = tune_cfg.seed = s;
  const auto scratch = nn::train(spec, block.train, block.val, scratch_cfg);
  const auto tuned = finetune(pretrained, block.train, block.val, tune_cfg);
  const auto ps = nn::predict(scratch.net, test), pt = nn::predict(tuned.net, test);
  return {block.rows, block.train.size(), rmse(ps, truth), rmse(pt, truth), window_mse(ps, truth),
          window_mse(pt, truth)};
}

// Scratch versus fine-tuned training on seeded blocks of the target pools,
// evaluated on the pooled target test windows. Trial seeds depend only on the
// run seed, the fraction index and the trial index.
inline TransferReport run_transfer_experiment(const nn::ModelSpec& spec, const nn::TrainedModel& pretrained,
                                              std::span<const TargetCity> targets, const TransferConfig& cfg) {
  require(!targets.empty(), "transfer: no target cities");
  require(cfg.trials >= 2, "transfer: need at least 2 trials");
  require(!cfg.fractions.empty(), "transfer: no fractions");
  require(pretrained.net.spec() == spec, "transfer: pretrained model does not match the spec");
  const auto test = pooled_segment(targets, &TargetCity::test);
  const Predictions truth = targets_of(test);

  TransferReport rep;
  rep.arch = nn::to_descriptor(spec);
  rep.trials = cfg.trials;
  rep.test_windows = test.size();
  for (const auto& t : targets) rep.pool_rows += t.layout.pool().size();

  for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
    const double f = cfg.fractions[fi];
    for (const auto& t : targets) block_rows(f, t.layout.pool().size());
    std::vector<TrialResult> trials(cfg.trials);
    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, cfg.trials));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i; (i = next++) < cfg.trials;)
        trials[i] = run_trial(spec, pretrained, targets, test, truth, f, fi, i, cfg);
    };
    if (workers == 1) {
      work();
    } else {
      std::vector<std::future<void>> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.push_back(std::async(std::launch::async, work));
      for (auto& p : pool) p.get();
    }

    FractionResult r;
    r.fraction = f;
    r.samples = trials.front().block_rows;
    r.train_windows = trials.front().train_windows;
    std::vector<double> ws(test.size(), 0.0), wt(test.size(), 0.0);
    for (const auto& tr : trials) {
      r.scratch.push_back(tr.scratch_rmse);
      r.transfer.push_back(tr.transfer_rmse);
      for (std::size_t k = 0; k < ws.size(); ++k) {
        ws[k] += tr.scratch_window_mse[k] / static_cast<double>(cfg.trials);
        wt[k] += tr.transfer_window_mse[k] / static_cast<double>(cfg.trials);
      }
    }
    r.scratch_mean = mean_of(r.scratch);
    r.scratch_std = stddev_of(r.scratch);
    r.transfer_mean = mean_of(r.transfer);
    r.transfer_std = stddev_of(r.transfer);
    r.improvement_pct = (r.scratch_mean - r.transfer_mean) / r.scratch_mean * 100.0;
    r.ttest = paired_ttest(r.scratch, r.transfer);
    r.wilcoxon = wilcoxon_signed_rank(ws, wt);
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

}  // namespace greennas::transfer
