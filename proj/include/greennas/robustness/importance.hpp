#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "greennas/ingest/schema.hpp"
#include "greennas/nn/train.hpp"
#include "greennas/transfer/stats.hpp"

namespace greennas::robustness {

struct FeatureImportance {
  std::string feature;
  double permuted_mean = 0.0;
  double permuted_std = 0.0;
  double delta = 0.0;  // permuted_mean - baseline
};

struct ImportanceReport {
  double baseline_rmse = 0.0;
  std::size_t repeats = 0;
  std::vector<FeatureImportance> features;
};

// Copy of `ds` where the whole lookback slice of each listed feature is taken
// from another window. All listed features move with the same permutation.
template <class Rng>
WindowedDataset permute_features(const WindowedDataset& ds, std::span<const std::size_t> features, Rng& rng) {
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  WindowedDataset out = ds;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto src = ds.window(perm[i]);
    auto dst = out.window(i);
    for (std::size_t t = 0; t < ds.lookback; ++t)
      for (auto f : features) dst[t * ds.features + f] = src[t * ds.features + f];
  }
  return out;
}

// Window-level permutation importance. Repeat r of every feature uses the
// same derived seed, so reports are reproducible per seed.
inline ImportanceReport permutation_importance(const nn::Network<float>& net, const WindowedDataset& test,
                                               std::size_t repeats = 5, std::uint64_t seed = 0) {
  require(!test.empty(), "permutation importance: test set is empty");
  require(repeats >= 1, "permutation importance: repeats must be at least 1");
  ImportanceReport rep;
  rep.repeats = repeats;
  rep.baseline_rmse = nn::evaluate_rmse(net, test);
  for (std::size_t f = 0; f < test.features; ++f) {
    std::vector<double> scores;
    for (std::size_t r = 0; r < repeats; ++r) {
      std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * (r + 1));
      const std::size_t one[] = {f};
      scores.push_back(nn::evaluate_rmse(net, permute_features(test, one, rng)));
    }
    FeatureImportance fi;
    fi.feature = f < kNumFeatures ? std::string(kFeatureSchema[f].name) : "feature_" + std::to_string(f);
    fi.permuted_mean = mean_of(scores);
    fi.permuted_std = stddev_of(scores);
    fi.delta = fi.permuted_mean - rep.baseline_rmse;
    rep.features.push_back(std::move(fi));
  }
  return rep;
}

}  // namespace greennas::robustness
