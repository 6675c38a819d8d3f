#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "greennas/nn/serialize.hpp"

namespace greennas::report {

// Published architectures by alias. Anything else is parsed as a descriptor
// ("GRU:64:0.1,Dense:32:0").
inline const std::map<std::string, std::string>& arch_aliases() {
  static const std::map<std::string, std::string> m{
      {"gru128x2", "GRU:128:0,GRU:128:0"},
      {"cnn128", "Conv1D:128:0"},
      {"cnn32", "Conv1D:32:0"},
      {"lstm64x2", "LSTM:64:0,LSTM:64:0"},
      {"gru32", "GRU:32:0"},
  };
  return m;
}

inline nn::ModelSpec resolve_arch(const std::string& name) {
  const auto& m = arch_aliases();
  const auto it = m.find(name);
  return nn::parse_descriptor(it == m.end() ? name : it->second, 8, 8);
}

struct BenchResult {
  std::string model_id;
  double mean_ms = 0.0, median_ms = 0.0, p95_ms = 0.0;
  std::uintmax_t size_bytes = 0;
  std::int64_t params = 0;
  std::size_t iters = 0;
};

// Nearest-rank percentile of sorted values, p in [0, 100].
inline double percentile_sorted(const std::vector<double>& v, double p) {
  require(!v.empty(), "percentile of an empty sample");
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

// Single-window (B = 1) inference latency on the calling thread. The input is
// a fixed pseudo-random window; `warmup` calls are discarded. The artifact
// size is the serialized byte count (or the file size when a path is given).
inline BenchResult measure_latency(const nn::TrainedModel& model, std::size_t warmup = 100, std::size_t iters = 1000,
                                   const std::filesystem::path& artifact = {}, std::string model_id = {}) {
  require(iters >= 1, "measure_latency: iters must be at least 1");
  const auto& spec = model.spec();
  const std::size_t T = kLookback, F = static_cast<std::size_t>(spec.input_features);
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  nn::Mat<float> x(static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(T));
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = u(rng);

  volatile float sink = 0.0f;
  for (std::size_t i = 0; i < warmup; ++i) sink = sink + model.net.forward(x, static_cast<int>(T), 1)(0, 0);
  std::vector<double> ms(iters);
  for (std::size_t i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const nn::Mat<float> y = model.net.forward(x, static_cast<int>(T), 1);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + y(0, 0);
    ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  BenchResult r;
  r.model_id = model_id.empty() ? nn::to_descriptor(spec) : std::move(model_id);
  r.iters = iters;
  r.params = model.net.num_scalars();
  r.size_bytes = artifact.empty() ? nn::serialize_model(model).size() : nn::model_size(artifact);
  double sum = 0;
  for (double v : ms) sum += v;
  r.mean_ms = sum / static_cast<double>(iters);
  std::sort(ms.begin(), ms.end());
  r.median_ms = percentile_sorted(ms, 50);
  r.p95_ms = percentile_sorted(ms, 95);
  return r;
}

}  // namespace greennas::report
