#pragma once

#include <atomic>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "greennas/nas/nsga2.hpp"
#include "greennas/nn/train.hpp"

namespace greennas::nas {

// Canonical genome key -> objectives. Concurrent requests for the same key
// trigger one computation; later callers wait for its result. With
// memoization off every request recomputes (used to check that caching
// does not change results).
class EvalCache {
 public:
  explicit EvalCache(bool memoize = true) : memoize_(memoize) {}

  Objectives get_or_compute(const std::string& key, const std::function<Objectives()>& compute) {
    if (!memoize_) {
      ++misses_;
      return compute();
    }
    std::promise<Objectives> promise;
    std::shared_future<Objectives> future;
    bool owner = false;
    {
      std::lock_guard lock(mu_);
      auto it = entries_.find(key);
      if (it != entries_.end()) {
        ++hits_;
        future = it->second;
      } else {
        ++misses_;
        owner = true;
        future = promise.get_future().share();
        entries_.emplace(key, future);
      }
    }
    if (owner) {
      try {
        promise.set_value(compute());
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  // Completed entries, for reporting.
  std::map<std::string, Objectives> snapshot() const {
    std::lock_guard lock(mu_);
    std::map<std::string, Objectives> out;
    for (const auto& [k, f] : entries_)
      if (f.wait_for(std::chrono::seconds(0)) == std::future_status::ready) out.emplace(k, f.get());
    return out;
  }

 private:
  bool memoize_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<Objectives>> entries_;
  std::atomic<std::size_t> hits_{0}, misses_{0};
};

inline constexpr double kSentinelRmse = 10.0;

// Reduced training protocol for candidates. Batch 32 keeps enough optimizer
// steps per epoch on the small subsample.
inline nn::TrainConfig search_budget() {
  nn::TrainConfig c;
  c.max_epochs = 20;
  c.patience = 5;
  c.batch_size = 32;
  return c;
}

struct SearchConfig {
  std::size_t population = 20;
  std::size_t generations = 10;
  std::uint64_t seed = 0;
  double crossover_prob = 0.9;
  double mutation_prob = 0.15;
  double subsample = 0.1;  // fraction of pooled source-train windows used per candidate
  nn::TrainConfig train = search_budget();
  std::size_t workers = 1;
  bool memoize = true;
};

// FNV-1a, stable across platforms and runs.
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Trains the decoded genome (seeded from the run seed and the genome key) and
// returns its objectives. Training failures yield the sentinel RMSE.
inline Objectives evaluate_genome(const Genome& genome, const WindowedDataset& train_set,
                                  const WindowedDataset& val_set, const nn::TrainConfig& base, std::uint64_t run_seed,
                                  EvalCache& cache) {
  const auto spec = decode_genome(genome);
  const auto key = canonical_key(genome);
  return cache.get_or_compute(key, [&] {
    Objectives o{kSentinelRmse, nn::count_params(spec), static_cast<int>(spec.depth())};
    nn::TrainConfig cfg = base;
    cfg.seed = run_seed ^ stable_hash(key);
    try {
      o.val_rmse = nn::train(spec, train_set, val_set, cfg).meta.best_val_rmse;
    } catch (const NumericError& e) {
      std::clog << "[greennas] candidate " << key << " failed to train: " << e.what() << '\n';
    }
    return o;
  });
}

struct GenerationRecord {
  std::size_t generation = 0;
  std::vector<Individual> population;
  std::size_t unique_evaluations = 0;
};

struct SearchResult {
  std::vector<Individual> population;
  std::vector<GenerationRecord> history;
  std::size_t cache_hits = 0;
  std::size_t unique_evaluations = 0;
  std::map<std::string, Objectives> evaluated;
};

// Seeded random subset of `fraction` of the windows (at least one).
inline WindowedDataset subsample_windows(const WindowedDataset& ds, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "subsample fraction must lie in (0, 1]");
  if (fraction >= 1.0) return ds;
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(ds.size()))));
  std::sort(idx.begin(), idx.end());
  return ds.subset(idx);
}

namespace detail {

inline std::vector<Objectives> evaluate_all(const std::vector<Genome>& genomes, const WindowedDataset& tr,
                                            const WindowedDataset& va, const SearchConfig& cfg, EvalCache& cache) {
  std::vector<Objectives> out(genomes.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, genomes.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < genomes.size(); ++i)
      out[i] = evaluate_genome(genomes[i], tr, va, cfg.train, cfg.seed, cache);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i; (i = next++) < genomes.size();)
        out[i] = evaluate_genome(genomes[i], tr, va, cfg.train, cfg.seed, cache);
    }));
  for (auto& f : pool) f.get();
  return out;
}

}  // namespace detail

// Generational NSGA-II. Deterministic per seed: genome evaluation seeds depend
// only on the run seed and the genome key, so worker count and caching do not
// change results.
inline SearchResult evolve(const WindowedDataset& source_train, const WindowedDataset& source_val,
                           const SearchConfig& cfg,
                           const std::function<void(const GenerationRecord&)>& on_generation = {}) {
  require(cfg.population >= 2 && cfg.population % 2 == 0, "population size must be even and at least 2");
  require(!source_train.empty() && !source_val.empty(), "evolve: empty search datasets");
  const auto train_sub = subsample_windows(source_train, cfg.subsample, cfg.seed ^ 0x5851F42D4C957F2DULL);
  EvalCache cache(cfg.memoize);
  std::mt19937_64 rng(cfg.seed);

  auto evaluate = [&](const std::vector<Genome>& genomes) {
    const auto objs = detail::evaluate_all(genomes, train_sub, source_val, cfg, cache);
    std::vector<Individual> pop(genomes.size());
    for (std::size_t i = 0; i < genomes.size(); ++i) pop[i] = {genomes[i], objs[i], 0, 0.0};
    return pop;
  };

  SearchResult res;
  std::vector<Genome> init(cfg.population);
  for (auto& g : init) g = random_genome(rng);
  auto pop = evaluate(init);
  assign_rank_and_crowding(pop);
  auto record = [&](std::size_t gen) {
    res.history.push_back({gen, pop, cache.misses()});
    if (on_generation) on_generation(res.history.back());
  };
  record(0);

  for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
    auto children = evaluate(make_offspring(pop, rng, cfg.crossover_prob, cfg.mutation_prob));
    std::vector<Individual> combined = pop;
    combined.insert(combined.end(), children.begin(), children.end());
    pop = select_survivors(std::move(combined), cfg.population);
    record(gen);
  }
  res.population = pop;
  res.cache_hits = cache.hits();
  res.unique_evaluations = cache.misses();
  res.evaluated = cache.snapshot();
  return res;
}

inline nlohmann::json to_json(const Individual& ind) {
  return {{"genome", genome_string(ind.genome)},
          {"arch", canonical_key(ind.genome)},
          {"val_rmse", ind.objectives.val_rmse},
          {"params", ind.objectives.param_count},
          {"depth", ind.objectives.depth},
          {"rank", ind.rank},
          {"crowding", std::isinf(ind.crowding) ? nlohmann::json("inf") : nlohmann::json(ind.crowding)}};
}

// One JSON object per line: generation index, evaluation count, population.
inline std::string history_jsonl(const std::vector<GenerationRecord>& history) {
  std::string out;
  for (const auto& g : history) {
    nlohmann::json pop = nlohmann::json::array();
    for (const auto& ind : g.population) pop.push_back(to_json(ind));
    out += nlohmann::json{{"generation", g.generation}, {"unique_evaluations", g.unique_evaluations}, {"population", pop}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace greennas::nas
