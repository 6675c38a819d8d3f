#include <gtest/gtest.h>

#include <random>
#include <set>

#include "greennas/dataset/split.hpp"
#include "greennas/ingest/synthetic.hpp"
#include "greennas/nas/evolve.hpp"

using namespace greennas;
using namespace greennas::nas;

namespace {

Gene g(GeneType t, int units, double dropout = 0.0) {
  Gene s;
  s.type = t;
  s.units_code = static_cast<std::uint8_t>(std::find(nn::kUnitChoices.begin(), nn::kUnitChoices.end(), units) -
                                           nn::kUnitChoices.begin());
  s.dropout_code = static_cast<std::uint8_t>(std::lround(dropout * 10));
  return s;
}
const Gene none{};

// Rank of each point by repeated peeling with an O(n^2 m) dominance check.
std::vector<int> brute_force_ranks(const std::vector<std::array<double, 3>>& pts) {
  std::vector<int> rank(pts.size(), -1);
  std::size_t assigned = 0;
  for (int r = 0; assigned < pts.size(); ++r) {
    std::vector<std::size_t> layer;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (rank[i] != -1) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
        if (j == i || rank[j] != -1) continue;
        bool le = true, lt = false;
        for (int k = 0; k < 3; ++k) {
          le &= pts[j][k] <= pts[i][k];
          lt |= pts[j][k] < pts[i][k];
        }
        dominated = le && lt;
      }
      if (!dominated) layer.push_back(i);
    }
    for (auto i : layer) rank[i] = r;
    assigned += layer.size();
  }
  return rank;
}

std::vector<std::array<double, 3>> random_points(std::size_t n, std::uint64_t seed, bool discrete) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::array<double, 3>> pts(n);
  for (auto& p : pts)
    for (auto& v : p) v = discrete ? std::floor(u(rng) * 6) : u(rng);
  return pts;
}

}  // namespace

TEST(Genome, RepairExamples) {
  EXPECT_EQ(repair({none, g(GeneType::GRU, 64), none, g(GeneType::DENSE, 32)}),
            (Genome{g(GeneType::GRU, 64), g(GeneType::DENSE, 32), none, none}));
  EXPECT_EQ(repair({g(GeneType::DENSE, 32), g(GeneType::CNN, 128), none, none}),
            (Genome{g(GeneType::CNN, 128), g(GeneType::DENSE, 32), none, none}));
  EXPECT_EQ(repair({none, none, none, none}), (Genome{g(GeneType::GRU, 32), none, none, none}));
}

TEST(Genome, RandomGenomesAreCanonicalAndCoverTypes) {
  std::mt19937_64 rng(1);
  std::set<GeneType> seen_first, seen_any;
  for (int i = 0; i < 10000; ++i) {
    std::array<Gene, 4> raw;
    for (std::size_t s = 0; s < 4; ++s) raw[s] = random_gene(rng, s > 0);
    EXPECT_NE(raw[0].type, GeneType::None);
    const auto r = repair(raw);
    EXPECT_EQ(repair(r), r);
    const auto gen = random_genome(rng);
    EXPECT_TRUE(is_canonical(gen));
    EXPECT_NE(gen[0].type, GeneType::None);
    for (const auto& s : raw) seen_any.insert(s.type);
    seen_first.insert(gen[0].type);
  }
  EXPECT_EQ(seen_any.size(), 6u);
  EXPECT_EQ(seen_first.size(), 5u);
}

TEST(Genome, DecodeNamedModels) {
  const Genome a{g(GeneType::GRU, 128), g(GeneType::GRU, 128), none, none};
  const Genome c{g(GeneType::CNN, 32), none, none, none};
  EXPECT_EQ(nn::count_params(decode_genome(a)), 153096);
  EXPECT_EQ(nn::count_params(decode_genome(c)), 1064);
  EXPECT_EQ(decode_genome(a).depth(), 2u);
  EXPECT_EQ(canonical_key(a), "GRU:128:0,GRU:128:0");
  EXPECT_EQ(canonical_key({none, g(GeneType::GRU, 128), none, g(GeneType::GRU, 128)}), canonical_key(a));
}

TEST(Dominance, SmallCases) {
  const std::vector<std::array<double, 3>> one{{1, 2, 3}};
  EXPECT_EQ(fast_non_dominated_sort<3>(one).size(), 1u);
  const std::vector<std::array<double, 3>> two{{0.2, 200, 2}, {0.1, 100, 1}};
  const auto fronts = fast_non_dominated_sort<3>(two);
  ASSERT_EQ(fronts.size(), 2u);
  EXPECT_EQ(fronts[0], std::vector<std::size_t>{1});
  EXPECT_EQ(fronts[1], std::vector<std::size_t>{0});
  EXPECT_TRUE(fast_non_dominated_sort<3>(std::vector<std::array<double, 3>>{}).empty());
}

TEST(Dominance, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 6; ++seed)
    for (std::size_t n : {7u, 200u, 500u}) {
      const auto pts = random_points(n, seed, seed % 2 == 1);
      const auto fronts = fast_non_dominated_sort<3>(pts);
      EXPECT_EQ(ranks_from_fronts(fronts, n), brute_force_ranks(pts)) << "n=" << n << " seed=" << seed;
    }
}

TEST(Crowding, Examples) {
  const std::vector<std::array<double, 1>> two{{1}, {2}};
  for (double d : crowding_distance<1>(two)) EXPECT_TRUE(std::isinf(d));
  const std::vector<std::array<double, 2>> line{{0, 5}, {1, 5}, {2, 5}};
  const auto d = crowding_distance<2>(line);
  EXPECT_TRUE(std::isinf(d[0]));
  EXPECT_TRUE(std::isinf(d[2]));
  EXPECT_DOUBLE_EQ(d[1], 1.0);
  const std::vector<std::array<double, 3>> same(5, {1, 1, 1});
  const auto ds = crowding_distance<3>(same);
  EXPECT_EQ(std::count_if(ds.begin(), ds.end(), [](double v) { return v == 0.0; }), 3);
}

TEST(Crowding, BoundariesAreInfinite) {
  const auto pts = random_points(300, 9, false);
  const auto fronts = fast_non_dominated_sort<3>(pts);
  for (const auto& f : fronts) {
    std::vector<std::array<double, 3>> fp;
    for (auto i : f) fp.push_back(pts[i]);
    const auto d = crowding_distance<3>(fp);
    for (int k = 0; k < 3; ++k) {
      auto lo = std::min_element(fp.begin(), fp.end(), [k](auto& a, auto& b) { return a[k] < b[k]; });
      auto hi = std::max_element(fp.begin(), fp.end(), [k](auto& a, auto& b) { return a[k] < b[k]; });
      EXPECT_TRUE(std::isinf(d[static_cast<std::size_t>(lo - fp.begin())]));
      EXPECT_TRUE(std::isinf(d[static_cast<std::size_t>(hi - fp.begin())]));
    }
  }
}

TEST(Depth, InverseDepthRankingEquivalence) {
  const std::vector<int> depths{3, 1, 4, 2, 2, 1, 3};
  std::vector<std::size_t> by_depth(depths.size()), by_inverse(depths.size());
  std::iota(by_depth.begin(), by_depth.end(), 0);
  std::iota(by_inverse.begin(), by_inverse.end(), 0);
  std::stable_sort(by_depth.begin(), by_depth.end(), [&](auto a, auto b) { return depths[a] < depths[b]; });
  std::stable_sort(by_inverse.begin(), by_inverse.end(),
                   [&](auto a, auto b) { return 1.0 / depths[a] > 1.0 / depths[b]; });
  EXPECT_EQ(by_depth, by_inverse);
}

TEST(Offspring, DegenerateOperatorsClone) {
  std::mt19937_64 rng(3);
  std::vector<Individual> parents(6);
  for (std::size_t i = 0; i < parents.size(); ++i) {
    parents[i].genome = random_genome(rng);
    parents[i].objectives = {0.1 * static_cast<double>(i), 10, 1};
  }
  assign_rank_and_crowding(parents);
  const auto kids = make_offspring(parents, rng, 0.0, 0.0);
  ASSERT_EQ(kids.size(), parents.size());
  for (const auto& k : kids)
    EXPECT_TRUE(std::any_of(parents.begin(), parents.end(), [&](const Individual& p) { return p.genome == k; }));
  // Rank-0 parent 0 dominates the rest, so it wins every tournament it enters.
  EXPECT_GT(std::count(kids.begin(), kids.end(), parents[0].genome), 0);

  const auto mutated = make_offspring(parents, rng, 0.9, 1.0);
  for (const auto& k : mutated) EXPECT_TRUE(is_canonical(k));
  int same = 0;
  for (const auto& k : mutated)
    same += std::any_of(parents.begin(), parents.end(), [&](const Individual& p) { return p.genome == k; });
  EXPECT_LT(same, 3);
  std::vector<Individual> odd(3);
  EXPECT_THROW(make_offspring(odd, rng), PreconditionError);
}

TEST(Front, Extraction) {
  std::vector<Individual> pop(5);
  for (auto& p : pop) p.objectives = {0.5, 100, 2};
  EXPECT_EQ(pareto_front(pop).size(), 5u);
  for (std::size_t i = 0; i < pop.size(); ++i)
    pop[i].objectives = {0.1 * static_cast<double>(i + 1), static_cast<std::int64_t>(100 * (i + 1)), 1};
  EXPECT_EQ(pareto_front(pop).size(), 1u);
}

TEST(EvalCache, SingleComputationPerKey) {
  EvalCache cache;
  std::atomic<int> calls{0};
  auto slow = [&] {
    ++calls;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    return Objectives{0.5, 10, 1};
  };
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) threads.emplace_back([&] { EXPECT_EQ(cache.get_or_compute("k", slow).val_rmse, 0.5); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(calls.load(), 1);
  EXPECT_EQ(cache.misses(), 1u);
  EXPECT_EQ(cache.hits(), 3u);
}

class SmallSearch : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    std::vector<CityPartition> parts{partition_city(generate_synthetic_city(1, 700, ClimateProfile::Temperate)),
                                     partition_city(generate_synthetic_city(2, 700, ClimateProfile::Arid))};
    train_ = new WindowedDataset(assemble_pooled(parts, Segment::Train));
    val_ = new WindowedDataset(assemble_pooled(parts, Segment::Val));
  }
  static void TearDownTestSuite() {
    delete train_;
    delete val_;
  }
  static SearchConfig config() {
    SearchConfig c;
    c.population = 4;
    c.generations = 2;
    c.seed = 42;
    c.subsample = 0.3;
    c.train.max_epochs = 3;
    c.train.patience = 2;
    return c;
  }
  static inline WindowedDataset* train_ = nullptr;
  static inline WindowedDataset* val_ = nullptr;
};

TEST_F(SmallSearch, EvaluationUsesCache) {
  EvalCache cache;
  const Genome a{g(GeneType::GRU, 32), none, none, none};
  const Genome a2{none, none, g(GeneType::GRU, 32), none};
  auto cfg = config().train;
  const auto o1 = evaluate_genome(a, *train_, *val_, cfg, 1, cache);
  const auto o2 = evaluate_genome(a2, *train_, *val_, cfg, 1, cache);
  EXPECT_EQ(o1, o2);
  EXPECT_EQ(cache.misses(), 1u);
  EXPECT_EQ(o1.param_count, nn::count_params(decode_genome(a)));
  EXPECT_EQ(o1.depth, 1);
}

TEST_F(SmallSearch, EvolveInvariants) {
  const auto cfg = config();
  const auto res = evolve(*train_, *val_, cfg);
  ASSERT_EQ(res.history.size(), cfg.generations + 1);
  EXPECT_LE(res.unique_evaluations, cfg.population * (cfg.generations + 1));
  double prev = std::numeric_limits<double>::infinity();
  std::vector<Individual> prev_front;
  for (const auto& gen : res.history) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ind : gen.population) {
      best = std::min(best, ind.objectives.val_rmse);
      EXPECT_EQ(ind.objectives.param_count, nn::count_params(decode_genome(ind.genome)));
      EXPECT_TRUE(is_canonical(ind.genome));
    }
    EXPECT_LE(best, prev);
    prev = best;
    const auto front = pareto_front(gen.population);
    for (const auto& old : prev_front)
      EXPECT_TRUE(std::any_of(front.begin(), front.end(), [&](const Individual& n) {
        return n.objectives == old.objectives || dominates(n.objectives, old.objectives);
      }));
    prev_front = front;
  }
  const auto front = pareto_front(res.population);
  for (const auto& a : front)
    for (const auto& b : front) EXPECT_FALSE(dominates(a.objectives, b.objectives));

  const auto again = evolve(*train_, *val_, cfg);
  auto nocache_cfg = cfg;
  nocache_cfg.memoize = false;
  const auto nocache = evolve(*train_, *val_, nocache_cfg);
  for (const auto* other : {&again, &nocache}) {
    const auto f2 = pareto_front(other->population);
    ASSERT_EQ(f2.size(), front.size());
    for (std::size_t i = 0; i < front.size(); ++i) {
      EXPECT_EQ(f2[i].genome, front[i].genome);
      EXPECT_EQ(f2[i].objectives, front[i].objectives);
    }
  }
  EXPECT_GE(nocache.unique_evaluations, res.unique_evaluations);
}

TEST_F(SmallSearch, ZeroGenerationsReturnsInitialPopulation) {
  auto cfg = config();
  cfg.generations = 0;
  const auto res = evolve(*train_, *val_, cfg);
  EXPECT_EQ(res.population.size(), cfg.population);
  EXPECT_EQ(res.history.size(), 1u);
}

TEST_F(SmallSearch, WorkersDoNotChangeResults) {
  auto cfg = config();
  cfg.generations = 1;
  const auto serial = evolve(*train_, *val_, cfg);
  cfg.workers = 3;
  const auto parallel = evolve(*train_, *val_, cfg);
  ASSERT_EQ(serial.population.size(), parallel.population.size());
  for (std::size_t i = 0; i < serial.population.size(); ++i) {
    EXPECT_EQ(serial.population[i].genome, parallel.population[i].genome);
    EXPECT_EQ(serial.population[i].objectives, parallel.population[i].objectives);
  }
}
