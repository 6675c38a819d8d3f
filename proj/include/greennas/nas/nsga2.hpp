#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "greennas/nas/genome.hpp"

namespace greennas::nas {

// All three are minimized. Depth stands in for interpretability: ranking by
// 1/depth descending is the same as ranking by depth ascending.
struct Objectives {
  double val_rmse = 0.0;
  std::int64_t param_count = 0;
  int depth = 0;

  std::array<double, 3> vec() const {
    return {val_rmse, static_cast<double>(param_count), static_cast<double>(depth)};
  }
  bool operator==(const Objectives&) const = default;
};

struct Individual {
  Genome genome{};
  Objectives objectives;
  int rank = 0;
  double crowding = 0.0;
};

template <std::size_t M>
bool dominates(const std::array<double, M>& a, const std::array<double, M>& b) {
  bool strictly = false;
  for (std::size_t k = 0; k < M; ++k) {
    if (a[k] > b[k]) return false;
    strictly |= a[k] < b[k];
  }
  return strictly;
}

inline bool dominates(const Objectives& a, const Objectives& b) { return dominates(a.vec(), b.vec()); }

// Deb's fast non-dominated sort. Returns fronts of indices, front 0 first.
template <std::size_t M>
std::vector<std::vector<std::size_t>> fast_non_dominated_sort(std::span<const std::array<double, M>> pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts(1);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(pts[p], pts[q])) {
        dominated[p].push_back(q);
        ++count[q];
      } else if (dominates(pts[q], pts[p])) {
        dominated[q].push_back(p);
        ++count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    if (count[p] == 0) fronts[0].push_back(p);
  for (std::size_t f = 0; !fronts[f].empty(); ++f) {
    std::vector<std::size_t> next;
    for (auto p : fronts[f])
      for (auto q : dominated[p])
        if (--count[q] == 0) next.push_back(q);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
  }
  fronts.pop_back();
  return fronts;
}

inline std::vector<int> ranks_from_fronts(const std::vector<std::vector<std::size_t>>& fronts, std::size_t n) {
  std::vector<int> rank(n, -1);
  for (std::size_t f = 0; f < fronts.size(); ++f)
    for (auto i : fronts[f]) rank[i] = static_cast<int>(f);
  return rank;
}

// Crowding distance within one front. Per objective the extremes get +inf;
// interior points add (next - prev) / (max - min). Zero-range objectives add
// nothing.
template <std::size_t M>
std::vector<double> crowding_distance(std::span<const std::array<double, M>> front) {
  const std::size_t n = front.size();
  std::vector<double> d(n, 0.0);
  if (n == 0) return d;
  if (n <= 2) {
    std::fill(d.begin(), d.end(), std::numeric_limits<double>::infinity());
    return d;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < M; ++k) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return front[a][k] < front[b][k]; });
    const double lo = front[order.front()][k], hi = front[order.back()][k];
    d[order.front()] = std::numeric_limits<double>::infinity();
    d[order.back()] = std::numeric_limits<double>::infinity();
    if (hi - lo <= 0.0) continue;
    for (std::size_t i = 1; i + 1 < n; ++i)
      d[order[i]] += (front[order[i + 1]][k] - front[order[i - 1]][k]) / (hi - lo);
  }
  return d;
}

// Sets rank and crowding on every member.
inline void assign_rank_and_crowding(std::vector<Individual>& pop) {
  std::vector<std::array<double, 3>> pts(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) pts[i] = pop[i].objectives.vec();
  const auto fronts = fast_non_dominated_sort<3>(pts);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<std::array<double, 3>> fp;
    for (auto i : fronts[f]) fp.push_back(pts[i]);
    const auto cd = crowding_distance<3>(fp);
    for (std::size_t j = 0; j < fronts[f].size(); ++j) {
      pop[fronts[f][j]].rank = static_cast<int>(f);
      pop[fronts[f][j]].crowding = cd[j];
    }
  }
}

// Crowded comparison: lower rank first, then larger crowding distance.
// Returns -1 if a wins, +1 if b wins, 0 on a tie.
inline int crowded_compare(const Individual& a, const Individual& b) {
  if (a.rank != b.rank) return a.rank < b.rank ? -1 : 1;
  if (a.crowding != b.crowding) return a.crowding > b.crowding ? -1 : 1;
  return 0;
}

template <class Rng>
const Individual& binary_tournament(const std::vector<Individual>& pop, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  const auto& a = pop[pick(rng)];
  const auto& b = pop[pick(rng)];
  const int c = crowded_compare(a, b);
  if (c != 0) return c < 0 ? a : b;
  return std::bernoulli_distribution(0.5)(rng) ? a : b;
}

template <class Rng>
void mutate(Genome& g, double prob, Rng& rng) {
  std::bernoulli_distribution hit(prob);
  for (std::size_t i = 0; i < kSlots; ++i) {
    const Gene fresh = random_gene(rng, true);
    if (hit(rng)) g[i].type = fresh.type;
    if (hit(rng)) g[i].units_code = fresh.units_code;
    if (hit(rng)) g[i].dropout_code = fresh.dropout_code;
  }
}

// Tournament selection, uniform per-slot crossover and per-field mutation.
// Parents must carry rank and crowding. Children are repaired.
template <class Rng>
std::vector<Genome> make_offspring(const std::vector<Individual>& parents, Rng& rng, double crossover_prob = 0.9,
                                   double mutation_prob = 0.15) {
  require(!parents.empty() && parents.size() % 2 == 0, "make_offspring: parent population must be nonempty and even");
  std::bernoulli_distribution cross(crossover_prob), coin(0.5);
  std::vector<Genome> out;
  out.reserve(parents.size());
  while (out.size() < parents.size()) {
    Genome a = binary_tournament(parents, rng).genome;
    Genome b = binary_tournament(parents, rng).genome;
    if (cross(rng))
      for (std::size_t i = 0; i < kSlots; ++i)
        if (coin(rng)) std::swap(a[i], b[i]);
    mutate(a, mutation_prob, rng);
    mutate(b, mutation_prob, rng);
    out.push_back(repair(a));
    out.push_back(repair(b));
  }
  return out;
}

// Elitist survivor selection: fill by front, truncating the last front by
// crowding distance (ties: lower val_rmse, then earlier position).
inline std::vector<Individual> select_survivors(std::vector<Individual> combined, std::size_t n) {
  assign_rank_and_crowding(combined);
  std::vector<std::size_t> order(combined.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = combined[i];
    const auto& b = combined[j];
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.crowding != b.crowding) return a.crowding > b.crowding;
    return a.objectives.val_rmse < b.objectives.val_rmse;
  });
  std::vector<Individual> out;
  for (std::size_t i = 0; i < std::min(n, order.size()); ++i) out.push_back(combined[order[i]]);
  assign_rank_and_crowding(out);
  return out;
}

// Rank-0 members of the population, sorted by val_rmse.
inline std::vector<Individual> pareto_front(std::vector<Individual> pop) {
  assign_rank_and_crowding(pop);
  std::vector<Individual> front;
  for (auto& ind : pop)
    if (ind.rank == 0) front.push_back(ind);
  std::stable_sort(front.begin(), front.end(),
                   [](const Individual& a, const Individual& b) { return a.objectives.val_rmse < b.objectives.val_rmse; });
  return front;
}

}  // namespace greennas::nas
