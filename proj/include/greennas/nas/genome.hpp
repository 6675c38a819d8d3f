#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "greennas/nn/spec.hpp"

namespace greennas::nas {

enum class GeneType : std::uint8_t { None, LSTM, GRU, CNN, ATTN, DENSE };

inline constexpr std::size_t kSlots = 4;
inline constexpr int kGeneTypes = 6;

struct Gene {
  GeneType type = GeneType::None;
  std::uint8_t units_code = 0;    // index into kUnitChoices
  std::uint8_t dropout_code = 0;  // index into kDropoutChoices

  bool operator==(const Gene&) const = default;
};

using Genome = std::array<Gene, kSlots>;

inline bool is_temporal(GeneType t) { return t != GeneType::None && t != GeneType::DENSE; }

inline std::string_view gene_name(GeneType t) {
  switch (t) {
    case GeneType::None: return "NONE";
    case GeneType::LSTM: return "LSTM";
    case GeneType::GRU: return "GRU";
    case GeneType::CNN: return "CNN";
    case GeneType::ATTN: return "ATTN";
    case GeneType::DENSE: return "DENSE";
  }
  return "?";
}

// Canonical form: temporal slots first, then Dense slots (each group in its
// original order), then NONE slots with zeroed codes. An empty genome becomes
// a single GRU-32 without dropout.
inline Genome repair(const Genome& g) {
  Genome out{};
  std::size_t k = 0;
  for (const auto& s : g)
    if (is_temporal(s.type)) out[k++] = s;
  for (const auto& s : g)
    if (s.type == GeneType::DENSE) out[k++] = s;
  if (k == 0) out[k++] = {GeneType::GRU, 0, 0};
  for (; k < kSlots; ++k) out[k] = Gene{};
  return out;
}

inline bool is_canonical(const Genome& g) { return repair(g) == g; }

inline std::size_t genome_depth(const Genome& g) {
  return static_cast<std::size_t>(std::count_if(g.begin(), g.end(), [](const Gene& s) { return s.type != GeneType::None; }));
}

template <class Rng>
Gene random_gene(Rng& rng, bool allow_none) {
  std::uniform_int_distribution<int> type(allow_none ? 0 : 1, kGeneTypes - 1);
  std::uniform_int_distribution<int> units(0, static_cast<int>(nn::kUnitChoices.size()) - 1);
  std::uniform_int_distribution<int> dropout(0, static_cast<int>(nn::kDropoutChoices.size()) - 1);
  Gene s;
  s.type = static_cast<GeneType>(type(rng));
  s.units_code = static_cast<std::uint8_t>(units(rng));
  s.dropout_code = static_cast<std::uint8_t>(dropout(rng));
  return s;
}

// Slot 1 is never NONE; the remaining slots may be.
template <class Rng>
Genome random_genome(Rng& rng) {
  Genome g;
  for (std::size_t i = 0; i < kSlots; ++i) g[i] = random_gene(rng, i > 0);
  return repair(g);
}

inline nn::LayerKind layer_kind(GeneType t) {
  switch (t) {
    case GeneType::LSTM: return nn::LayerKind::LSTM;
    case GeneType::GRU: return nn::LayerKind::GRU;
    case GeneType::CNN: return nn::LayerKind::Conv1D;
    case GeneType::ATTN: return nn::LayerKind::Attention;
    case GeneType::DENSE: return nn::LayerKind::Dense;
    case GeneType::None: break;
  }
  throw PreconditionError("NONE slot has no layer kind");
}

inline nn::ModelSpec decode_genome(const Genome& genome) {
  const Genome g = repair(genome);
  nn::ModelSpec spec;
  for (const auto& s : g) {
    if (s.type == GeneType::None) break;
    spec.layers.push_back({layer_kind(s.type), nn::kUnitChoices.at(s.units_code), nn::kDropoutChoices.at(s.dropout_code)});
  }
  return spec;
}

// Cache key: the decoded architecture, which is identical for all genomes
// sharing a canonical form.
inline std::string canonical_key(const Genome& g) { return nn::to_descriptor(decode_genome(g)); }

// "GRU128/0.0-GRU128/0.0-NONE-NONE"
inline std::string genome_string(const Genome& g) {
  std::string out;
  for (std::size_t i = 0; i < kSlots; ++i) {
    if (i) out += '-';
    out += gene_name(g[i].type);
    if (g[i].type != GeneType::None) {
      char buf[24];
      std::snprintf(buf, sizeof buf, "%d/%.1f", nn::kUnitChoices.at(g[i].units_code),
                    nn::kDropoutChoices.at(g[i].dropout_code));
      out += buf;
    }
  }
  return out;
}

}  // namespace greennas::nas
