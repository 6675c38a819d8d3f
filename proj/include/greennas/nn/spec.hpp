#pragma once

#include <algorithm>
#include <cmath>
#include <array>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "greennas/error.hpp"

namespace greennas::nn {

enum class LayerKind { Dense, Conv1D, GRU, LSTM, Attention };

inline constexpr int kConvKernel = 3;
inline constexpr int kAttentionHeads = 4;
inline constexpr std::array<int, 4> kUnitChoices{32, 64, 128, 256};
inline constexpr std::array<double, 6> kDropoutChoices{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

inline bool is_temporal(LayerKind k) { return k != LayerKind::Dense; }
inline bool is_recurrent(LayerKind k) { return k == LayerKind::GRU || k == LayerKind::LSTM; }

inline std::string_view kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "Dense";
    case LayerKind::Conv1D: return "Conv1D";
    case LayerKind::GRU: return "GRU";
    case LayerKind::LSTM: return "LSTM";
    case LayerKind::Attention: return "Attention";
  }
  return "?";
}

inline LayerKind parse_kind(std::string_view s) {
  for (auto k : {LayerKind::Dense, LayerKind::Conv1D, LayerKind::GRU, LayerKind::LSTM, LayerKind::Attention})
    if (kind_name(k) == s) return k;
  throw FormatError("unknown layer kind '" + std::string(s) + "'");
}

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int units = 32;
  double dropout = 0.0;

  bool operator==(const LayerSpec&) const = default;
};

// Hidden layers in order; a linear head projecting to `outputs` is implicit.
struct ModelSpec {
  std::vector<LayerSpec> layers;
  int input_features = 8;
  int outputs = 8;

  std::size_t depth() const { return layers.size(); }
  bool operator==(const ModelSpec&) const = default;
};

// Structural validity: depth 1..4, temporal layers before Dense layers,
// positive widths, attention width divisible by the head count.
inline void validate_spec(const ModelSpec& spec) {
  if (spec.layers.empty() || spec.layers.size() > 4)
    throw PreconditionError("model depth must be 1..4, got " + std::to_string(spec.layers.size()));
  if (spec.input_features <= 0 || spec.outputs <= 0) throw PreconditionError("feature counts must be positive");
  bool seen_dense = false;
  for (const auto& l : spec.layers) {
    if (l.units <= 0) throw PreconditionError("layer width must be positive");
    if (!(l.dropout >= 0.0 && l.dropout < 1.0)) throw PreconditionError("dropout must lie in [0, 1)");
    if (l.kind == LayerKind::Attention && l.units % kAttentionHeads != 0)
      throw PreconditionError("attention width must be divisible by " + std::to_string(kAttentionHeads));
    if (is_temporal(l.kind) && seen_dense) throw PreconditionError("temporal layers must precede Dense layers");
    seen_dense |= l.kind == LayerKind::Dense;
  }
}

// Additionally restricts widths and dropout rates to the discrete search space.
inline bool in_search_space(const ModelSpec& spec) {
  for (const auto& l : spec.layers) {
    if (std::find(kUnitChoices.begin(), kUnitChoices.end(), l.units) == kUnitChoices.end()) return false;
    if (std::none_of(kDropoutChoices.begin(), kDropoutChoices.end(),
                     [&](double d) { return std::abs(d - l.dropout) < 1e-12; }))
      return false;
  }
  return true;
}

// Trainable parameter count.
//   Dense(in,u)      in*u + u
//   Conv1D(c,u,k=3)  c*k*u + u
//   GRU(in,h)        3h(in + h + 2)     two bias vectors per gate block
//   LSTM(in,h)       4h(in + h + 2)
//   Attention(in,d)  in*d + d + 4(d*d + d)
//   head             width*outputs + outputs
inline std::int64_t count_params(const ModelSpec& spec) {
  validate_spec(spec);
  std::int64_t total = 0;
  std::int64_t width = spec.input_features;
  for (const auto& l : spec.layers) {
    const std::int64_t u = l.units;
    switch (l.kind) {
      case LayerKind::Dense: total += width * u + u; break;
      case LayerKind::Conv1D: total += width * kConvKernel * u + u; break;
      case LayerKind::GRU: total += 3 * u * (width + u + 2); break;
      case LayerKind::LSTM: total += 4 * u * (width + u + 2); break;
      case LayerKind::Attention: total += width * u + u + 4 * (u * u + u); break;
    }
    width = u;
  }
  return total + width * spec.outputs + spec.outputs;
}

namespace detail {
inline std::string shortest(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
}  // namespace detail

// "GRU:128:0,GRU:128:0.1" — kind:units:dropout per hidden layer.
inline std::string to_descriptor(const ModelSpec& spec) {
  std::string out;
  for (const auto& l : spec.layers) {
    if (!out.empty()) out += ',';
    out += std::string(kind_name(l.kind)) + ':' + std::to_string(l.units) + ':' + detail::shortest(l.dropout);
  }
  return out;
}

inline ModelSpec parse_descriptor(std::string_view text, int input_features = 8, int outputs = 8) {
  ModelSpec spec;
  spec.input_features = input_features;
  spec.outputs = outputs;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    auto end = text.find(',', pos);
    auto item = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    auto c1 = item.find(':');
    auto c2 = item.find(':', c1 == std::string_view::npos ? c1 : c1 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos)
      throw FormatError("malformed layer descriptor '" + std::string(item) + "'");
    LayerSpec l;
    l.kind = parse_kind(item.substr(0, c1));
    auto units_s = item.substr(c1 + 1, c2 - c1 - 1);
    auto drop_s = item.substr(c2 + 1);
    if (std::from_chars(units_s.data(), units_s.data() + units_s.size(), l.units).ec != std::errc{} ||
        std::from_chars(drop_s.data(), drop_s.data() + drop_s.size(), l.dropout).ec != std::errc{})
      throw FormatError("malformed layer descriptor '" + std::string(item) + "'");
    spec.layers.push_back(l);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  try {
    validate_spec(spec);
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("invalid model descriptor: ") + e.what());
  }
  return spec;
}

}  // namespace greennas::nn
