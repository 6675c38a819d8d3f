#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "greennas/dataset/windows.hpp"
#include "greennas/nn/layers.hpp"

namespace greennas::nn {

template <class S>
using Layer = std::variant<DenseLayer<S>, Conv1DLayer<S>, GruLayer<S>, LstmLayer<S>, AttentionLayer<S>>;

template <class S>
using LayerCache = std::variant<typename DenseLayer<S>::Cache, typename Conv1DLayer<S>::Cache,
                                typename GruLayer<S>::Cache, typename LstmLayer<S>::Cache,
                                typename AttentionLayer<S>::Cache>;

// Everything one training forward pass leaves behind for backward: per-layer
// caches, the dropout masks actually drawn, and the head input.
template <class S>
struct Trace {
  int T = 0, B = 0;
  std::vector<LayerCache<S>> caches;
  std::vector<Mat<S>> dropout_masks;  // empty matrix = no dropout applied
  typename DenseLayer<S>::Cache head;
};

// Sequence-to-vector forecaster: temporal layers, a temporal reduction, Dense
// layers, then a linear head. The reduction follows the last temporal layer:
// recurrent layers hand over their final hidden state, Conv1D and Attention
// are mean-pooled over time. A model without temporal layers feeds the last
// input timestep to its first Dense layer.
template <class S>
class Network {
 public:
  Network() = default;

  explicit Network(const ModelSpec& spec) : spec_(spec) {
    validate_spec(spec);
    int width = spec.input_features;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      const auto& l = spec.layers[i];
      const std::string prefix = "layer" + std::to_string(i) + "." + std::string(kind_name(l.kind));
      switch (l.kind) {
        case LayerKind::Dense: layers_.emplace_back(DenseLayer<S>(prefix, width, l.units, true)); break;
        case LayerKind::Conv1D: layers_.emplace_back(Conv1DLayer<S>(prefix, width, l.units)); break;
        case LayerKind::GRU: layers_.emplace_back(GruLayer<S>(prefix, width, l.units)); break;
        case LayerKind::LSTM: layers_.emplace_back(LstmLayer<S>(prefix, width, l.units)); break;
        case LayerKind::Attention: layers_.emplace_back(AttentionLayer<S>(prefix, width, l.units)); break;
      }
      width = l.units;
      if (is_temporal(l.kind)) last_temporal_ = static_cast<int>(i);
    }
    head_ = DenseLayer<S>("head", width, spec.outputs, false);
  }

  const ModelSpec& spec() const { return spec_; }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    for (auto& layer : layers_) {
      auto ps = std::visit([](auto& l) { return l.params(); }, layer);
      out.insert(out.end(), ps.begin(), ps.end());
    }
    auto hp = head_.params();
    out.insert(out.end(), hp.begin(), hp.end());
    return out;
  }

  // Parameters of hidden layers from index `frozen_layers` on, plus the head.
  std::vector<Param<S>*> trainable_params(std::size_t frozen_layers) {
    std::vector<Param<S>*> out;
    for (std::size_t i = frozen_layers; i < layers_.size(); ++i) {
      auto ps = std::visit([](auto& l) { return l.params(); }, layers_[i]);
      out.insert(out.end(), ps.begin(), ps.end());
    }
    auto hp = head_.params();
    out.insert(out.end(), hp.begin(), hp.end());
    return out;
  }

  std::vector<const Param<S>*> params() const {
    auto mutable_params = const_cast<Network*>(this)->params();
    return {mutable_params.begin(), mutable_params.end()};
  }

  std::int64_t num_scalars() const {
    std::int64_t n = 0;
    for (const auto* p : params()) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (auto* p : params()) p->grad.setZero();
  }

  // x: [F x T*B] sequence layout. With `trace` set, caches for backward are
  // recorded; with `dropout_rng` set, dropout masks are drawn (training mode).
  Mat<S> forward(const Mat<S>& x, int T, int B, Trace<S>* trace = nullptr,
                 std::mt19937_64* dropout_rng = nullptr) const {
    if (x.rows() != spec_.input_features || x.cols() != static_cast<Eigen::Index>(T) * B)
      throw DataError("forward: input shape mismatch");
    if (trace) {
      trace->T = T;
      trace->B = B;
      trace->caches.clear();
      trace->dropout_masks.clear();
    }
    Mat<S> h;
    if (last_temporal_ < 0) h = x.middleCols(static_cast<Eigen::Index>(T - 1) * B, B);
    const Mat<S>* cur = last_temporal_ < 0 ? &h : &x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const int idx = static_cast<int>(i);
      Mat<S> out = std::visit(
          [&](const auto& layer) -> Mat<S> {
            using L = std::decay_t<decltype(layer)>;
            typename L::Cache* cache = nullptr;
            if (trace)
              cache = &std::get<typename L::Cache>(
                  trace->caches.emplace_back(std::in_place_type<typename L::Cache>));
            if constexpr (std::is_same_v<L, DenseLayer<S>>)
              return layer.forward(*cur, cache);
            else
              return layer.forward(*cur, T, B, cache);
          },
          layers_[i]);
      const double p = spec_.layers[i].dropout;
      if (dropout_rng && p > 0.0) {
        Mat<S> mask(out.rows(), out.cols());
        std::bernoulli_distribution keep(1.0 - p);
        const S scale = S(1) / static_cast<S>(1.0 - p);
        for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = keep(*dropout_rng) ? scale : S(0);
        out.array() *= mask.array();
        if (trace) trace->dropout_masks.push_back(std::move(mask));
      } else if (trace) {
        trace->dropout_masks.emplace_back();
      }
      if (idx == last_temporal_) out = reduce(out, T, B);
      h = std::move(out);
      cur = &h;
    }
    return head_.forward(*cur, trace ? &trace->head : nullptr);
  }

  // Accumulates parameter gradients of a loss whose gradient w.r.t. the
  // output is `dout` [outputs x B]. Returns nothing about the input.
  void backward(const Trace<S>& trace, const Mat<S>& dout) {
    const int T = trace.T, B = trace.B;
    Mat<S> g = head_.backward(dout, trace.head, true);
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
      const auto ui = static_cast<std::size_t>(i);
      if (i == last_temporal_) g = expand(g, T, B);
      if (trace.dropout_masks[ui].size() > 0) g.array() *= trace.dropout_masks[ui].array();
      const bool need_dx = i > 0;
      g = std::visit(
          [&](auto& layer) -> Mat<S> {
            using L = std::decay_t<decltype(layer)>;
            const auto& cache = std::get<typename L::Cache>(trace.caches[ui]);
            if constexpr (std::is_same_v<L, DenseLayer<S>>)
              return layer.backward(g, cache, need_dx);
            else
              return layer.backward(g, cache, T, B, need_dx);
          },
          layers_[ui]);
    }
  }

  template <class To>
  Network<To> cast() const {
    Network<To> out(spec_);
    auto src = params();
    auto dst = out.params();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<To>();
    return out;
  }

 private:
  bool reduces_by_last_step() const {
    return last_temporal_ >= 0 && is_recurrent(spec_.layers[static_cast<std::size_t>(last_temporal_)].kind);
  }

  Mat<S> reduce(const Mat<S>& seq, int T, int B) const {
    if (reduces_by_last_step()) return seq.middleCols(static_cast<Eigen::Index>(T - 1) * B, B);
    Mat<S> mean = Mat<S>::Zero(seq.rows(), B);
    for (int t = 0; t < T; ++t) mean += seq.middleCols(static_cast<Eigen::Index>(t) * B, B);
    return mean / static_cast<S>(T);
  }

  Mat<S> expand(const Mat<S>& g, int T, int B) const {
    Mat<S> seq = Mat<S>::Zero(g.rows(), static_cast<Eigen::Index>(T) * B);
    if (reduces_by_last_step()) {
      seq.middleCols(static_cast<Eigen::Index>(T - 1) * B, B) = g;
    } else {
      const Mat<S> share = g / static_cast<S>(T);
      for (int t = 0; t < T; ++t) seq.middleCols(static_cast<Eigen::Index>(t) * B, B) = share;
    }
    return seq;
  }

  ModelSpec spec_;
  std::vector<Layer<S>> layers_;
  DenseLayer<S> head_;
  int last_temporal_ = -1;
};

// Uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor,
// drawn in parameter order from a single seeded stream.
template <class S>
Network<S> init_weights(const ModelSpec& spec, std::uint64_t seed) {
  Network<S> net(spec);
  std::mt19937_64 rng(seed);
  for (auto* p : net.params()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p->fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index k = 0; k < p->value.size(); ++k) p->value.data()[k] = static_cast<S>(dist(rng));
  }
  return net;
}

// Packs windows `idx` of a dataset into the [F x T*B] sequence layout.
template <class S>
Mat<S> gather_inputs(const WindowedDataset& ds, std::span<const std::size_t> idx) {
  const auto T = static_cast<Eigen::Index>(ds.lookback), F = static_cast<Eigen::Index>(ds.features);
  const auto B = static_cast<Eigen::Index>(idx.size());
  Mat<S> x(F, T * B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto w = ds.window(idx[static_cast<std::size_t>(b)]);
    for (Eigen::Index t = 0; t < T; ++t)
      for (Eigen::Index f = 0; f < F; ++f) x(f, t * B + b) = static_cast<S>(w[static_cast<std::size_t>(t * F + f)]);
  }
  return x;
}

template <class S>
Mat<S> gather_targets(const WindowedDataset& ds, std::span<const std::size_t> idx) {
  const auto F = static_cast<Eigen::Index>(ds.features), B = static_cast<Eigen::Index>(idx.size());
  Mat<S> y(F, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto t = ds.target(idx[static_cast<std::size_t>(b)]);
    for (Eigen::Index f = 0; f < F; ++f) y(f, b) = static_cast<S>(t[static_cast<std::size_t>(f)]);
  }
  return y;
}

// Row-major [B x T x F] tensor to the sequence layout.
template <class S>
Mat<S> pack_tensor(std::span<const float> x, std::size_t B, std::size_t T, std::size_t F) {
  if (x.size() != B * T * F) throw DataError("input tensor has the wrong number of elements");
  Mat<S> out(static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(T * B));
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f)
        out(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t * B + b)) = static_cast<S>(x[(b * T + t) * F + f]);
  return out;
}

}  // namespace greennas::nn
