#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greennas/nn/spec.hpp"

// Layer kernels. Sequences are stored as a single column-major matrix of shape
// [width x (T*B)] where column t*B + b holds timestep t of sample b, so one
// timestep across the batch is a contiguous block of B columns. Vectors
// (after temporal reduction) are [width x B].
//
// Every forward is const and writes what backward needs into a caller-owned
// cache, which keeps inference on a shared model free of mutation.

namespace greennas::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
using Arr = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;
  int fan_in = 1;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols, int fan)
      : name(std::move(n)), value(Mat<S>::Zero(rows, cols)), grad(Mat<S>::Zero(rows, cols)), fan_in(fan) {}
};

namespace detail {

template <class S>
Mat<S> sigmoid(const Mat<S>& x) {
  return (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

template <class S>
Mat<S> add_bias(Mat<S> m, const Param<S>& bias) {
  m.colwise() += bias.value.col(0);
  return m;
}

}  // namespace detail

// Fully connected layer on [in x B]; ReLU for hidden layers, linear for the head.
template <class S>
struct DenseLayer {
  Param<S> weight, bias;
  bool relu = true;

  struct Cache {
    Mat<S> x, y;
  };

  DenseLayer() = default;
  DenseLayer(const std::string& prefix, int in, int out, bool use_relu)
      : weight(prefix + ".weight", out, in, in), bias(prefix + ".bias", out, 1, in), relu(use_relu) {}

  int width() const { return static_cast<int>(weight.value.rows()); }

  Mat<S> forward(const Mat<S>& x, Cache* cache) const {
    Mat<S> y = detail::add_bias<S>(weight.value * x, bias);
    if (relu) y = y.cwiseMax(S(0));
    if (cache) {
      cache->x = x;
      cache->y = y;
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy, const Cache& c, bool need_dx) {
    Mat<S> dz = relu ? Mat<S>((dy.array() * (c.y.array() > S(0)).template cast<S>()).matrix()) : dy;
    weight.grad.noalias() += dz * c.x.transpose();
    bias.grad += dz.rowwise().sum();
    if (!need_dx) return {};
    return weight.value.transpose() * dz;
  }

  std::vector<Param<S>*> params() { return {&weight, &bias}; }
};

// Temporal convolution, kernel 3, same padding (zeros at both ends), ReLU.
// Tap 0 sees x[t-1], tap 1 x[t], tap 2 x[t+1].
template <class S>
struct Conv1DLayer {
  Param<S> weight, bias;  // weight [units x 3*in]
  int in = 0;

  struct Cache {
    Mat<S> cols, y;
  };

  Conv1DLayer() = default;
  Conv1DLayer(const std::string& prefix, int in_width, int units)
      : weight(prefix + ".weight", units, kConvKernel * in_width, kConvKernel * in_width),
        bias(prefix + ".bias", units, 1, kConvKernel * in_width),
        in(in_width) {}

  int width() const { return static_cast<int>(weight.value.rows()); }

  Mat<S> forward(const Mat<S>& x, int T, int B, Cache* cache) const {
    Mat<S> cols = Mat<S>::Zero(kConvKernel * in, static_cast<Eigen::Index>(T) * B);
    for (int t = 0; t < T; ++t) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(t) * B;
      if (t > 0) cols.block(0, c0, in, B) = x.middleCols(c0 - B, B);
      cols.block(in, c0, in, B) = x.middleCols(c0, B);
      if (t + 1 < T) cols.block(2 * in, c0, in, B) = x.middleCols(c0 + B, B);
    }
    Mat<S> y = detail::add_bias<S>(weight.value * cols, bias).cwiseMax(S(0));
    if (cache) {
      cache->cols = std::move(cols);
      cache->y = y;
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy, const Cache& c, int T, int B, bool need_dx) {
    Mat<S> dz = (dy.array() * (c.y.array() > S(0)).template cast<S>()).matrix();
    weight.grad.noalias() += dz * c.cols.transpose();
    bias.grad += dz.rowwise().sum();
    if (!need_dx) return {};
    Mat<S> dcols = weight.value.transpose() * dz;
    Mat<S> dx = Mat<S>::Zero(in, static_cast<Eigen::Index>(T) * B);
    for (int t = 0; t < T; ++t) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(t) * B;
      dx.middleCols(c0, B) += dcols.block(in, c0, in, B);
      if (t + 1 < T) dx.middleCols(c0, B) += dcols.block(0, c0 + B, in, B);
      if (t > 0) dx.middleCols(c0, B) += dcols.block(2 * in, c0 - B, in, B);
    }
    return dx;
  }

  std::vector<Param<S>*> params() { return {&weight, &bias}; }
};

// Gated recurrent unit with separate input and hidden biases (gate order r, z, n):
//   r = σ(W_ir x + b_ir + W_hr h + b_hr)
//   z = σ(W_iz x + b_iz + W_hz h + b_hz)
//   n = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))
//   h' = (1 - z) ⊙ n + z ⊙ h
template <class S>
struct GruLayer {
  Param<S> w_ih, w_hh, b_ih, b_hh;
  int hidden = 0;

  struct Cache {
    Mat<S> x, h, r, z, n, ghn;  // all per-timestep, [.. x T*B]
  };

  GruLayer() = default;
  GruLayer(const std::string& prefix, int in, int h)
      : w_ih(prefix + ".weight_ih", 3 * h, in, in),
        w_hh(prefix + ".weight_hh", 3 * h, h, h),
        b_ih(prefix + ".bias_ih", 3 * h, 1, in),
        b_hh(prefix + ".bias_hh", 3 * h, 1, h),
        hidden(h) {}

  int width() const { return hidden; }

  Mat<S> forward(const Mat<S>& x, int T, int B, Cache* cache) const {
    const int h = hidden;
    const Eigen::Index cols = static_cast<Eigen::Index>(T) * B;
    const Mat<S> gi = detail::add_bias<S>(w_ih.value * x, b_ih);
    Mat<S> H(h, cols);
    Mat<S> R, Z, N, GHN;
    if (cache) {
      R.resize(h, cols);
      Z.resize(h, cols);
      N.resize(h, cols);
      GHN.resize(h, cols);
    }
    Mat<S> hprev = Mat<S>::Zero(h, B);
    for (int t = 0; t < T; ++t) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(t) * B;
      const Mat<S> gh = detail::add_bias<S>(w_hh.value * hprev, b_hh);
      const Mat<S> r = detail::sigmoid<S>(gi.block(0, c0, h, B) + gh.topRows(h));
      const Mat<S> z = detail::sigmoid<S>(gi.block(h, c0, h, B) + gh.middleRows(h, h));
      const Mat<S> n = (gi.block(2 * h, c0, h, B).array() + r.array() * gh.bottomRows(h).array()).tanh().matrix();
      hprev = ((S(1) - z.array()) * n.array() + z.array() * hprev.array()).matrix();
      H.middleCols(c0, B) = hprev;
      if (cache) {
        R.middleCols(c0, B) = r;
        Z.middleCols(c0, B) = z;
        N.middleCols(c0, B) = n;
        GHN.middleCols(c0, B) = gh.bottomRows(h);
      }
    }
    if (cache) {
      cache->x = x;
      cache->h = H;
      cache->r = std::move(R);
      cache->z = std::move(Z);
      cache->n = std::move(N);
      cache->ghn = std::move(GHN);
    }
    return H;
  }

  Mat<S> backward(const Mat<S>& dH, const Cache& c, int T, int B, bool need_dx) {
    const int h = hidden;
    const Eigen::Index cols = static_cast<Eigen::Index>(T) * B;
    Mat<S> dgi(3 * h, cols), dgh(3 * h, cols), hprev_all = Mat<S>::Zero(h, cols);
    Mat<S> dh_next = Mat<S>::Zero(h, B);
    for (int t = T - 1; t >= 0; --t) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(t) * B;
      const Mat<S> hprev = t > 0 ? Mat<S>(c.h.middleCols(c0 - B, B)) : Mat<S>::Zero(h, B);
      if (t > 0) hprev_all.middleCols(c0, B) = hprev;
      const auto r = c.r.middleCols(c0, B).array();
      const auto z = c.z.middleCols(c0, B).array();
      const auto n = c.n.middleCols(c0, B).array();
      const auto ghn = c.ghn.middleCols(c0, B).array();
      const Arr<S> dh = (dH.middleCols(c0, B) + dh_next).array();

      const Arr<S> dn_pre = dh * (S(1) - z) * (S(1) - n * n);
      const Arr<S> dz_pre = dh * (hprev.array() - n) * z * (S(1) - z);
      const Arr<S> dr_pre = dn_pre * ghn * r * (S(1) - r);

      dgi.block(0, c0, h, B) = dr_pre.matrix();
      dgi.block(h, c0, h, B) = dz_pre.matrix();
      dgi.block(2 * h, c0, h, B) = dn_pre.matrix();
      dgh.block(0, c0, h, B) = dr_pre.matrix();
      dgh.block(h, c0, h, B) = dz_pre.matrix();
      dgh.block(2 * h, c0, h, B) = (dn_pre * r).matrix();

      dh_next = (dh * z).matrix() + w_hh.value.transpose() * dgh.middleCols(c0, B);
    }
    w_hh.grad.noalias() += dgh * hprev_all.transpose();
    b_hh.grad += dgh.rowwise().sum();
    w_ih.grad.noalias() += dgi * c.x.transpose();
    b_ih.grad += dgi.rowwise().sum();
    if (!need_dx) return {};
    return w_ih.value.transpose() * dgi;
  }

  std::vector<Param<S>*> params() { return {&w_ih, &w_hh, &b_ih, &b_hh}; }
};

// LSTM with separate input and hidden biases (gate order i, f, g, o).
template <class S>
struct LstmLayer {
  Param<S> w_ih, w_hh, b_ih, b_hh;
  int hidden = 0;

  struct Cache {
    Mat<S> x, h, c, tanh_c, i, f, g, o;
  };

  LstmLayer() = default;
  LstmLayer(const std::string& prefix, int in, int h)
      : w_ih(prefix + ".weight_ih", 4 * h, in, in),
        w_hh(prefix + ".weight_hh", 4 * h, h, h),
        b_ih(prefix + ".bias_ih", 4 * h, 1, in),
        b_hh(prefix + ".bias_hh", 4 * h, 1, h),
        hidden(h) {}

  int width() const { return hidden; }

  Mat<S> forward(const Mat<S>& x, int T, int B, Cache* cache) const {
    const int h = hidden;
    const Eigen::Index cols = static_cast<Eigen::Index>(T) * B;
    Mat<S> gx = detail::add_bias<S>(w_ih.value * x, b_ih);
    gx.colwise() += b_hh.value.col(0);
    Mat<S> H(h, cols);
    Mat<S> C, TC, I, F, G, O;
    if (cache) {
      for (Mat<S>* m : {&C, &TC, &I, &F, &G, &O}) m->resize(h, cols);
    }
    Mat<S> hprev = Mat<S>::Zero(h, B), cprev = Mat<S>::Zero(h, B);
    for (int t = 0; t < T; ++t) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(t) * B;
      const Mat<S> gates = gx.middleCols(c0, B) + w_hh.value * hprev;
      const Mat<S> i = detail::sigmoid<S>(gates.topRows(h));
      const Mat<S> f = detail::sigmoid<S>(gates.middleRows(h, h));
      const Mat<S> g = gates.middleRows(2 * h, h).array().tanh().matrix();
      const Mat<S> o = detail::sigmoid<S>(gates.bottomRows(h));
      cprev = (f.array() * cprev.array() + i.array() * g.array()).matrix();
      const Mat<S> tc = cprev.array().tanh().matrix();
      hprev = (o.array() * tc.array()).matrix();
      H.middleCols(c0, B) = hprev;
      if (cache) {
        C.middleCols(c0, B) = cprev;
        TC.middleCols(c0, B) = tc;
        I.middleCols(c0, B) = i;
        F.middleCols(c0, B) = f;
        G.middleCols(c0, B) = g;
        O.middleCols(c0, B) = o;
      }
    }
    if (cache) {
      cache->x = x;
      cache->h = H;
      cache->c = std::move(C);
      cache->tanh_c = std::move(TC);
      cache->i = std::move(I);
      cache->f = std::move(F);
      cache->g = std::move(G);
      cache->o = std::move(O);
    }
    return H;
  }

  Mat<S> backward(const Mat<S>& dH, const Cache& c, int T, int B, bool need_dx) {
    const int h = hidden;
    const Eigen::Index cols = static_cast<Eigen::Index>(T) * B;
    Mat<S> dgates(4 * h, cols), hprev_all = Mat<S>::Zero(h, cols);
    Mat<S> dh_next = Mat<S>::Zero(h, B), dc_next = Mat<S>::Zero(h, B);
    for (int t = T - 1; t >= 0; --t) {
      const Eigen::Index c0 = static_cast<Eigen::Index>(t) * B;
      if (t > 0) hprev_all.middleCols(c0, B) = c.h.middleCols(c0 - B, B);
      const Mat<S> cprev = t > 0 ? Mat<S>(c.c.middleCols(c0 - B, B)) : Mat<S>::Zero(h, B);
      const auto i = c.i.middleCols(c0, B).array();
      const auto f = c.f.middleCols(c0, B).array();
      const auto g = c.g.middleCols(c0, B).array();
      const auto o = c.o.middleCols(c0, B).array();
      const auto tc = c.tanh_c.middleCols(c0, B).array();
      const Arr<S> dh = (dH.middleCols(c0, B) + dh_next).array();
      const Mat<S> dc = (dc_next.array() + dh * o * (S(1) - tc * tc)).matrix();

      dgates.block(0, c0, h, B) = (dc.array() * g * i * (S(1) - i)).matrix();
      dgates.block(h, c0, h, B) = (dc.array() * cprev.array() * f * (S(1) - f)).matrix();
      dgates.block(2 * h, c0, h, B) = (dc.array() * i * (S(1) - g * g)).matrix();
      dgates.block(3 * h, c0, h, B) = (dh * tc * o * (S(1) - o)).matrix();

      dc_next = (dc.array() * f).matrix();
      dh_next = w_hh.value.transpose() * dgates.middleCols(c0, B);
    }
    w_hh.grad.noalias() += dgates * hprev_all.transpose();
    w_ih.grad.noalias() += dgates * c.x.transpose();
    const Mat<S> db = dgates.rowwise().sum();
    b_hh.grad += db;
    b_ih.grad += db;
    if (!need_dx) return {};
    return w_ih.value.transpose() * dgates;
  }

  std::vector<Param<S>*> params() { return {&w_ih, &w_hh, &b_ih, &b_hh}; }
};

// Multi-head self-attention over the timesteps of each sample, preceded by a
// learned input projection to the model width. No positional encoding; the
// output projection is linear.
template <class S>
struct AttentionLayer {
  Param<S> w_in, b_in, w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;
  int dim = 0;

  struct Cache {
    Mat<S> x, u, q, k, v, ctx;
    std::vector<Mat<S>> attn;  // per (sample, head): [T x T], row = query
  };

  AttentionLayer() = default;
  AttentionLayer(const std::string& prefix, int in, int d)
      : w_in(prefix + ".in_proj.weight", d, in, in),
        b_in(prefix + ".in_proj.bias", d, 1, in),
        w_q(prefix + ".q_proj.weight", d, d, d),
        b_q(prefix + ".q_proj.bias", d, 1, d),
        w_k(prefix + ".k_proj.weight", d, d, d),
        b_k(prefix + ".k_proj.bias", d, 1, d),
        w_v(prefix + ".v_proj.weight", d, d, d),
        b_v(prefix + ".v_proj.bias", d, 1, d),
        w_o(prefix + ".out_proj.weight", d, d, d),
        b_o(prefix + ".out_proj.bias", d, 1, d),
        dim(d) {}

  int width() const { return dim; }

  using Strided = Eigen::Map<Mat<S>, Eigen::Unaligned, Eigen::OuterStride<>>;
  using ConstStrided = Eigen::Map<const Mat<S>, Eigen::Unaligned, Eigen::OuterStride<>>;

  // Rows [head*dh, (head+1)*dh) of sample b across all T timesteps.
  static Strided slice(Mat<S>& m, int b, int head, int dh, int T, int B) {
    return Strided(m.data() + static_cast<Eigen::Index>(b) * m.rows() + head * dh, dh, T,
                   Eigen::OuterStride<>(static_cast<Eigen::Index>(B) * m.rows()));
  }
  static ConstStrided slice(const Mat<S>& m, int b, int head, int dh, int T, int B) {
    return ConstStrided(m.data() + static_cast<Eigen::Index>(b) * m.rows() + head * dh, dh, T,
                        Eigen::OuterStride<>(static_cast<Eigen::Index>(B) * m.rows()));
  }

  Mat<S> forward(const Mat<S>& x, int T, int B, Cache* cache) const {
    const int dh = dim / kAttentionHeads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    const Mat<S> u = detail::add_bias<S>(w_in.value * x, b_in);
    const Mat<S> q = detail::add_bias<S>(w_q.value * u, b_q);
    const Mat<S> k = detail::add_bias<S>(w_k.value * u, b_k);
    const Mat<S> v = detail::add_bias<S>(w_v.value * u, b_v);
    Mat<S> ctx(dim, static_cast<Eigen::Index>(T) * B);
    if (cache) cache->attn.assign(static_cast<std::size_t>(B) * kAttentionHeads, Mat<S>());
    for (int b = 0; b < B; ++b) {
      for (int hd = 0; hd < kAttentionHeads; ++hd) {
        Mat<S> scores = scale * (slice(q, b, hd, dh, T, B).transpose() * slice(k, b, hd, dh, T, B));
        for (Eigen::Index r = 0; r < scores.rows(); ++r) {
          auto row = scores.row(r);
          row.array() -= row.maxCoeff();
          row = row.array().exp().matrix();
          row /= row.sum();
        }
        slice(ctx, b, hd, dh, T, B) = slice(v, b, hd, dh, T, B) * scores.transpose();
        if (cache) cache->attn[static_cast<std::size_t>(b) * kAttentionHeads + hd] = std::move(scores);
      }
    }
    Mat<S> y = detail::add_bias<S>(w_o.value * ctx, b_o);
    if (cache) {
      cache->x = x;
      cache->u = u;
      cache->q = q;
      cache->k = k;
      cache->v = v;
      cache->ctx = std::move(ctx);
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy, const Cache& c, int T, int B, bool need_dx) {
    const int dh = dim / kAttentionHeads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    const Eigen::Index cols = static_cast<Eigen::Index>(T) * B;
    w_o.grad.noalias() += dy * c.ctx.transpose();
    b_o.grad += dy.rowwise().sum();
    const Mat<S> dctx = w_o.value.transpose() * dy;
    Mat<S> dq = Mat<S>::Zero(dim, cols), dk = Mat<S>::Zero(dim, cols), dv = Mat<S>::Zero(dim, cols);
    for (int b = 0; b < B; ++b) {
      for (int hd = 0; hd < kAttentionHeads; ++hd) {
        const Mat<S>& a = c.attn[static_cast<std::size_t>(b) * kAttentionHeads + hd];
        const auto dc = slice(dctx, b, hd, dh, T, B);
        slice(dv, b, hd, dh, T, B) = dc * a;
        const Mat<S> da = dc.transpose() * slice(c.v, b, hd, dh, T, B);
        const Eigen::Matrix<S, Eigen::Dynamic, 1> rowdot = (da.array() * a.array()).rowwise().sum();
        const Mat<S> ds = (a.array() * (da.colwise() - rowdot).array()).matrix();
        slice(dq, b, hd, dh, T, B) = scale * (slice(c.k, b, hd, dh, T, B) * ds.transpose());
        slice(dk, b, hd, dh, T, B) = scale * (slice(c.q, b, hd, dh, T, B) * ds);
      }
    }
    w_q.grad.noalias() += dq * c.u.transpose();
    w_k.grad.noalias() += dk * c.u.transpose();
    w_v.grad.noalias() += dv * c.u.transpose();
    b_q.grad += dq.rowwise().sum();
    b_k.grad += dk.rowwise().sum();
    b_v.grad += dv.rowwise().sum();
    Mat<S> du = w_q.value.transpose() * dq;
    du.noalias() += w_k.value.transpose() * dk;
    du.noalias() += w_v.value.transpose() * dv;
    w_in.grad.noalias() += du * c.x.transpose();
    b_in.grad += du.rowwise().sum();
    if (!need_dx) return {};
    return w_in.value.transpose() * du;
  }

  std::vector<Param<S>*> params() { return {&w_in, &b_in, &w_q, &b_q, &w_k, &b_k, &w_v, &b_v, &w_o, &b_o}; }
};

}  // namespace greennas::nn
