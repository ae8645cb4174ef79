#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "si/nn/core.hpp"

namespace si::nn {

template <class T>
class Dense {
 public:
  Dense() = default;
  Dense(int in_dim, int out_dim) : w_(in_dim, out_dim), b_(1, out_dim) {
    gw_ = Mat<T>::Zero(in_dim, out_dim);
    gb_ = Mat<T>::Zero(1, out_dim);
  }

  void init(Rng& rng) {
    init_scaled_uniform(w_, rng);
    b_.setZero();
  }

  Mat<T> infer(const Mat<T>& x) const { return (x * w_).rowwise() + b_.row(0); }

  SeqBatch<T> infer(const SeqBatch<T>& xs) const {
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(infer(x));
    return out;
  }

  SeqBatch<T> forward(const SeqBatch<T>& xs, const Ctx&) {
    cache_ = xs;
    return infer(xs);
  }

  SeqBatch<T> backward(const SeqBatch<T>& dys) {
    SeqBatch<T> dxs;
    dxs.reserve(dys.size());
    for (std::size_t i = 0; i < dys.size(); ++i) {
      gw_.noalias() += cache_[i].transpose() * dys[i];
      gb_.row(0) += dys[i].colwise().sum();
      dxs.push_back(dys[i] * w_.transpose());
    }
    cache_.clear();
    return dxs;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + "/w", &w_, &gw_});
    out.push_back({prefix + "/b", &b_, &gb_});
  }

  int in_dim() const { return static_cast<int>(w_.rows()); }
  int out_dim() const { return static_cast<int>(w_.cols()); }

 private:
  Mat<T> w_, b_, gw_, gb_;
  SeqBatch<T> cache_;
};

template <class T>
class Tanh {
 public:
  SeqBatch<T> infer(const SeqBatch<T>& xs) const {
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(x.array().tanh().matrix());
    return out;
  }

  SeqBatch<T> forward(const SeqBatch<T>& xs, const Ctx&) {
    out_cache_ = infer(xs);
    return out_cache_;
  }

  SeqBatch<T> backward(const SeqBatch<T>& dys) {
    SeqBatch<T> dxs;
    dxs.reserve(dys.size());
    for (std::size_t i = 0; i < dys.size(); ++i)
      dxs.push_back((dys[i].array() * (T(1) - out_cache_[i].array().square())).matrix());
    out_cache_.clear();
    return dxs;
  }

 private:
  SeqBatch<T> out_cache_;
};

// Inverted dropout: surviving activations are scaled by 1/(1-p) at train time
// so inference is the identity.
template <class T>
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double p) : p_(p) {
    if (p < 0.0 || p >= 1.0) fail(ErrorCategory::InvalidParameter, "dropout rate must be in [0, 1)");
  }

  SeqBatch<T> infer(const SeqBatch<T>& xs) const { return xs; }

  SeqBatch<T> forward(const SeqBatch<T>& xs, const Ctx& ctx) {
    if (ctx.mode != Mode::Train || p_ == 0.0) {
      active_ = false;
      return xs;
    }
    if (!ctx.rng) fail(ErrorCategory::InvalidParameter, "dropout in train mode requires an rng");
    active_ = true;
    const T scale = static_cast<T>(1.0 / (1.0 - p_));
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    masks_.clear();
    masks_.reserve(xs.size());
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      Mat<T> mask(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
          mask(i, j) = dist(*ctx.rng) < p_ ? T(0) : scale;
      out.push_back(x.cwiseProduct(mask));
      masks_.push_back(std::move(mask));
    }
    return out;
  }

  SeqBatch<T> backward(const SeqBatch<T>& dys) {
    if (!active_) return dys;
    SeqBatch<T> dxs;
    dxs.reserve(dys.size());
    for (std::size_t i = 0; i < dys.size(); ++i) dxs.push_back(dys[i].cwiseProduct(masks_[i]));
    masks_.clear();
    return dxs;
  }

  double rate() const { return p_; }

 private:
  double p_ = 0.0;
  bool active_ = false;
  SeqBatch<T> masks_;
};

// Batch normalization over channels, pooling batch and time; keeps running
// mean/variance (momentum 0.99) for inference.
template <class T>
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(int dim)
      : gamma_(Mat<T>::Ones(1, dim)),
        beta_(Mat<T>::Zero(1, dim)),
        run_mean_(Mat<T>::Zero(1, dim)),
        run_var_(Mat<T>::Ones(1, dim)),
        ggamma_(Mat<T>::Zero(1, dim)),
        gbeta_(Mat<T>::Zero(1, dim)) {}

  SeqBatch<T> infer(const SeqBatch<T>& xs) const {
    const Row<T> inv_std = (run_var_.row(0).array() + eps()).sqrt().inverse().matrix();
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      Mat<T> y = ((x.rowwise() - run_mean_.row(0)).array().rowwise() * inv_std.array()).matrix();
      out.push_back((((y.array().rowwise() * gamma_.row(0).array()).rowwise() +
                      beta_.row(0).array()))
                        .matrix());
    }
    return out;
  }

  SeqBatch<T> forward(const SeqBatch<T>& xs, const Ctx& ctx) {
    std::size_t n = 0;
    for (const auto& x : xs) n += static_cast<std::size_t>(x.rows());
    if (n == 0) fail(ErrorCategory::EmptyInput, "batch norm forward on empty batch");
    const T fn = static_cast<T>(n);
    Row<T> mean = Row<T>::Zero(gamma_.cols());
    for (const auto& x : xs) mean += x.colwise().sum();
    mean /= fn;
    Row<T> var = Row<T>::Zero(gamma_.cols());
    for (const auto& x : xs) var += (x.rowwise() - mean).array().square().colwise().sum().matrix();
    var /= fn;

    if (ctx.mode == Mode::Train) {
      const T m = static_cast<T>(momentum());
      run_mean_.row(0) = m * run_mean_.row(0) + (T(1) - m) * mean;
      run_var_.row(0) = m * run_var_.row(0) + (T(1) - m) * var;
    }

    inv_std_ = (var.array() + eps()).sqrt().inverse().matrix();
    n_ = fn;
    xhat_.clear();
    xhat_.reserve(xs.size());
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      Mat<T> xh = ((x.rowwise() - mean).array().rowwise() * inv_std_.array()).matrix();
      out.push_back((((xh.array().rowwise() * gamma_.row(0).array()).rowwise() +
                      beta_.row(0).array()))
                        .matrix());
      xhat_.push_back(std::move(xh));
    }
    return out;
  }

  SeqBatch<T> backward(const SeqBatch<T>& dys) {
    Row<T> sum_dxh = Row<T>::Zero(gamma_.cols());
    Row<T> sum_dxh_xh = Row<T>::Zero(gamma_.cols());
    for (std::size_t i = 0; i < dys.size(); ++i) {
      ggamma_.row(0) += dys[i].cwiseProduct(xhat_[i]).colwise().sum();
      gbeta_.row(0) += dys[i].colwise().sum();
      sum_dxh += (dys[i].array().rowwise() * gamma_.row(0).array()).colwise().sum().matrix();
      sum_dxh_xh += (dys[i].cwiseProduct(xhat_[i]).array().rowwise() * gamma_.row(0).array())
                        .colwise()
                        .sum()
                        .matrix();
    }
    SeqBatch<T> dxs;
    dxs.reserve(dys.size());
    for (std::size_t i = 0; i < dys.size(); ++i) {
      Mat<T> dxh = (dys[i].array().rowwise() * gamma_.row(0).array()).matrix();
      Mat<T> inner = (dxh * n_).rowwise() - sum_dxh;
      inner -= (xhat_[i].array().rowwise() * sum_dxh_xh.array()).matrix();
      dxs.push_back(((inner.array().rowwise() * inv_std_.array()) / n_).matrix());
    }
    xhat_.clear();
    return dxs;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + "/gamma", &gamma_, &ggamma_});
    out.push_back({prefix + "/beta", &beta_, &gbeta_});
    out.push_back({prefix + "/run_mean", &run_mean_, nullptr});
    out.push_back({prefix + "/run_var", &run_var_, nullptr});
  }

  static constexpr T eps() { return static_cast<T>(1e-5); }
  static constexpr double momentum() { return 0.99; }

 private:
  Mat<T> gamma_, beta_, run_mean_, run_var_, ggamma_, gbeta_;
  SeqBatch<T> xhat_;
  Row<T> inv_std_;
  T n_ = T(0);
};

// Single-direction GRU. Gate layout in the concatenated weights is
// [update | reset | candidate]; the update gate weights the candidate state:
//   h_t = (1 - z_t) * h_{t-1} + z_t * hcand_t
// with the reset gate applied to h_{t-1} before the recurrent matmul of the
// candidate.
template <class T>
class GruDir {
 public:
  GruDir() = default;
  GruDir(int in_dim, int hidden, bool reverse)
      : in_dim_(in_dim), hidden_(hidden), reverse_(reverse) {
    w_ = Mat<T>::Zero(in_dim, 3 * hidden);
    u_ = Mat<T>::Zero(hidden, 3 * hidden);
    b_ = Mat<T>::Zero(1, 3 * hidden);
    gw_ = w_;
    gu_ = u_;
    gb_ = b_;
  }

  void init(Rng& rng) {
    init_scaled_uniform(w_, rng);
    Mat<T> q(hidden_, hidden_);
    for (int g = 0; g < 3; ++g) {
      init_orthogonal(q, rng);
      u_.block(0, g * hidden_, hidden_, hidden_) = q;
    }
    b_.setZero();
  }

  Mat<T> infer(const Mat<T>& x) const {
    Mat<T> h;
    run(maybe_reverse(x), &h, nullptr);
    return maybe_reverse(h);
  }

  Mat<T> forward(const Mat<T>& x) {
    Cache c;
    c.x = maybe_reverse(x);
    run(c.x, &c.h, &c);
    Mat<T> out = maybe_reverse(c.h);
    caches_.push_back(std::move(c));
    return out;
  }

  Mat<T> backward(const Mat<T>& dy_in, std::size_t idx) {
    const Cache& c = caches_[idx];
    const Mat<T> dy = maybe_reverse(dy_in);
    const Eigen::Index tn = c.x.rows();
    const int hd = hidden_;
    Mat<T> a(tn, 3 * hd);  // pre-activation grads, gate layout [z | r | h]
    Row<T> dh = Row<T>::Zero(hd);
    const auto uz = u_.block(0, 0, hd, hd);
    const auto ur = u_.block(0, hd, hd, hd);
    const auto uh = u_.block(0, 2 * hd, hd, hd);
    Row<T> h_prev(hd), tmp(hd), dz(hd), dhc(hd), a_h(hd), a_r(hd), a_z(hd);
    for (Eigen::Index t = tn - 1; t >= 0; --t) {
      if (t > 0)
        h_prev = c.h.row(t - 1);
      else
        h_prev.setZero();
      dh += dy.row(t);
      const auto zt = c.z.row(t).array();
      const auto rt = c.r.row(t).array();
      const auto hct = c.hc.row(t).array();
      dz = (dh.array() * (hct - h_prev.array())).matrix();
      dhc = (dh.array() * zt).matrix();
      a_h = (dhc.array() * (T(1) - hct.square())).matrix();
      tmp.noalias() = a_h * uh.transpose();
      a_r = (tmp.array() * h_prev.array() * rt * (T(1) - rt)).matrix();
      a_z = (dz.array() * zt * (T(1) - zt)).matrix();
      a.row(t).segment(0, hd) = a_z;
      a.row(t).segment(hd, hd) = a_r;
      a.row(t).segment(2 * hd, hd) = a_h;
      dh = (dh.array() * (T(1) - zt) + tmp.array() * rt).matrix();
      dh.noalias() += a_z * uz.transpose();
      dh.noalias() += a_r * ur.transpose();
    }
    // Parameter gradients as batched matmuls over the whole sequence.
    gb_.row(0) += a.colwise().sum();
    gw_.noalias() += c.x.transpose() * a;
    Mat<T> h_shift = Mat<T>::Zero(tn, hd);
    if (tn > 1) h_shift.bottomRows(tn - 1) = c.h.topRows(tn - 1);
    gu_.block(0, 0, hd, hd).noalias() += h_shift.transpose() * a.block(0, 0, tn, hd);
    gu_.block(0, hd, hd, hd).noalias() += h_shift.transpose() * a.block(0, hd, tn, hd);
    gu_.block(0, 2 * hd, hd, hd).noalias() +=
        c.r.cwiseProduct(h_shift).transpose() * a.block(0, 2 * hd, tn, hd);
    Mat<T> dx = a * w_.transpose();
    return maybe_reverse(dx);
  }

  void clear_caches() { caches_.clear(); }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + "/w", &w_, &gw_});
    out.push_back({prefix + "/u", &u_, &gu_});
    out.push_back({prefix + "/b", &b_, &gb_});
  }

  int hidden() const { return hidden_; }
  int in_dim() const { return in_dim_; }

 private:
  struct Cache {
    Mat<T> x, z, r, hc, h;
  };

  Mat<T> maybe_reverse(const Mat<T>& m) const {
    if (!reverse_) return m;
    return m.colwise().reverse();
  }

  void run(const Mat<T>& x, Mat<T>* h_out, Cache* cache) const {
    const Eigen::Index tn = x.rows();
    const int hd = hidden_;
    if (x.cols() != in_dim_) fail(ErrorCategory::Shape, "gru input dim mismatch");
    Mat<T> p = (x * w_).rowwise() + b_.row(0);  // input projections, all gates
    Mat<T> h(tn, hd);
    Mat<T> z, r, hc;
    if (cache) {
      z.resize(tn, hd);
      r.resize(tn, hd);
      hc.resize(tn, hd);
    }
    const auto u_zr = u_.block(0, 0, hd, 2 * hd);
    const auto u_h = u_.block(0, 2 * hd, hd, hd);
    Row<T> h_prev = Row<T>::Zero(hd);
    Row<T> q_zr(2 * hd), q_h(hd), zt(hd), rt(hd), hct(hd), rh(hd);
    const auto sigmoid = [](const auto& v) {
      return (T(1) + (-v.array()).exp()).inverse().matrix();
    };
    for (Eigen::Index t = 0; t < tn; ++t) {
      q_zr.noalias() = h_prev * u_zr;
      zt = sigmoid(p.row(t).segment(0, hd) + q_zr.segment(0, hd));
      rt = sigmoid(p.row(t).segment(hd, hd) + q_zr.segment(hd, hd));
      rh = rt.cwiseProduct(h_prev);
      q_h.noalias() = rh * u_h;
      hct = (p.row(t).segment(2 * hd, hd) + q_h).array().tanh().matrix();
      h_prev = ((T(1) - zt.array()) * h_prev.array() + zt.array() * hct.array()).matrix();
      h.row(t) = h_prev;
      if (cache) {
        z.row(t) = zt;
        r.row(t) = rt;
        hc.row(t) = hct;
      }
    }
    *h_out = std::move(h);
    if (cache) {
      cache->z = std::move(z);
      cache->r = std::move(r);
      cache->hc = std::move(hc);
    }
  }

  int in_dim_ = 0, hidden_ = 0;
  bool reverse_ = false;
  Mat<T> w_, u_, b_, gw_, gu_, gb_;
  std::vector<Cache> caches_;
};

// Bidirectional GRU: forward and reverse passes concatenated on the feature
// axis, so the output dim is twice the per-direction hidden size.
template <class T>
class BiGru {
 public:
  BiGru() = default;
  BiGru(int in_dim, int hidden) : fw_(in_dim, hidden, false), bw_(in_dim, hidden, true) {}

  void init(Rng& rng) {
    fw_.init(rng);
    bw_.init(rng);
  }

  Mat<T> infer(const Mat<T>& x) const {
    Mat<T> out(x.rows(), 2 * fw_.hidden());
    out.leftCols(fw_.hidden()) = fw_.infer(x);
    out.rightCols(fw_.hidden()) = bw_.infer(x);
    return out;
  }

  SeqBatch<T> infer(const SeqBatch<T>& xs) const {
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(infer(x));
    return out;
  }

  SeqBatch<T> forward(const SeqBatch<T>& xs, const Ctx&) {
    fw_.clear_caches();
    bw_.clear_caches();
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      Mat<T> y(x.rows(), 2 * fw_.hidden());
      y.leftCols(fw_.hidden()) = fw_.forward(x);
      y.rightCols(fw_.hidden()) = bw_.forward(x);
      out.push_back(std::move(y));
    }
    return out;
  }

  SeqBatch<T> backward(const SeqBatch<T>& dys) {
    SeqBatch<T> dxs;
    dxs.reserve(dys.size());
    const int hd = fw_.hidden();
    for (std::size_t i = 0; i < dys.size(); ++i) {
      Mat<T> dx = fw_.backward(dys[i].leftCols(hd), i);
      dx += bw_.backward(dys[i].rightCols(hd), i);
      dxs.push_back(std::move(dx));
    }
    fw_.clear_caches();
    bw_.clear_caches();
    return dxs;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    fw_.collect(prefix + "/fw", out);
    bw_.collect(prefix + "/bw", out);
  }

  int out_dim() const { return 2 * fw_.hidden(); }
  int in_dim() const { return fw_.in_dim(); }

 private:
  GruDir<T> fw_, bw_;
};

// Single-head scaled dot-product self-attention with a residual connection:
//   out = x + softmax(Q K^T / sqrt(d)) V
// Q, K, V are learned square projections of the input.
template <class T>
class SelfAttention {
 public:
  SelfAttention() = default;
  explicit SelfAttention(int dim) : q_(dim, dim), k_(dim, dim), v_(dim, dim) {}

  void init(Rng& rng) {
    q_.init(rng);
    k_.init(rng);
    v_.init(rng);
  }

  Mat<T> infer(const Mat<T>& x) const {
    Mat<T> att;
    return apply(x, q_.infer(x), k_.infer(x), v_.infer(x), &att);
  }

  SeqBatch<T> infer(const SeqBatch<T>& xs) const {
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(infer(x));
    return out;
  }

  SeqBatch<T> forward(const SeqBatch<T>& xs, const Ctx& ctx) {
    caches_.clear();
    caches_.reserve(xs.size());
    SeqBatch<T> qs = q_.forward(xs, ctx);
    SeqBatch<T> ks = k_.forward(xs, ctx);
    SeqBatch<T> vs = v_.forward(xs, ctx);
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Cache c;
      c.q = std::move(qs[i]);
      c.k = std::move(ks[i]);
      c.v = std::move(vs[i]);
      out.push_back(apply(xs[i], c.q, c.k, c.v, &c.att));
      caches_.push_back(std::move(c));
    }
    return out;
  }

  SeqBatch<T> backward(const SeqBatch<T>& dys) {
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q_.out_dim())));
    SeqBatch<T> dq, dk, dv;
    SeqBatch<T> dxs;
    dxs.reserve(dys.size());
    for (std::size_t i = 0; i < dys.size(); ++i) {
      const Cache& c = caches_[i];
      const Mat<T>& dout = dys[i];
      dv.push_back(c.att.transpose() * dout);
      Mat<T> datt = dout * c.v.transpose();
      // Softmax backward, row-wise.
      Mat<T> ds = c.att.cwiseProduct(datt);
      Eigen::Matrix<T, Eigen::Dynamic, 1> row_dot = ds.rowwise().sum();
      ds = c.att.cwiseProduct(datt.colwise() - row_dot) * scale;
      dq.push_back(ds * c.k);
      dk.push_back(ds.transpose() * c.q);
      dxs.push_back(dout);  // residual path
    }
    SeqBatch<T> dx_q = q_.backward(dq);
    SeqBatch<T> dx_k = k_.backward(dk);
    SeqBatch<T> dx_v = v_.backward(dv);
    for (std::size_t i = 0; i < dxs.size(); ++i) dxs[i] += dx_q[i] + dx_k[i] + dx_v[i];
    caches_.clear();
    return dxs;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    q_.collect(prefix + "/q", out);
    k_.collect(prefix + "/k", out);
    v_.collect(prefix + "/v", out);
  }

  int dim() const { return q_.out_dim(); }

 private:
  struct Cache {
    Mat<T> q, k, v, att;
  };

  Mat<T> apply(const Mat<T>& x, const Mat<T>& q, const Mat<T>& k, const Mat<T>& v,
               Mat<T>* att_out) const {
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q_.out_dim())));
    Mat<T> s = q * k.transpose() * scale;
    if (!s.allFinite())
      fail(ErrorCategory::Numeric, "non-finite attention logits (sequence of " +
                                       std::to_string(x.rows()) + " frames)");
    // Row-wise max-subtracted softmax.
    Eigen::Matrix<T, Eigen::Dynamic, 1> row_max = s.rowwise().maxCoeff();
    Mat<T> e = (s.colwise() - row_max).array().exp().matrix();
    Eigen::Matrix<T, Eigen::Dynamic, 1> row_sum = e.rowwise().sum();
    Mat<T> att = (e.array().colwise() / row_sum.array()).matrix();
    Mat<T> out = x + att * v;
    *att_out = std::move(att);
    return out;
  }

  Dense<T> q_, k_, v_;
  std::vector<Cache> caches_;
};

// Exact 2x temporal upsampling. Default mode interpolates: even output frames
// copy the input frame, odd frames average the two neighbours (last frame
// repeated). Repeat mode duplicates every frame instead. The backward pass is
// the exact transpose of the chosen linear map.
template <class T>
class Upsample2x {
 public:
  Upsample2x() = default;
  explicit Upsample2x(bool repeat) : repeat_(repeat) {}

  Mat<T> apply(const Mat<T>& x) const {
    const Eigen::Index tn = x.rows();
    if (tn == 0) fail(ErrorCategory::EmptyInput, "upsample of an empty sequence");
    Mat<T> out(2 * tn, x.cols());
    for (Eigen::Index i = 0; i < tn; ++i) {
      out.row(2 * i) = x.row(i);
      if (!repeat_ && i + 1 < tn)
        out.row(2 * i + 1) = (x.row(i) + x.row(i + 1)) * T(0.5);
      else
        out.row(2 * i + 1) = x.row(i);
    }
    return out;
  }

  SeqBatch<T> infer(const SeqBatch<T>& xs) const {
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(apply(x));
    return out;
  }

  SeqBatch<T> forward(const SeqBatch<T>& xs, const Ctx&) { return infer(xs); }

  SeqBatch<T> backward(const SeqBatch<T>& dys) {
    SeqBatch<T> dxs;
    dxs.reserve(dys.size());
    for (const auto& dy : dys) {
      const Eigen::Index tn = dy.rows() / 2;
      Mat<T> dx = Mat<T>::Zero(tn, dy.cols());
      for (Eigen::Index i = 0; i < tn; ++i) {
        dx.row(i) += dy.row(2 * i);
        if (!repeat_ && i + 1 < tn) {
          dx.row(i) += dy.row(2 * i + 1) * T(0.5);
          dx.row(i + 1) += dy.row(2 * i + 1) * T(0.5);
        } else {
          dx.row(i) += dy.row(2 * i + 1);
        }
      }
      dxs.push_back(std::move(dx));
    }
    return dxs;
  }

  bool repeat() const { return repeat_; }

 private:
  bool repeat_ = false;
};

// Learned convex combination of per-frame feature layers. Input rows pack the
// layers contiguously: [layer0 | layer1 | ...], each of width dim. The weights
// are a softmax over one logit per layer unless raw mode is requested.
template <class T>
class LayerFusion {
 public:
  LayerFusion() = default;
  LayerFusion(int layers, int dim, bool raw = false)
      : layers_(layers), dim_(dim), raw_(raw), logits_(Mat<T>::Zero(1, layers)),
        glogits_(Mat<T>::Zero(1, layers)) {
    if (layers < 2) fail(ErrorCategory::InvalidParameter, "layer fusion needs at least 2 layers");
  }

  void init(Rng&) { logits_.setZero(); }

  Row<T> weights() const {
    if (raw_) return logits_.row(0);
    Row<T> e = (logits_.row(0).array() - logits_.row(0).maxCoeff()).exp().matrix();
    return e / e.sum();
  }

  SeqBatch<T> infer(const SeqBatch<T>& xs) const {
    const Row<T> w = weights();
    SeqBatch<T> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      check_width(x);
      Mat<T> y = Mat<T>::Zero(x.rows(), dim_);
      for (int l = 0; l < layers_; ++l) y += w(l) * x.block(0, l * dim_, x.rows(), dim_);
      out.push_back(std::move(y));
    }
    return out;
  }

  SeqBatch<T> forward(const SeqBatch<T>& xs, const Ctx&) {
    cache_ = xs;
    return infer(xs);
  }

  SeqBatch<T> backward(const SeqBatch<T>& dys) {
    const Row<T> w = weights();
    Row<T> s = Row<T>::Zero(layers_);  // per-layer correlation with upstream grad
    SeqBatch<T> dxs;
    dxs.reserve(dys.size());
    for (std::size_t i = 0; i < dys.size(); ++i) {
      const Mat<T>& x = cache_[i];
      const Mat<T>& dy = dys[i];
      Mat<T> dx(x.rows(), x.cols());
      for (int l = 0; l < layers_; ++l) {
        s(l) += x.block(0, l * dim_, x.rows(), dim_).cwiseProduct(dy).sum();
        dx.block(0, l * dim_, x.rows(), dim_) = w(l) * dy;
      }
      dxs.push_back(std::move(dx));
    }
    if (raw_) {
      glogits_.row(0) += s;
    } else {
      const T dot = (w.array() * s.array()).sum();
      glogits_.row(0) += (w.array() * (s.array() - dot)).matrix();
    }
    cache_.clear();
    return dxs;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + "/logits", &logits_, &glogits_});
  }

  int layers() const { return layers_; }
  int dim() const { return dim_; }
  bool raw() const { return raw_; }

 private:
  void check_width(const Mat<T>& x) const {
    if (x.cols() != static_cast<Eigen::Index>(layers_) * dim_)
      fail(ErrorCategory::Shape, "layer fusion expects " + std::to_string(layers_ * dim_) +
                                     " columns, got " + std::to_string(x.cols()));
  }

  int layers_ = 0, dim_ = 0;
  bool raw_ = false;
  Mat<T> logits_, glogits_;
  SeqBatch<T> cache_;
};

}  // namespace si::nn
