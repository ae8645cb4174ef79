#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "si/nn/layers.hpp"
#include "si/waveform.hpp"

namespace si::models {

enum class Arch { NasalSi, StlSi, MtlSi };

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);

// Describes a model completely enough to rebuild it: architecture, width
// scaling, input feature geometry, output channel names, and the init seed.
struct ModelSpec {
  Arch arch = Arch::StlSi;
  double width_scale = 1.0;
  std::string frontend = "mel40";  // feature source identifier
  int feat_layers = 1;
  int feat_dim = 40;
  std::uint64_t seed = 1;
  bool fusion_raw = false;      // raw (non-softmax) layer weighting
  bool upsample_repeat = false; // frame repetition instead of interpolation
  double dropout = 0.3;
  // Output channels. MtlSi: the first kOralChannelCount entries are the oral
  // head, the remainder the source head. Ablation variants shrink the list.
  std::vector<std::string> channels;

  void set_default_channels();
  void validate() const;
  int scaled(int base) const {
    if (!(width_scale > 0)) fail(ErrorCategory::Config, "width_scale must be positive");
    return std::max(1, static_cast<int>(std::llround(base * width_scale)));
  }
  int input_dim() const { return feat_layers * feat_dim; }
  int output_dim() const { return static_cast<int>(channels.size()); }
  int oral_head_dim() const;    // MtlSi head-1 width (0 for other archs)
  int source_head_dim() const;  // MtlSi head-2 width (0 for other archs)

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

inline constexpr int kOralChannelCount = 6;

// A full architecture instance: layers, seeded parameters, and exact
// backprop. Eval-mode inference is const and re-entrant; forward/backward
// carry per-call caches and must not be shared across threads.
template <class T>
class Model {
 public:
  explicit Model(const ModelSpec& spec) : spec_(spec) {
    if (spec_.channels.empty()) spec_.set_default_channels();
    spec_.validate();
    build();
    init();
  }

  const ModelSpec& spec() const { return spec_; }

  nn::SeqBatch<T> infer(const nn::SeqBatch<T>& xs) const {
    check_input(xs);
    nn::SeqBatch<T> h = has_fusion_ ? fusion_.infer(xs) : xs;
    for (const auto& gru : grus_) h = gru.infer(h);
    if (has_attn_) h = attn_.infer(h);
    h = act_.infer(trunk_.infer(h));
    h = up_.infer(h);
    if (has_bn_) h = bn_.infer(h);
    nn::SeqBatch<T> out = head1_.infer(h);
    if (has_head2_) {
      nn::SeqBatch<T> out2 = head2_.infer(h);
      for (std::size_t i = 0; i < out.size(); ++i) {
        nn::Mat<T> cat(out[i].rows(), out[i].cols() + out2[i].cols());
        cat.leftCols(out[i].cols()) = out[i];
        cat.rightCols(out2[i].cols()) = out2[i];
        out[i] = std::move(cat);
      }
    }
    return out;
  }

  nn::Mat<T> infer_one(const nn::Mat<T>& x) const {
    nn::SeqBatch<T> xs{x};
    return infer(xs)[0];
  }

  nn::SeqBatch<T> forward(const nn::SeqBatch<T>& xs, const nn::Ctx& ctx) {
    check_input(xs);
    nn::SeqBatch<T> h = has_fusion_ ? fusion_.forward(xs, ctx) : xs;
    for (std::size_t i = 0; i < grus_.size(); ++i) {
      h = grus_[i].forward(h, ctx);
      h = drops_[i].forward(h, ctx);
    }
    if (has_attn_) h = attn_.forward(h, ctx);
    h = act_.forward(trunk_.forward(h, ctx), ctx);
    h = up_.forward(h, ctx);
    if (has_bn_) {
      h = bn_.forward(h, ctx);
      h = head_drop_.forward(h, ctx);
    }
    nn::SeqBatch<T> out = head1_.forward(h, ctx);
    if (has_head2_) {
      nn::SeqBatch<T> out2 = head2_.forward(h, ctx);
      for (std::size_t i = 0; i < out.size(); ++i) {
        nn::Mat<T> cat(out[i].rows(), out[i].cols() + out2[i].cols());
        cat.leftCols(out[i].cols()) = out[i];
        cat.rightCols(out2[i].cols()) = out2[i];
        out[i] = std::move(cat);
      }
    }
    return out;
  }

  // dys columns follow spec().channels; the MTL head split is internal.
  nn::SeqBatch<T> backward(const nn::SeqBatch<T>& dys) {
    nn::SeqBatch<T> dh;
    if (has_head2_) {
      const int c1 = head1_.out_dim();
      const int c2 = head2_.out_dim();
      nn::SeqBatch<T> d1, d2;
      d1.reserve(dys.size());
      d2.reserve(dys.size());
      for (const auto& dy : dys) {
        d1.push_back(dy.leftCols(c1));
        d2.push_back(dy.rightCols(c2));
      }
      dh = head1_.backward(d1);
      nn::SeqBatch<T> dh2 = head2_.backward(d2);
      for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dh2[i];
    } else {
      dh = head1_.backward(dys);
    }
    if (has_bn_) {
      dh = head_drop_.backward(dh);
      dh = bn_.backward(dh);
    }
    dh = up_.backward(dh);
    dh = trunk_.backward(act_.backward(dh));
    if (has_attn_) dh = attn_.backward(dh);
    for (std::size_t i = grus_.size(); i-- > 0;) {
      dh = drops_[i].backward(dh);
      dh = grus_[i].backward(dh);
    }
    if (has_fusion_) dh = fusion_.backward(dh);
    return dh;
  }

  nn::ParamList<T> params() {
    nn::ParamList<T> out;
    if (has_fusion_) fusion_.collect("fusion", out);
    for (std::size_t i = 0; i < grus_.size(); ++i)
      grus_[i].collect("gru" + std::to_string(i + 1), out);
    if (has_attn_) attn_.collect("attn", out);
    trunk_.collect("trunk", out);
    if (has_bn_) bn_.collect("bn", out);
    head1_.collect("head1", out);
    if (has_head2_) head2_.collect("head2", out);
    return out;
  }

  std::size_t trainable_param_count() { return nn::param_count(params(), true); }

 private:
  void build() {
    const ModelSpec& s = spec_;
    has_fusion_ = s.feat_layers > 1;
    if (has_fusion_) fusion_ = nn::LayerFusion<T>(s.feat_layers, s.feat_dim, s.fusion_raw);
    const int in = s.feat_dim;
    std::vector<int> hiddens;
    if (s.arch == Arch::NasalSi)
      hiddens = {s.scaled(128), s.scaled(128)};
    else
      hiddens = {s.scaled(512), s.scaled(512), s.scaled(256)};
    int cur = in;
    for (int hd : hiddens) {
      grus_.emplace_back(cur, hd);
      drops_.emplace_back(s.dropout);
      cur = 2 * hd;
    }
    has_attn_ = s.arch == Arch::NasalSi;
    if (has_attn_) attn_ = nn::SelfAttention<T>(cur);
    trunk_ = nn::Dense<T>(cur, s.scaled(128));
    up_ = nn::Upsample2x<T>(s.upsample_repeat);
    has_bn_ = s.arch != Arch::NasalSi;
    if (has_bn_) {
      bn_ = nn::BatchNorm<T>(s.scaled(128));
      head_drop_ = nn::Dropout<T>(s.dropout);
    }
    has_head2_ = s.arch == Arch::MtlSi;
    const int out1 = has_head2_ ? s.oral_head_dim() : s.output_dim();
    head1_ = nn::Dense<T>(s.scaled(128), out1);
    if (has_head2_) head2_ = nn::Dense<T>(s.scaled(128), s.source_head_dim());
  }

  // Fixed init order so architectures sharing a trunk prefix draw identical
  // parameters from the same seed.
  void init() {
    nn::Rng rng(spec_.seed);
    if (has_fusion_) fusion_.init(rng);
    for (auto& g : grus_) g.init(rng);
    if (has_attn_) attn_.init(rng);
    trunk_.init(rng);
    head1_.init(rng);
    if (has_head2_) head2_.init(rng);
  }

  void check_input(const nn::SeqBatch<T>& xs) const {
    if (xs.empty()) fail(ErrorCategory::EmptyInput, "model input batch is empty");
    for (const auto& x : xs) {
      if (x.rows() == 0) fail(ErrorCategory::EmptyInput, "model input sequence has no frames");
      if (x.cols() != spec_.input_dim())
        fail(ErrorCategory::Shape,
             "model expects " + std::to_string(spec_.input_dim()) + " input columns (" +
                 std::to_string(spec_.feat_layers) + " layers x " +
                 std::to_string(spec_.feat_dim) + "), got " + std::to_string(x.cols()));
    }
  }

  ModelSpec spec_;
  bool has_fusion_ = false, has_attn_ = false, has_bn_ = false, has_head2_ = false;
  nn::LayerFusion<T> fusion_;
  std::vector<nn::BiGru<T>> grus_;
  std::vector<nn::Dropout<T>> drops_;
  nn::SelfAttention<T> attn_;
  nn::Dense<T> trunk_;
  nn::Tanh<T> act_;
  nn::Upsample2x<T> up_;
  nn::BatchNorm<T> bn_;
  nn::Dropout<T> head_drop_;
  nn::Dense<T> head1_, head2_;
};

}  // namespace si::models
