#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "si/checkpoint.hpp"
#include "si/dataset.hpp"
#include "si/loss.hpp"
#include "si/manifest.hpp"
#include "si/model.hpp"

using namespace si;
using namespace si::models;

namespace {

nn::SeqBatch<double> random_batch(const ModelSpec& spec, const std::vector<int>& frames,
                                  std::uint64_t seed) {
  nn::Rng rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  nn::SeqBatch<double> xs;
  for (int f : frames) {
    nn::Mat<double> x(f, spec.input_dim());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = d(rng);
    xs.push_back(std::move(x));
  }
  return xs;
}

template <class Fn>
ErrorCategory thrown_category(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("expected an error");
  return ErrorCategory::Io;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

ModelSpec small_spec(Arch arch, double scale = 0.125) {
  ModelSpec s;
  s.arch = arch;
  s.width_scale = scale;
  s.frontend = "embed";
  s.feat_layers = 3;
  s.feat_dim = 8;
  s.seed = 11;
  s.set_default_channels();
  return s;
}

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("architecture names round-trip and bad ones are rejected") {
  for (Arch a : {Arch::NasalSi, Arch::StlSi, Arch::MtlSi})
    CHECK(arch_from_string(to_string(a)) == a);
  CHECK(thrown_category([] { arch_from_string("bert"); }) == ErrorCategory::Config);
}

TEST_CASE("default output channels per architecture") {
  ModelSpec nasal;
  nasal.arch = Arch::NasalSi;
  nasal.set_default_channels();
  CHECK(nasal.channels == std::vector<std::string>{"VP", "EGGenv", "Per", "Ap", "F0"});

  ModelSpec stl;
  stl.arch = Arch::StlSi;
  stl.set_default_channels();
  CHECK(stl.channels == std::vector<std::string>{"LA", "LP", "TBCL", "TBCD", "TTCL", "TTCD",
                                                 "VP", "Per", "Ap", "F0"});

  ModelSpec mtl;
  mtl.arch = Arch::MtlSi;
  mtl.set_default_channels();
  CHECK(mtl.channels == stl.channels);
  CHECK(mtl.oral_head_dim() == 6);
  CHECK(mtl.source_head_dim() == 4);
}

TEST_CASE("model spec json round-trips") {
  ModelSpec s = small_spec(Arch::MtlSi);
  s.fusion_raw = true;
  s.upsample_repeat = true;
  s.dropout = 0.25;
  const ModelSpec t = ModelSpec::from_json(s.to_json());
  CHECK(t.to_json() == s.to_json());
  nlohmann::json bad = s.to_json();
  bad.erase("seed");
  CHECK(thrown_category([&] { ModelSpec::from_json(bad); }) == ErrorCategory::Format);
}

TEST_CASE("spec validation rejects broken configurations") {
  ModelSpec s = small_spec(Arch::MtlSi);
  s.width_scale = 0.0;
  CHECK(thrown_category([&] { s.validate(); }) == ErrorCategory::Config);

  ModelSpec t = small_spec(Arch::MtlSi);
  t.channels = {"LA", "LP"};
  CHECK(thrown_category([&] { t.validate(); }) == ErrorCategory::Config);

  ModelSpec u = small_spec(Arch::NasalSi);
  u.channels = {"VP", "Per"};
  CHECK(thrown_category([&] { u.validate(); }) == ErrorCategory::Config);
}

TEST_CASE("width scaling reaches the layer shapes") {
  // Full-size trunk dense is 128 wide; at 1/8 it is 16.
  Model<float> m(small_spec(Arch::StlSi, 0.125));
  auto params = m.params();
  for (const auto& p : params) {
    if (p.name == "gru1/fw/w") {
      CHECK(p.value->rows() == 8);        // fused feature dim
      CHECK(p.value->cols() == 3 * 64);   // 512/8 per direction
    }
    if (p.name == "trunk/w") {
      CHECK(p.value->rows() == 2 * 32);   // 256/8 per direction, both directions
      CHECK(p.value->cols() == 16);
    }
  }
  CHECK(small_spec(Arch::StlSi, 1.0).scaled(512) == 512);
  CHECK(small_spec(Arch::StlSi, 0.125).scaled(512) == 64);
  CHECK(small_spec(Arch::StlSi, 0.001).scaled(128) == 1);  // floors at 1
}

TEST_CASE("the 1/8 nasal model has exactly the hand-counted parameters") {
  ModelSpec s;
  s.arch = Arch::NasalSi;
  s.width_scale = 0.125;
  s.frontend = "mel40";
  s.feat_layers = 1;
  s.feat_dim = 40;
  s.set_default_channels();
  Model<float> m(s);
  // gru1: 2*(40*48 + 16*48 + 48); gru2 input 32: 2*(32*48 + 16*48 + 48);
  // attention: 3*(32*32 + 32); trunk: 32*16 + 16; head: 16*5 + 5.
  const std::size_t want = 2 * (40 * 48 + 16 * 48 + 48) + 2 * (32 * 48 + 16 * 48 + 48) +
                           3 * (32 * 32 + 32) + (32 * 16 + 16) + (16 * 5 + 5);
  CHECK(m.trainable_param_count() == want);
}

TEST_CASE("stl and mtl have identical parameter counts, nasal differs") {
  CHECK(Model<float>(small_spec(Arch::StlSi)).trainable_param_count() ==
        Model<float>(small_spec(Arch::MtlSi)).trainable_param_count());
  CHECK(Model<float>(small_spec(Arch::NasalSi)).trainable_param_count() !=
        Model<float>(small_spec(Arch::StlSi)).trainable_param_count());
}

TEST_CASE("same seed means identical parameters, different seed differs") {
  Model<float> a(small_spec(Arch::MtlSi)), b(small_spec(Arch::MtlSi));
  auto pa = a.params(), pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK((*pa[i].value - *pb[i].value).cwiseAbs().maxCoeff() == 0.0f);

  ModelSpec other = small_spec(Arch::MtlSi);
  other.seed = 12;
  Model<float> c(other);
  auto pc = c.params();
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if ((*pa[i].value - *pc[i].value).cwiseAbs().maxCoeff() > 0.0f) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("inference doubles the frame rate with the spec'd channel count") {
  Model<float> nasal([] {
    ModelSpec s;
    s.arch = Arch::NasalSi;
    s.width_scale = 1.0;  // full size
    s.frontend = "mel40";
    s.feat_layers = 1;
    s.feat_dim = 40;
    s.set_default_channels();
    return s;
  }());
  nn::Mat<float> x = nn::Mat<float>::Random(100, 40);
  const nn::Mat<float> y = nasal.infer_one(x);
  CHECK(y.rows() == 200);
  CHECK(y.cols() == 5);

  Model<float> mtl(small_spec(Arch::MtlSi));
  nn::Mat<float> x2 = nn::Mat<float>::Random(7, 24);
  const nn::Mat<float> y2 = mtl.infer_one(x2);
  CHECK(y2.rows() == 14);
  CHECK(y2.cols() == 10);
}

TEST_CASE("input batches are validated") {
  Model<float> m(small_spec(Arch::StlSi));
  CHECK(thrown_category([&] { m.infer(nn::SeqBatch<float>{}); }) ==
        ErrorCategory::EmptyInput);
  nn::Mat<float> empty(0, 24);
  CHECK(thrown_category([&] { m.infer_one(empty); }) == ErrorCategory::EmptyInput);
  nn::Mat<float> wrong = nn::Mat<float>::Zero(5, 23);
  CHECK(thrown_category([&] { m.infer_one(wrong); }) == ErrorCategory::Shape);
}

TEST_CASE("eval-mode inference is repeatable and batch-independent") {
  Model<float> m(small_spec(Arch::MtlSi));
  nn::Mat<float> x = nn::Mat<float>::Random(9, 24);
  nn::Mat<float> x2 = nn::Mat<float>::Random(6, 24);
  const nn::Mat<float> alone = m.infer_one(x);
  const nn::SeqBatch<float> both = m.infer(nn::SeqBatch<float>{x, x2});
  CHECK((alone - m.infer_one(x)).cwiseAbs().maxCoeff() == 0.0f);
  CHECK((alone - both[0]).cwiseAbs().maxCoeff() == 0.0f);
}

// With the source head silenced, the multi-task model must push exactly the
// single-task-of-6 gradient into the shared trunk: same seed, same draws,
// same loss surface.
TEST_CASE("silencing the source head reduces mtl to stl over the oral channels") {
  ModelSpec stl6 = small_spec(Arch::StlSi);
  stl6.channels.assign(kOralTvNames.begin(), kOralTvNames.end());
  ModelSpec mtl = small_spec(Arch::MtlSi);

  Model<double> a(stl6);
  Model<double> b(mtl);

  const nn::SeqBatch<double> xs = random_batch(stl6, {6, 5}, 99);
  nn::Rng tgt_rng(123);
  std::normal_distribution<double> d(0.0, 0.5);
  nn::SeqBatch<double> targets6;
  for (const auto& x : xs) {
    nn::Mat<double> t(2 * x.rows(), 6);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = std::tanh(d(tgt_rng));
    targets6.push_back(std::move(t));
  }

  const nn::Ctx ctx{nn::Mode::GradCheck, nullptr};
  const train::LossConfig lc{0.8};

  auto pa = a.params();
  nn::zero_grads(pa);
  nn::SeqBatch<double> pred6 = a.forward(xs, ctx);
  nn::SeqBatch<double> g6;
  train::combined_loss(pred6, targets6, lc, &g6);
  a.backward(g6);

  auto pb = b.params();
  nn::zero_grads(pb);
  nn::SeqBatch<double> pred10 = b.forward(xs, ctx);
  nn::SeqBatch<double> pred_first6, g10;
  for (const auto& p : pred10) pred_first6.push_back(p.leftCols(6));
  train::combined_loss(pred_first6, targets6, lc, &g10);
  for (auto& g : g10) {
    nn::Mat<double> wide = nn::Mat<double>::Zero(g.rows(), 10);
    wide.leftCols(6) = g;
    g = wide;
  }
  b.backward(g10);

  // Shared parameters drew from the same seed in the same order.
  for (const auto& p : pa) {
    bool found = false;
    for (const auto& q : pb) {
      if (q.name != p.name) continue;
      found = true;
      CHECK((*p.value - *q.value).cwiseAbs().maxCoeff() == 0.0);
      if (p.grad && q.grad)
        CHECK((*p.grad - *q.grad).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(found);
  }
}

TEST_CASE("checkpoints round-trip weights, spec, metadata and optimizer bit for bit") {
  ModelSpec spec = small_spec(Arch::MtlSi);
  Model<float> m(spec);

  CheckpointMeta meta;
  meta.epochs_trained = 7;
  meta.best_epoch = 5;
  meta.train_loss_history = {0.9, 0.5, 0.4, 0.35, 0.3, 0.31, 0.32};
  meta.dev_loss_history = {0.8, 0.6, 0.5, 0.45, 0.42, 0.44, 0.43};
  meta.dev_mean_oral_history = {0.1, 0.4, 0.6, 0.7, 0.75, 0.74, 0.73};
  meta.opt_step = 77;
  meta.extra = {{"note", "round-trip"}};

  nn::Adam<float> opt(1e-3f);
  opt.attach(m.params());
  {  // take a few steps so the moments are non-trivial
    auto params = m.params();
    for (int k = 0; k < 3; ++k) {
      for (auto& p : params)
        if (p.grad) p.grad->setRandom();
      opt.step(params);
    }
  }

  const auto p1 = temp_file("ck1.sinv");
  save_checkpoint(p1.string(), m, meta, &opt);

  LoadedCheckpoint ck = load_checkpoint(p1.string());
  CHECK(ck.spec.to_json() == spec.to_json());
  CHECK(ck.meta.epochs_trained == 7);
  CHECK(ck.meta.best_epoch == 5);
  CHECK(ck.meta.opt_step == 77);
  CHECK(ck.meta.dev_loss_history == meta.dev_loss_history);
  CHECK(ck.meta.extra.at("note") == "round-trip");

  auto pm = m.params();
  auto pl = ck.model->params();
  REQUIRE(pm.size() == pl.size());
  for (std::size_t i = 0; i < pm.size(); ++i) {
    CHECK(pm[i].name == pl[i].name);
    CHECK((*pm[i].value - *pl[i].value).cwiseAbs().maxCoeff() == 0.0f);
  }

  nn::Adam<float> opt2(1e-3f);
  opt2.attach(ck.model->params());
  restore_optimizer(opt2, ck);
  REQUIRE(opt2.slot_count() == opt.slot_count());
  for (std::size_t i = 0; i < opt.slot_count(); ++i) {
    CHECK((opt.first_moment(i) - opt2.first_moment(i)).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((opt.second_moment(i) - opt2.second_moment(i)).cwiseAbs().maxCoeff() == 0.0f);
  }

  // Saving the loaded model reproduces the file byte for byte.
  const auto p2 = temp_file("ck2.sinv");
  nn::Adam<float> opt3(1e-3f);
  opt3.attach(ck.model->params());
  restore_optimizer(opt3, ck);
  save_checkpoint(p2.string(), *ck.model, ck.meta, &opt3);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("loaded models predict exactly like the saved ones") {
  Model<float> m(small_spec(Arch::NasalSi));
  const auto p = temp_file("ck3.sinv");
  save_checkpoint(p.string(), m, {});
  LoadedCheckpoint ck = load_checkpoint(p.string());
  nn::Mat<float> x = nn::Mat<float>::Random(8, 24);
  CHECK((m.infer_one(x) - ck.model->infer_one(x)).cwiseAbs().maxCoeff() == 0.0f);

  // No optimizer was stored, so there is nothing to restore.
  nn::Adam<float> opt(1e-3f);
  opt.attach(ck.model->params());
  CHECK(thrown_category([&] { restore_optimizer(opt, ck); }) == ErrorCategory::Format);
}

TEST_CASE("corrupted checkpoints are refused with format errors") {
  Model<float> m(small_spec(Arch::StlSi));
  const auto p = temp_file("ck4.sinv");
  save_checkpoint(p.string(), m, {});

  {  // bad magic
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOPE", 4);
  }
  CHECK(thrown_category([&] { load_checkpoint(p.string()); }) == ErrorCategory::Format);

  save_checkpoint(p.string(), m, {});
  {  // bad version
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const std::uint32_t v = 42;
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  CHECK(thrown_category([&] { load_checkpoint(p.string()); }) == ErrorCategory::Format);

  save_checkpoint(p.string(), m, {});
  std::filesystem::resize_file(p, std::filesystem::file_size(p) - 13);
  CHECK(thrown_category([&] { load_checkpoint(p.string()); }) == ErrorCategory::Format);

  save_checkpoint(p.string(), m, {});
  {  // corrupt the first tensor's name -> unknown parameter
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    std::uint32_t header_len = 0;
    f.seekg(8);
    f.read(reinterpret_cast<char*>(&header_len), 4);
    f.seekp(12 + static_cast<std::streamoff>(header_len) + 4 + 2);
    f.write("X", 1);
  }
  CHECK(thrown_category([&] { load_checkpoint(p.string()); }) == ErrorCategory::Format);

  CHECK(thrown_category([] { load_checkpoint("/nonexistent.sinv"); }) == ErrorCategory::Io);
}

TEST_CASE("frontend and geometry compatibility are enforced") {
  ModelSpec spec = small_spec(Arch::StlSi);  // embed 3x8
  train::Manifest mf;
  mf.frontend = "mel40";
  mf.feat_layers = 1;
  mf.feat_dim = 40;
  CHECK(thrown_category([&] { train::check_frontend_compatible(spec, mf); }) ==
        ErrorCategory::Config);

  train::Manifest mf2;
  mf2.frontend = "embed";
  mf2.feat_layers = 3;
  mf2.feat_dim = 10;  // dim mismatch
  CHECK(thrown_category([&] { train::check_frontend_compatible(spec, mf2); }) ==
        ErrorCategory::Config);

  train::Manifest ok;
  ok.frontend = "embed";
  ok.feat_layers = 3;
  ok.feat_dim = 8;
  train::check_frontend_compatible(spec, ok);  // no throw
}
