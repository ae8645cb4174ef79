#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "si/nn/adam.hpp"
#include "si/nn/gradcheck.hpp"
#include "si/nn/layers.hpp"

using namespace si::nn;

namespace {

Mat<double> random_mat(int rows, int cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Mat<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = d(rng);
  return m;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

template <class Fn>
si::ErrorCategory thrown_category(Fn&& fn) {
  try {
    fn();
  } catch (const si::Error& e) {
    return e.category();
  }
  FAIL("expected an error");
  return si::ErrorCategory::Io;
}

template <class L>
concept HasParams = requires(L l, ParamList<double>& out) { l.collect("x", out); };

// Finite-difference check of a single layer under the quadratic readout
// loss = 0.5*sum(y^2), over parameters and inputs.
template <class L>
GradCheckReport check_layer(L& layer, SeqBatch<double> xs) {
  ParamList<double> params;
  if constexpr (HasParams<L>) layer.collect("p", params);
  SeqBatch<double> input_grads;
  for (const auto& x : xs) input_grads.push_back(Mat<double>::Zero(x.rows(), x.cols()));
  const Ctx ctx{Mode::GradCheck, nullptr};

  auto fn = [&]() {
    zero_grads(params);
    for (auto& g : input_grads) g.setZero();
    SeqBatch<double> ys = layer.forward(xs, ctx);
    double loss = 0.0;
    for (const auto& y : ys) loss += 0.5 * y.squaredNorm();
    SeqBatch<double> dxs = layer.backward(ys);
    for (std::size_t i = 0; i < dxs.size(); ++i) input_grads[i] = dxs[i];
    return loss;
  };

  std::vector<GcVar> vars;
  for (const auto& p : params)
    if (p.grad) vars.push_back(gc_var(p));
  for (std::size_t i = 0; i < xs.size(); ++i)
    vars.push_back(gc_var("x" + std::to_string(i), xs[i], input_grads[i]));
  return grad_check(vars, fn);
}

void set_param(ParamList<double>& params, const std::string& name, const Mat<double>& v) {
  for (auto& p : params)
    if (p.name == name) {
      *p.value = v;
      return;
    }
  FAIL("no parameter named ", name);
}

Mat<double> get_param(ParamList<double>& params, const std::string& name) {
  for (auto& p : params)
    if (p.name == name) return *p.value;
  FAIL("no parameter named ", name);
  return {};
}

}  // namespace

TEST_CASE("gru cell follows the update-gate convention, checked by hand") {
  GruDir<double> gru(1, 1, false);
  ParamList<double> params;
  gru.collect("g", params);
  const double wz = 0.4, wr = -0.3, wh = 0.25;
  const double uz = 0.2, ur = 0.5, uh = -0.6;
  const double bz = 0.1, br = -0.2, bh = 0.05;
  Mat<double> w(1, 3), u(1, 3), b(1, 3);
  w << wz, wr, wh;
  u << uz, ur, uh;
  b << bz, br, bh;
  set_param(params, "g/w", w);
  set_param(params, "g/u", u);
  set_param(params, "g/b", b);

  const double x0 = 0.7, x1 = -1.1;
  Mat<double> x(2, 1);
  x << x0, x1;

  // t = 0 (h_prev = 0): reset has nothing to gate.
  const double z0 = sigmoid(wz * x0 + bz);
  const double hc0 = std::tanh(wh * x0 + bh);
  const double h0 = z0 * hc0;
  // t = 1: reset scales h_prev inside the candidate's recurrent term.
  const double z1 = sigmoid(wz * x1 + uz * h0 + bz);
  const double r1 = sigmoid(wr * x1 + ur * h0 + br);
  const double hc1 = std::tanh(wh * x1 + uh * (r1 * h0) + bh);
  const double h1 = (1.0 - z1) * h0 + z1 * hc1;

  const Mat<double> h = gru.infer(x);
  CHECK(h(0, 0) == doctest::Approx(h0).epsilon(1e-12));
  CHECK(h(1, 0) == doctest::Approx(h1).epsilon(1e-12));
}

TEST_CASE("zero input with zero biases is a gru fixed point") {
  Rng rng(9);
  GruDir<double> gru(3, 4, false);
  gru.init(rng);  // biases stay zero
  const Mat<double> h = gru.infer(Mat<double>::Zero(6, 3));
  CHECK(h.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a reversed gru is the forward gru run on reversed time") {
  Rng rng(4);
  GruDir<double> fw(2, 3, false);
  fw.init(rng);
  GruDir<double> rv(2, 3, true);
  ParamList<double> pf, pr;
  fw.collect("g", pf);
  rv.collect("g", pr);
  for (std::size_t i = 0; i < pf.size(); ++i) *pr[i].value = *pf[i].value;

  const Mat<double> x = random_mat(5, 2, rng);
  const Mat<double> want = fw.infer(x.colwise().reverse()).colwise().reverse();
  const Mat<double> got = rv.infer(x);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bigru concatenates the two directions") {
  Rng rng(12);
  BiGru<double> bi(3, 2);
  bi.init(rng);
  ParamList<double> pb;
  bi.collect("b", pb);

  GruDir<double> fw(3, 2, false), rv(3, 2, true);
  ParamList<double> pf, pr;
  fw.collect("f", pf);
  rv.collect("r", pr);
  set_param(pf, "f/w", get_param(pb, "b/fw/w"));
  set_param(pf, "f/u", get_param(pb, "b/fw/u"));
  set_param(pf, "f/b", get_param(pb, "b/fw/b"));
  set_param(pr, "r/w", get_param(pb, "b/bw/w"));
  set_param(pr, "r/u", get_param(pb, "b/bw/u"));
  set_param(pr, "r/b", get_param(pb, "b/bw/b"));

  const Mat<double> x = random_mat(5, 3, rng);
  const Mat<double> y = bi.infer(x);
  REQUIRE(y.rows() == 5);
  REQUIRE(y.cols() == 4);
  CHECK((y.leftCols(2) - fw.infer(x)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((y.rightCols(2) - rv.infer(x)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention matches a scalar-loop reimplementation") {
  Rng rng(21);
  SelfAttention<double> attn(4);
  attn.init(rng);
  ParamList<double> params;
  attn.collect("a", params);
  const Mat<double> wq = get_param(params, "a/q/w"), bq = get_param(params, "a/q/b");
  const Mat<double> wk = get_param(params, "a/k/w"), bk = get_param(params, "a/k/b");
  const Mat<double> wv = get_param(params, "a/v/w"), bv = get_param(params, "a/v/b");

  const int tn = 6, d = 4;
  const Mat<double> x = random_mat(tn, d, rng);

  auto project = [&](const Mat<double>& w, const Mat<double>& b) {
    Mat<double> y = Mat<double>::Zero(tn, d);
    for (int t = 0; t < tn; ++t)
      for (int j = 0; j < d; ++j) {
        double acc = b(0, j);
        for (int i = 0; i < d; ++i) acc += x(t, i) * w(i, j);
        y(t, j) = acc;
      }
    return y;
  };
  const Mat<double> q = project(wq, bq), k = project(wk, bk), v = project(wv, bv);

  Mat<double> want = x;
  for (int t = 0; t < tn; ++t) {
    std::vector<double> s(tn);
    double mx = -1e300;
    for (int u = 0; u < tn; ++u) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += q(t, j) * k(u, j);
      s[u] = acc / std::sqrt(static_cast<double>(d));
      mx = std::max(mx, s[u]);
    }
    double z = 0.0;
    for (int u = 0; u < tn; ++u) z += std::exp(s[u] - mx);
    for (int u = 0; u < tn; ++u) {
      const double a = std::exp(s[u] - mx) / z;
      for (int j = 0; j < d; ++j) want(t, j) += a * v(u, j);
    }
  }

  const Mat<double> got = attn.infer(x);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("attention weights are a row-stochastic map") {
  Rng rng(22);
  SelfAttention<double> attn(3);
  attn.init(rng);
  ParamList<double> params;
  attn.collect("a", params);
  // Constant value projection exposes the attention row sums: out - x == 1.
  set_param(params, "a/v/w", Mat<double>::Zero(3, 3));
  set_param(params, "a/v/b", Mat<double>::Ones(1, 3));
  const Mat<double> x = random_mat(5, 3, rng);
  const Mat<double> y = attn.infer(x);
  CHECK((y - x - Mat<double>::Ones(5, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero queries and keys give uniform attention over time") {
  Rng rng(23);
  SelfAttention<double> attn(3);
  attn.init(rng);
  ParamList<double> params;
  attn.collect("a", params);
  set_param(params, "a/q/w", Mat<double>::Zero(3, 3));
  set_param(params, "a/q/b", Mat<double>::Zero(1, 3));
  set_param(params, "a/k/w", Mat<double>::Zero(3, 3));
  set_param(params, "a/k/b", Mat<double>::Zero(1, 3));
  Mat<double> ident = Mat<double>::Identity(3, 3);
  set_param(params, "a/v/w", ident);
  set_param(params, "a/v/b", Mat<double>::Zero(1, 3));

  const Mat<double> x = random_mat(7, 3, rng);
  const Row<double> mean = x.colwise().mean();
  const Mat<double> y = attn.infer(x);
  for (int t = 0; t < 7; ++t)
    CHECK((y.row(t) - x.row(t) - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("non-finite attention logits raise a numeric error") {
  Rng rng(24);
  SelfAttention<double> attn(2);
  attn.init(rng);
  Mat<double> x(3, 2);
  x << 1.0, 2.0, std::numeric_limits<double>::infinity(), 0.0, -1.0, 0.5;
  CHECK(thrown_category([&] { attn.infer(SeqBatch<double>{x}); }) ==
        si::ErrorCategory::Numeric);
}

TEST_CASE("upsampling interpolates midpoints and holds the final frame") {
  Mat<double> x(2, 1);
  x << 0.0, 1.0;
  Upsample2x<double> interp(false);
  const Mat<double> y = interp.infer(SeqBatch<double>{x})[0];
  REQUIRE(y.rows() == 4);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(1, 0) == 0.5);
  CHECK(y(2, 0) == 1.0);
  CHECK(y(3, 0) == 1.0);

  Upsample2x<double> rep(true);
  const Mat<double> z = rep.infer(SeqBatch<double>{x})[0];
  CHECK(z(0, 0) == 0.0);
  CHECK(z(1, 0) == 0.0);
  CHECK(z(2, 0) == 1.0);
  CHECK(z(3, 0) == 1.0);
}

TEST_CASE("upsample backward is the exact transpose of the forward map") {
  Rng rng(31);
  for (bool mode : {false, true}) {
    Upsample2x<double> up(mode);
    const Mat<double> x = random_mat(3, 2, rng);
    const Mat<double> y = random_mat(6, 2, rng);
    const Ctx ctx{Mode::GradCheck, nullptr};
    Upsample2x<double> up2 = up;
    const double lhs = (up2.forward(SeqBatch<double>{x}, ctx)[0].array() * y.array()).sum();
    const double rhs = (up2.backward(SeqBatch<double>{y})[0].array() * x.array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("dropout keeps about 70 percent and rescales survivors") {
  Dropout<double> drop(0.3);
  Rng rng(77);
  const Ctx train{Mode::Train, &rng};
  const Mat<double> x = Mat<double>::Ones(100, 100);
  Dropout<double> d2 = drop;
  const Mat<double> y = d2.forward(SeqBatch<double>{x}, train)[0];
  int zeros = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (y(i, j) == 0.0)
        ++zeros;
      else
        CHECK(y(i, j) == doctest::Approx(1.0 / 0.7).epsilon(1e-12));
    }
  const double frac = zeros / 1e4;
  CHECK(frac > 0.25);
  CHECK(frac < 0.35);

  // Backward uses the identical mask.
  const Mat<double> dx = d2.backward(SeqBatch<double>{Mat<double>::Ones(100, 100)})[0];
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      CHECK(dx(i, j) == (y(i, j) == 0.0 ? 0.0 : doctest::Approx(1.0 / 0.7).epsilon(1e-12)));
}

TEST_CASE("dropout is the identity outside train mode") {
  Dropout<double> drop(0.5);
  Rng rng(1);
  const Mat<double> x = random_mat(4, 3, rng);
  const Ctx gc{Mode::GradCheck, nullptr};
  CHECK((drop.forward(SeqBatch<double>{x}, gc)[0] - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((drop.infer(SeqBatch<double>{x})[0] - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(thrown_category([] { Dropout<double> bad(1.0); }) ==
        si::ErrorCategory::InvalidParameter);
  CHECK(thrown_category([] { Dropout<double> bad(-0.1); }) ==
        si::ErrorCategory::InvalidParameter);
}

TEST_CASE("batch norm standardizes the pooled batch and tracks running stats") {
  Rng rng(55);
  BatchNorm<double> bn(8);
  SeqBatch<double> xs{random_mat(30, 8, rng, 2.0), random_mat(50, 8, rng, 2.0)};
  for (auto& x : xs) x.array() += 3.0;

  // Reference pooled statistics (biased variance).
  const int n = 80;
  Row<double> mean = Row<double>::Zero(8), var = Row<double>::Zero(8);
  for (const auto& x : xs) mean += x.colwise().sum();
  mean /= n;
  for (const auto& x : xs)
    var += (x.rowwise() - mean).array().square().colwise().sum().matrix();
  var /= n;

  const Ctx train{Mode::Train, &rng};
  SeqBatch<double> ys = bn.forward(xs, train);

  Row<double> out_mean = Row<double>::Zero(8), out_var = Row<double>::Zero(8);
  for (const auto& y : ys) out_mean += y.colwise().sum();
  out_mean /= n;
  for (const auto& y : ys)
    out_var += (y.rowwise() - out_mean).array().square().colwise().sum().matrix();
  out_var /= n;
  for (int c = 0; c < 8; ++c) {
    CHECK(std::abs(out_mean(c)) < 1e-12);
    CHECK(out_var(c) == doctest::Approx(var(c) / (var(c) + 1e-5)).epsilon(1e-9));
  }

  ParamList<double> params;
  bn.collect("bn", params);
  const Mat<double> rm = get_param(params, "bn/run_mean");
  const Mat<double> rv = get_param(params, "bn/run_var");
  for (int c = 0; c < 8; ++c) {
    CHECK(rm(0, c) == doctest::Approx(0.01 * mean(c)).epsilon(1e-12));
    CHECK(rv(0, c) == doctest::Approx(0.99 * 1.0 + 0.01 * var(c)).epsilon(1e-12));
  }

  // Inference normalizes with the running statistics.
  const Mat<double> x = random_mat(4, 8, rng);
  const Mat<double> y = bn.infer(SeqBatch<double>{x})[0];
  for (int t = 0; t < 4; ++t)
    for (int c = 0; c < 8; ++c)
      CHECK(y(t, c) ==
            doctest::Approx((x(t, c) - rm(0, c)) / std::sqrt(rv(0, c) + 1e-5)).epsilon(1e-12));
}

TEST_CASE("batch norm running stats are state, not trainable parameters") {
  BatchNorm<double> bn(4);
  ParamList<double> params;
  bn.collect("bn", params);
  CHECK(param_count(params, true) == 8);    // gamma + beta
  CHECK(param_count(params, false) == 16);  // + run_mean + run_var
  CHECK(thrown_category([&] { bn.forward(SeqBatch<double>{}, Ctx{Mode::Train, nullptr}); }) ==
        si::ErrorCategory::EmptyInput);
}

TEST_CASE("adam's first step has a closed form") {
  Mat<double> value(1, 2), grad(1, 2);
  value << 0.5, -1.0;
  grad << 0.3, -0.2;
  ParamList<double> params{{"p", &value, &grad}};
  Adam<double> opt(0.01);
  opt.attach(params);
  opt.step(params);
  // After bias correction the first step is lr * g / (|g| + eps).
  CHECK(value(0, 0) == doctest::Approx(0.5 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
  CHECK(value(0, 1) == doctest::Approx(-1.0 + 0.01 * 0.2 / (0.2 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
  Mat<double> value(1, 3), grad = Mat<double>::Zero(1, 3);
  value << 1.0, -2.0, 3.0;
  ParamList<double> params{{"p", &value, &grad}};
  Adam<double> opt(0.1);
  opt.attach(params);
  for (int i = 0; i < 5; ++i) opt.step(params);
  CHECK(value(0, 0) == 1.0);
  CHECK(value(0, 1) == -2.0);
  CHECK(value(0, 2) == 3.0);
}

TEST_CASE("adam descends a quadratic") {
  Mat<double> value(1, 1), grad(1, 1);
  value << 1.0;
  ParamList<double> params{{"x", &value, &grad}};
  Adam<double> opt(0.05);
  opt.attach(params);
  for (int i = 0; i < 300; ++i) {
    grad(0, 0) = value(0, 0);
    opt.step(params);
  }
  CHECK(std::abs(value(0, 0)) < 0.05);
  CHECK(opt.step_count() == 300);
}

TEST_CASE("adam names the parameter with a non-finite gradient") {
  Mat<double> value(1, 1), grad(1, 1);
  value << 1.0;
  grad << std::nan("");
  ParamList<double> params{{"trunk/w", &value, &grad}};
  Adam<double> opt(0.01);
  opt.attach(params);
  try {
    opt.step(params);
    FAIL("expected an error");
  } catch (const si::Error& e) {
    CHECK(e.category() == si::ErrorCategory::Numeric);
    CHECK(std::string(e.what()).find("trunk/w") != std::string::npos);
  }
}

TEST_CASE("adam rejects a changed parameter set") {
  Mat<double> v1(1, 1), g1 = Mat<double>::Zero(1, 1);
  Mat<double> v2(1, 1), g2 = Mat<double>::Zero(1, 1);
  v1 << 1.0;
  v2 << 2.0;
  ParamList<double> one{{"a", &v1, &g1}};
  ParamList<double> two{{"a", &v1, &g1}, {"b", &v2, &g2}};
  Adam<double> opt(0.01);
  opt.attach(one);
  CHECK(thrown_category([&] { opt.step(two); }) == si::ErrorCategory::Shape);
}

TEST_CASE("orthogonal init produces orthogonal matrices, deterministically") {
  Rng rng(5);
  Mat<double> q(8, 8);
  init_orthogonal(q, rng);
  CHECK((q * q.transpose() - Mat<double>::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng2(5);
  Mat<double> q2(8, 8);
  init_orthogonal(q2, rng2);
  CHECK((q - q2).cwiseAbs().maxCoeff() == 0.0);

  Mat<double> rect(3, 4);
  CHECK(thrown_category([&] { init_orthogonal(rect, rng); }) == si::ErrorCategory::Shape);
}

TEST_CASE("dense layer gradients are exact") {
  Rng rng(101);
  Dense<double> dense(4, 3);
  dense.init(rng);
  const GradCheckReport rep =
      check_layer(dense, {random_mat(5, 4, rng), random_mat(3, 4, rng)});
  CHECK(rep.max_rel_err < 1e-7);
}

TEST_CASE("tanh gradients are exact") {
  Rng rng(102);
  Tanh<double> act;
  const GradCheckReport rep = check_layer(act, {random_mat(5, 3, rng)});
  CHECK(rep.max_rel_err < 1e-7);
}

TEST_CASE("bigru gradients survive finite differences on a ragged batch") {
  Rng rng(103);
  BiGru<double> bi(3, 2);
  bi.init(rng);
  const GradCheckReport rep =
      check_layer(bi, {random_mat(5, 3, rng), random_mat(4, 3, rng)});
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("attention gradients survive finite differences") {
  Rng rng(104);
  SelfAttention<double> attn(4);
  attn.init(rng);
  const GradCheckReport rep =
      check_layer(attn, {random_mat(6, 4, rng), random_mat(3, 4, rng)});
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("batch norm gradients cover the pooled-statistics paths") {
  Rng rng(105);
  BatchNorm<double> bn(5);
  const GradCheckReport rep =
      check_layer(bn, {random_mat(7, 5, rng), random_mat(4, 5, rng)});
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("upsample gradients are exact in both modes") {
  Rng rng(106);
  for (bool mode : {false, true}) {
    Upsample2x<double> up(mode);
    const GradCheckReport rep = check_layer(up, {random_mat(4, 3, rng)});
    CHECK(rep.max_rel_err < 1e-7);
  }
}

TEST_CASE("layer fusion gradients are exact in softmax and raw modes") {
  Rng rng(107);
  for (bool raw : {false, true}) {
    LayerFusion<double> fusion(3, 4, raw);
    ParamList<double> params;
    fusion.collect("f", params);
    Mat<double> logits(1, 3);
    logits << 0.3, -0.2, 0.5;  // move off the symmetric zero point
    set_param(params, "f/logits", logits);
    const GradCheckReport rep =
        check_layer(fusion, {random_mat(5, 12, rng), random_mat(3, 12, rng)});
    CHECK(rep.max_rel_err < 1e-7);
  }
}

TEST_CASE("softmax fusion weights form a convex combination") {
  LayerFusion<double> fusion(3, 2);
  ParamList<double> params;
  fusion.collect("f", params);
  Mat<double> logits(1, 3);
  logits << 1.0, 0.0, -1.0;
  set_param(params, "f/logits", logits);
  const Row<double> w = fusion.weights();
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(w(i) > 0.0);
  CHECK(w(0) > w(1));
  CHECK(w(1) > w(2));

  // Equal logits average the layers exactly.
  LayerFusion<double> even(2, 2);
  Mat<double> x(1, 4);
  x << 1.0, 2.0, 3.0, 4.0;
  const Mat<double> y = even.infer(SeqBatch<double>{x})[0];
  CHECK(y(0, 0) == doctest::Approx(2.0));
  CHECK(y(0, 1) == doctest::Approx(3.0));

  CHECK(thrown_category([] { LayerFusion<double> bad(1, 4); }) ==
        si::ErrorCategory::InvalidParameter);
  Mat<double> wrong(2, 6);
  wrong.setZero();
  CHECK(thrown_category([&] { even.infer(SeqBatch<double>{wrong}); }) ==
        si::ErrorCategory::Shape);
}

TEST_CASE("fusion dominated by one layer passes it through") {
  LayerFusion<double> fusion(2, 3);
  ParamList<double> params;
  fusion.collect("f", params);
  Mat<double> logits(1, 2);
  logits << 60.0, -60.0;
  set_param(params, "f/logits", logits);
  Rng rng(6);
  const Mat<double> x = random_mat(4, 6, rng);
  const Mat<double> y = fusion.infer(SeqBatch<double>{x})[0];
  CHECK((y - x.leftCols(3)).cwiseAbs().maxCoeff() < 1e-12);
}
