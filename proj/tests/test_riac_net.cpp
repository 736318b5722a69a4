#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "riac/grad_suite.hpp"
#include "riac/riac_net.hpp"
#include "test_util.hpp"

using namespace riac;
using namespace riac::net;
using ad::Shape;
using ad::Tensor;

namespace {

NetConfig tiny(std::size_t size = 16, std::size_t hidden = 6) {
  NetConfig c;
  c.input_size = size;
  c.n_classes = 3;
  c.lstm_hidden = hidden;
  c.stcf = {2, 2, 3, 2, 2, 3, 2};
  return c;
}

Tensor random_image(std::size_t s, Rng& rng, double scale = 1.0) {
  Tensor x({s, s, 3});
  for (double& v : x.data()) v = scale * rng.uniform(-1.0, 1.0);
  return x;
}

void zero_attention(RiacNetModel& m) {
  for (auto* c : {&m.attention.coarse, &m.attention.pooled, &m.attention.gate, &m.attention.skip}) {
    for (double& v : c->weight.data()) v = 0.0;
    for (double& v : c->bias.data()) v = 0.0;
  }
}

void fill(LstmParams& p, double w, double b) {
  for (double& v : p.w_input.data()) v = w;
  for (double& v : p.w_hidden.data()) v = w;
  for (double& v : p.bias.data()) v = b;
}

}  // namespace

TEST(Architecture, StcfShapesAt224) {
  const auto t0 = std::chrono::steady_clock::now();
  NetConfig cfg;
  cfg.input_size = 224;
  std::map<std::string, Shape> out;
  for (const auto& l : architecture(cfg)) out[l.name] = l.output;
  EXPECT_EQ(out.at("stcf.branch1.conv1x1/2"), (Shape{112, 112, 64}));
  EXPECT_EQ(out.at("stcf.branch2.conv3x3/2"), (Shape{112, 112, 64}));
  EXPECT_EQ(out.at("stcf.branch3.conv3x3/2"), (Shape{112, 112, 64}));
  EXPECT_EQ(out.at("stcf.branch4.conv1x1/1"), (Shape{112, 112, 64}));
  EXPECT_EQ(out.at("stcf.concat"), (Shape{112, 112, 256}));
  EXPECT_EQ(out.at("attention.skip.conv1x1"), (Shape{112, 112, 256}));

  // The real operators agree on the spatial sizes (narrow channels keep it fast).
  NetConfig narrow = cfg;
  narrow.stcf = {1, 1, 1, 1, 1, 1, 1};
  auto m = init_model(narrow, 3);
  Rng rng(1);
  ad::NoGradScope ng;
  auto b = stcf_branches(random_image(224, rng), m);
  for (const auto& t : {b.b1, b.b2, b.b3, b.b4}) EXPECT_EQ(t.shape(), (Shape{112, 112, 1}));
  EXPECT_EQ(adrb_forward(random_image(224, rng), m).shape(), (Shape{112, 112, 4}));
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}

TEST(Architecture, RejectsWrongInput) {
  auto m = init_model(tiny(), 1);
  EXPECT_THROW(stcf_forward(Tensor({8, 8, 3}), m), ShapeError);
  auto bad = tiny();
  bad.input_size = 15;
  EXPECT_THROW(init_model(bad, 1), DomainError);
}

TEST(Attention, ZeroParametersGiveOneHalf) {
  auto m = init_model(tiny(), 2);
  zero_attention(m);
  Rng rng(3);
  ad::NoGradScope ng;
  for (int i = 0; i < 100; ++i) {
    auto a = attention_map(random_image(16, rng, 5.0), m);
    ASSERT_EQ(a.shape(), (Shape{8, 8, 1}));
    for (double v : a.data()) ASSERT_EQ(v, 0.5);
  }
}

TEST(Attention, MapInOpenUnitIntervalAndAdrbNonNegative) {
  Rng rng(4);
  ad::NoGradScope ng;
  for (std::uint64_t k = 0; k < 100; ++k) {
    auto m = init_model(tiny(), 100 + k);
    auto x = random_image(16, rng, 2.0);
    const auto a = attention_map(x, m);
    for (double v : a.data()) {
      ASSERT_GT(v, 0.0);
      ASSERT_LT(v, 1.0);
    }
    const auto y = adrb_forward(x, m);
    for (double v : y.data()) ASSERT_GE(v, 0.0);
  }
}

TEST(Lstm, ZeroParametersGiveZeroHidden) {
  Rng rng(5);
  auto p = detail::make_lstm(4, 5, rng);
  fill(p, 0.0, 0.0);
  ad::NoGradScope ng;
  for (int i = 0; i < 100; ++i) {
    Tensor seq({7, 4});
    for (double& v : seq.data()) v = rng.uniform(-10, 10);
    auto out = lstm_layer(seq, p);
    for (double v : out.sequence.data()) ASSERT_EQ(v, 0.0);
    for (double v : out.final_state.c.data()) ASSERT_EQ(v, 0.0);
  }
}

TEST(Lstm, ForgetZeroInputOneCopiesCandidate) {
  Rng rng(6);
  const std::size_t H = 5;
  auto p = detail::make_lstm(3, H, rng);
  // Saturating biases drive the sigmoids to exactly 0 and 1 in double precision.
  for (std::size_t j = 0; j < H; ++j) {
    p.bias.data()[j] = 1000.0;
    p.bias.data()[H + j] = -1000.0;
  }
  ad::NoGradScope ng;
  for (int i = 0; i < 100; ++i) {
    LstmState prev{Tensor({1, H}), Tensor({1, H})};
    for (double& v : prev.h.data()) v = rng.uniform(-0.9, 0.9);
    for (double& v : prev.c.data()) v = rng.uniform(-5, 5);
    Tensor x({1, 3});
    for (double& v : x.data()) v = rng.uniform(-1, 1);
    auto s = lstm_cell(x, prev, p);
    for (std::size_t j = 0; j < H; ++j) {
      ASSERT_EQ(s.forget_gate.data()[j], 0.0);
      ASSERT_EQ(s.input_gate.data()[j], 1.0);
      ASSERT_EQ(s.state.c.data()[j], s.candidate.data()[j]);
    }
  }
}

TEST(Lstm, HiddenStrictlyInsideUnitBall) {
  Rng rng(7);
  ad::NoGradScope ng;
  for (int i = 0; i < 100; ++i) {
    auto p = detail::make_lstm(4, 6, rng);
    for (double& v : p.w_input.data()) v *= 3.0;
    Tensor seq({12, 4});
    for (double& v : seq.data()) v = rng.uniform(-3, 3);
    const auto out = lstm_layer(seq, p);
    for (double v : out.sequence.data()) ASSERT_LT(std::abs(v), 1.0);
  }
}

TEST(Model, ForwardGivesDistribution) {
  auto m = init_model(tiny(), 8);
  cass::CassImage img(16, 16);
  img.set(3, 4, {255, 0, 0});
  auto p = model_forward(img, m, ad::Mode::Eval);
  ASSERT_EQ(p.size(), 3u);
  double s = 0;
  for (double v : p) {
    EXPECT_GT(v, 0.0);
    s += v;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_EQ(model_forward(img, m, ad::Mode::Eval), p);
  EXPECT_THROW(model_forward(cass::CassImage(8, 8), m, ad::Mode::Eval), ShapeError);
}

TEST(Model, CloneIsDeep) {
  auto m = init_model(tiny(), 9);
  auto c = m.clone();
  c.dense_w.data()[0] += 1.0;
  EXPECT_NE(c.dense_w.data()[0], m.dense_w.data()[0]);
  EXPECT_EQ(m.parameter_count(), c.parameter_count());
}

TEST(Model, CheckpointRoundTrip) {
  auto m = init_model(tiny(), 10);
  m.bn_stats.mean[1] = 0.25;
  testutil::TempDir dir("ckpt");
  ad::write_archive(dir / "m.riac", to_archive(m));
  auto back = from_archive(ad::read_archive(dir / "m.riac"));
  auto a = m.named_parameters(), b = back.named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_TRUE(std::equal(a[i].second.data().begin(), a[i].second.data().end(), b[i].second.data().begin())) << a[i].first;
  }
  EXPECT_EQ(back.bn_stats.mean, m.bn_stats.mean);
  cass::CassImage img(16, 16);
  img.set(5, 5, {0, 255, 0});
  EXPECT_EQ(model_forward(img, back, ad::Mode::Eval), model_forward(img, m, ad::Mode::Eval));
  testutil::write_text(dir / "junk.riac", "not an archive");
  EXPECT_THROW(ad::read_archive(dir / "junk.riac"), Error);
}

TEST(GradientSuite, ComposedBlocksBelowTolerance) {
  auto results = ad::run_gradient_suite("composed");
  std::set<std::string> names;
  for (const auto& r : results) {
    names.insert(r.name.substr(0, r.name.find('[')));
    EXPECT_TRUE(r.passed) << r.name << " rel error " << r.max_rel_error << " " << r.note;
    EXPECT_LT(r.max_rel_error, 1e-4) << r.name;
  }
  EXPECT_TRUE(names.count("adrb"));
  EXPECT_TRUE(names.count("model"));
}
