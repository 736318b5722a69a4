#include <gtest/gtest.h>

#include <cmath>

#include "riac/grad_suite.hpp"
#include "riac/ops.hpp"
#include "riac/optim.hpp"

using namespace riac;
using namespace riac::ad;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Ops, ConvHandValues) {
  Tensor x({2, 2, 1}, {1, 2, 3, 4});
  Tensor w({1, 1, 1, 1}, std::vector<double>{2});
  Tensor b({1}, std::vector<double>{1});
  EXPECT_EQ(values(conv2d(x, w, b, 1, 0)), (std::vector<double>{3, 5, 7, 9}));
  // 3x3 all-ones kernel with same padding sums each neighbourhood.
  Tensor k = Tensor::full({3, 3, 1, 1}, 1.0);
  Tensor z({1}, std::vector<double>{0});
  EXPECT_EQ(values(conv2d(x, k, z, 1, 1)), (std::vector<double>{10, 10, 10, 10}));
  auto s = conv2d(Tensor::full({5, 5, 2}, 1.0), Tensor::full({3, 3, 2, 4}, 1.0), Tensor({4}), 2, 1);
  EXPECT_EQ(s.shape(), (Shape{3, 3, 4}));
  EXPECT_EQ(s.data()[0], 8.0);   // corner: 2x2 window x 2 channels
  EXPECT_EQ(s.data()[16], 18.0);  // centre: 3x3 window x 2 channels
  EXPECT_THROW(conv2d(x, Tensor({1, 1, 2, 1}), z, 1, 0), ShapeError);
}

TEST(Ops, PoolingHandValues) {
  Tensor x({2, 2, 1}, {1, 5, 3, 2});
  EXPECT_EQ(values(maxpool2d(x)), (std::vector<double>{5}));
  EXPECT_EQ(values(avgpool2d(x)), (std::vector<double>{2.75}));
  Tensor m({2, 3, 2}, {1, 10, 2, 20, 3, 30, 4, 40, 5, 50, 6, 60});
  EXPECT_EQ(values(global_avg_pool(m, PoolAxes::Full)), (std::vector<double>{3.5, 35}));
  EXPECT_EQ(values(global_avg_pool(m, PoolAxes::Width)), (std::vector<double>{2, 20, 5, 50}));
  EXPECT_EQ(values(global_avg_pool(m, PoolAxes::Height)), (std::vector<double>{2.5, 25, 3.5, 35, 4.5, 45}));
}

TEST(Ops, ElementwiseAndBroadcast) {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor row({2}, {10, 20});
  EXPECT_EQ(values(add(a, row)), (std::vector<double>{11, 22, 13, 24}));
  EXPECT_EQ(values(sub(a, row)), (std::vector<double>{-9, -18, -7, -16}));
  EXPECT_EQ(values(mul(a, row)), (std::vector<double>{10, 40, 30, 80}));
  EXPECT_EQ(values(relu(Tensor({3}, {-1, 0, 2}))), (std::vector<double>{0, 0, 2}));
  EXPECT_EQ(values(sigmoid(Tensor({1}, std::vector<double>{0}))), (std::vector<double>{0.5}));
  EXPECT_EQ(values(scale(a, 0.5)), (std::vector<double>{0.5, 1, 1.5, 2}));
  EXPECT_EQ(values(matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}))), (std::vector<double>{11}));
  EXPECT_EQ(sum(a).item(), 10.0);
  EXPECT_EQ(mean(a).item(), 2.5);
  EXPECT_THROW(add(a, Tensor({3}, {1, 2, 3})), ShapeError);
}

TEST(Ops, ConcatAndSlice) {
  Tensor a({1, 1, 2}, {1, 2});
  Tensor b({1, 1, 1}, std::vector<double>{3});
  EXPECT_EQ(values(concat_channels({a, b})), (std::vector<double>{1, 2, 3}));
  Tensor r({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(values(concat_rows({r, r})), (std::vector<double>{1, 2, 3, 4, 1, 2, 3, 4}));
  EXPECT_EQ(values(slice_rows(r, 1, 2)), (std::vector<double>{3, 4}));
  EXPECT_EQ(values(slice_cols(r, 1, 2)), (std::vector<double>{2, 4}));
  EXPECT_EQ(reshape(r, {4}).shape(), (Shape{4}));
  EXPECT_THROW(reshape(r, {3}), ShapeError);
}

TEST(Ops, BackwardOfSquareIsTwiceInput) {
  Tensor x({3}, {1, -2, 3}, true);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(mul(x, x));
  }
  backward(tape, loss);
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{2, -4, 6}));
}

TEST(Ops, SoftmaxCrossEntropy) {
  Tensor f({2, 2}, {1, 2, 3, 4});
  Tensor w({2, 3});
  Tensor b({3});
  std::vector<std::size_t> labels{0, 2};
  auto r = dense_softmax_xent(f, w, b, labels);
  for (double p : r.probabilities.data()) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  EXPECT_NEAR(r.loss.item(), std::log(3.0), 1e-15);
  // Max shifting keeps huge logits finite.
  auto p = dense_softmax(Tensor({1, 1}, std::vector<double>{1}), Tensor({1, 2}, {1000, 0}), Tensor({2}));
  EXPECT_NEAR(p.data()[0], 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(p.data()[1]));
  EXPECT_THROW(dense_softmax_xent(f, w, b, std::vector<std::size_t>{0, 3}), Error);
}

TEST(Ops, BatchNormStatistics) {
  Tensor x({4, 2}, {1, 10, 2, 20, 3, 30, 4, 40});
  Tensor g = Tensor::full({2}, 1.0), b({2});
  BatchNormStats stats(2);
  auto y = batchnorm(x, g, b, stats, Mode::Train, {0.0, 0.9});
  for (std::size_t f = 0; f < 2; ++f) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < 4; ++r) m += y.data()[r * 2 + f];
    for (std::size_t r = 0; r < 4; ++r) v += y.data()[r * 2 + f] * y.data()[r * 2 + f];
    EXPECT_NEAR(m / 4, 0.0, 1e-12);
    EXPECT_NEAR(v / 4, 1.0, 1e-12);
  }
  EXPECT_NEAR(stats.mean[0], 0.1 * 2.5, 1e-12);
  EXPECT_NEAR(stats.var[1], 0.9 + 0.1 * 125.0, 1e-12);
  BatchNormStats fixed(2);
  auto e = batchnorm(x, g, b, fixed, Mode::Eval, {0.0, 0.9});
  EXPECT_EQ(values(e), values(x));
}

TEST(Ops, DropoutMaskIsSeededAndScaled) {
  Tensor x = Tensor::full({1, 10000}, 1.0);
  auto a = dropout(x, 0.2, Mode::Train, 42);
  auto b = dropout(x, 0.2, Mode::Train, 42);
  EXPECT_EQ(values(a), values(b));
  std::size_t zeros = 0;
  for (double v : a.data()) {
    if (v == 0.0) ++zeros;
    else EXPECT_DOUBLE_EQ(v, 1.25);
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 10000.0, 0.2, 0.02);
  EXPECT_EQ(values(dropout(x, 0.2, Mode::Eval, 42)), values(x));
  EXPECT_THROW(dropout(x, 1.0, Mode::Train, 1), DomainError);
}

TEST(Optim, AdamFirstStepHandValue) {
  Tensor p({2}, {1.0, -1.0}, true);
  p.zero_grad();
  p.grad()[0] = 0.5;
  p.grad()[1] = -2.0;
  AdamState st(AdamOptions{0.1, 0.9, 0.999, 1e-8});
  adam_step({p}, st);
  // Bias correction makes the first step lr * g / (|g| + eps).
  EXPECT_NEAR(p.data()[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p.data()[1], -1.0 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-12);
  EXPECT_EQ(st.step, 1u);
}

TEST(Optim, AdamMinimisesQuadratic) {
  Tensor p({1}, {5.0}, true);
  AdamState st(AdamOptions{0.1, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 500; ++i) {
    p.zero_grad();
    p.grad()[0] = 2.0 * (p.data()[0] - 1.5);
    adam_step({p}, st);
  }
  EXPECT_NEAR(p.data()[0], 1.5, 1e-2);
}

TEST(GradientSuite, EveryPrimitiveBelowTolerance) {
  auto results = run_gradient_suite("primitives");
  ASSERT_GE(results.size(), 25u);
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << " rel error " << r.max_rel_error << " " << r.note;
    EXPECT_LT(r.max_rel_error, 1e-6) << r.name;
  }
}

TEST(GradientSuite, ScopeFilter) {
  GradSuiteOptions so;
  auto cases = gradient_cases(so);
  std::size_t conv = 0, composed = 0;
  for (const auto& c : cases) {
    conv += in_scope(c, "conv2d");
    composed += in_scope(c, "composed");
  }
  EXPECT_EQ(conv, 5u);
  EXPECT_GE(composed, 6u);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A deliberately broken op: forward x^2, backward claims 3x.
  Tensor x({2}, {0.7, -0.3}, true);
  auto f = [&] {
    Tensor out({2}, {x.data()[0] * x.data()[0], x.data()[1] * x.data()[1]}, true);
    detail::record("bad_square", {x}, out, [x, out] {
      for (std::size_t i = 0; i < 2; ++i) x.grad()[i] += 3.0 * x.data()[i] * out.grad()[i];
    });
    return sum(out);
  };
  auto r = grad_check(f, {x});
  EXPECT_GT(r.max_rel_error, 0.1);
}
