#pragma once
// Named gradient checks for every differentiable primitive and the composed
// network blocks. Shared by the CLI and the test suite.

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "riac/grad_check.hpp"
#include "riac/ops.hpp"
#include "riac/riac_net.hpp"
#include "riac/rng.hpp"

namespace riac::ad {

struct GradCase {
  std::string op;       // scope key, e.g. "conv2d"
  std::string variant;  // e.g. "3x3/2 p1"
  bool composed = false;
  // Builds inputs from the seed and runs the check.
  std::function<GradCheckResult(std::uint64_t seed, const GradCheckOptions&)> run;
};

struct GradCaseResult {
  std::string name;
  bool composed = false;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t coords = 0;
  std::size_t attempts = 1;
  double seconds = 0.0;
  bool passed = false;
  std::string note;
};

struct GradSuiteOptions {
  double eps = 1e-4;
  double primitive_tol = 1e-6;
  double composed_tol = 1e-4;
  std::size_t composed_size = 28;
  std::size_t sampled_coords = 4;  // per tensor, composed blocks only
  std::uint64_t seed = 1;
  std::size_t max_attempts = 5;  // fresh base points after a kink rejection
};

namespace detail {

inline Tensor random_tensor(Shape s, Rng& rng, double scale = 1.0, bool grad = true) {
  Tensor t(std::move(s), grad);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

// Scalar probe <out, R> with fixed random R, so no gradient entry cancels.
inline Tensor project(const Tensor& out, std::uint64_t seed) {
  Rng rng(seed ^ 0x5DEECE66DULL);
  Tensor r(out.shape());
  for (double& v : r.data()) v = rng.uniform(-1.0, 1.0);
  return sum(mul(out, r));
}

inline net::NetConfig small_net(std::size_t size, std::size_t classes = 3) {
  net::NetConfig c;
  c.input_size = size;
  c.n_classes = classes;
  return c;
}

}  // namespace detail

inline std::vector<GradCase> gradient_cases(const GradSuiteOptions& so = {}) {
  using detail::project;
  using detail::random_tensor;
  std::vector<GradCase> cases;
  auto prim = [&](std::string op, std::string variant, std::function<GradCheckResult(std::uint64_t, const GradCheckOptions&)> fn) {
    cases.push_back({std::move(op), std::move(variant), false, std::move(fn)});
  };
  auto comp = [&](std::string op, std::string variant, std::function<GradCheckResult(std::uint64_t, const GradCheckOptions&)> fn) {
    cases.push_back({std::move(op), std::move(variant), true, std::move(fn)});
  };

  struct ConvVariant {
    std::size_t k, stride, pad, H, W, cin, cout;
  };
  for (ConvVariant v : {ConvVariant{1, 1, 0, 5, 4, 3, 2}, ConvVariant{1, 2, 0, 6, 5, 3, 2}, ConvVariant{3, 1, 1, 5, 5, 2, 3},
                        ConvVariant{3, 2, 1, 6, 6, 2, 2}, ConvVariant{7, 2, 3, 8, 8, 3, 1}}) {
    prim("conv2d", std::to_string(v.k) + "x" + std::to_string(v.k) + "/" + std::to_string(v.stride) + " p" + std::to_string(v.pad),
         [v](std::uint64_t seed, const GradCheckOptions& o) {
           Rng rng(seed);
           auto x = random_tensor({v.H, v.W, v.cin}, rng);
           auto w = random_tensor({v.k, v.k, v.cin, v.cout}, rng, 0.5);
           auto b = random_tensor({v.cout}, rng);
           return grad_check([&] { return project(conv2d(x, w, b, v.stride, v.pad), seed); }, {x, w, b}, o);
         });
  }
  prim("maxpool2d", "2/2", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({6, 5, 2}, rng);
    return grad_check([&] { return project(maxpool2d(x, 2, 2), seed); }, {x}, o);
  });
  prim("avgpool2d", "2/2", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({6, 5, 2}, rng);
    return grad_check([&] { return project(avgpool2d(x, 2, 2), seed); }, {x}, o);
  });
  prim("relu", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({4, 6}, rng);
    return grad_check([&] { return project(relu(x), seed); }, {x}, o);
  });
  prim("sigmoid", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({4, 6}, rng, 2.0);
    return grad_check([&] { return project(sigmoid(x), seed); }, {x}, o);
  });
  prim("tanh", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({4, 6}, rng, 2.0);
    return grad_check([&] { return project(tanh(x), seed); }, {x}, o);
  });
  prim("scale", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({3, 4}, rng);
    return grad_check([&] { return project(scale(x, -1.7), seed); }, {x}, o);
  });
  struct BinVariant {
    const char* name;
    Shape a, b;
  };
  for (BinVariant v : {BinVariant{"same", {3, 4}, {3, 4}}, BinVariant{"row-broadcast", {3, 4}, {4}},
                       BinVariant{"channel-broadcast", {3, 2, 4}, {3, 2, 1}}}) {
    prim("add", v.name, [v](std::uint64_t seed, const GradCheckOptions& o) {
      Rng rng(seed);
      auto a = random_tensor(v.a, rng);
      auto b = random_tensor(v.b, rng);
      return grad_check([&] { return project(add(a, b), seed); }, {a, b}, o);
    });
    prim("sub", v.name, [v](std::uint64_t seed, const GradCheckOptions& o) {
      Rng rng(seed);
      auto a = random_tensor(v.a, rng);
      auto b = random_tensor(v.b, rng);
      return grad_check([&] { return project(sub(a, b), seed); }, {a, b}, o);
    });
    prim("mul", v.name, [v](std::uint64_t seed, const GradCheckOptions& o) {
      Rng rng(seed);
      auto a = random_tensor(v.a, rng);
      auto b = random_tensor(v.b, rng);
      return grad_check([&] { return project(mul(a, b), seed); }, {a, b}, o);
    });
  }
  prim("reshape", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({2, 3, 2}, rng);
    return grad_check([&] { return project(reshape(x, {3, 4}), seed); }, {x}, o);
  });
  prim("concat_channels", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto a = random_tensor({3, 2, 2}, rng);
    auto b = random_tensor({3, 2, 1}, rng);
    auto c = random_tensor({3, 2, 3}, rng);
    return grad_check([&] { return project(concat_channels({a, b, c}), seed); }, {a, b, c}, o);
  });
  prim("concat_rows", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto a = random_tensor({2, 3}, rng);
    auto b = random_tensor({1, 3}, rng);
    return grad_check([&] { return project(concat_rows({a, b}), seed); }, {a, b}, o);
  });
  prim("slice_rows", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({5, 3}, rng);
    return grad_check([&] { return project(slice_rows(x, 1, 4), seed); }, {x}, o);
  });
  prim("slice_cols", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({3, 6}, rng);
    return grad_check([&] { return project(slice_cols(x, 2, 5), seed); }, {x}, o);
  });
  prim("matmul", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({4, 2}, rng);
    return grad_check([&] { return project(matmul(a, b), seed); }, {a, b}, o);
  });
  prim("sum", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({3, 4}, rng);
    return grad_check([&] { return sum(mul(x, x)); }, {x}, o);
  });
  prim("mean", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({3, 4}, rng);
    return grad_check([&] { return mean(mul(x, x)); }, {x}, o);
  });
  for (Mode mode : {Mode::Train, Mode::Eval}) {
    prim("batchnorm", mode == Mode::Train ? "train" : "eval", [mode](std::uint64_t seed, const GradCheckOptions& o) {
      Rng rng(seed);
      auto x = random_tensor({6, 3}, rng, 1.5);
      auto g = random_tensor({3}, rng);
      auto b = random_tensor({3}, rng);
      BatchNormStats stats(3);
      for (std::size_t f = 0; f < 3; ++f) {
        stats.mean[f] = rng.normal();
        stats.var[f] = 0.5 + rng.uniform();
      }
      return grad_check(
          [&] {
            BatchNormStats s = stats;  // train mode would otherwise drift the stored statistics
            return project(batchnorm(x, g, b, s, mode), seed);
          },
          {x, g, b}, o);
    });
  }
  for (PoolAxes ax : {PoolAxes::Full, PoolAxes::Width, PoolAxes::Height}) {
    prim("global_avg_pool", ax == PoolAxes::Full ? "full" : ax == PoolAxes::Width ? "width" : "height",
         [ax](std::uint64_t seed, const GradCheckOptions& o) {
           Rng rng(seed);
           auto x = random_tensor({3, 4, 2}, rng);
           return grad_check([&] { return project(global_avg_pool(x, ax), seed); }, {x}, o);
         });
  }
  prim("dropout", "train p=0.2", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto x = random_tensor({4, 5}, rng);
    return grad_check([&] { return project(dropout(x, 0.2, Mode::Train, seed), seed); }, {x}, o);
  });
  prim("dense_softmax_xent", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto f = random_tensor({3, 4}, rng);
    auto w = random_tensor({4, 5}, rng);
    auto b = random_tensor({5}, rng);
    const std::vector<std::size_t> labels = {0, 3, 4};
    return grad_check([&] { return dense_softmax_xent(f, w, b, labels).loss; }, {f, w, b}, o);
  });

  // Composed blocks.
  comp("lstm_cell", "", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto p = net::detail::make_lstm(4, 3, rng);
    auto x = random_tensor({1, 4}, rng);
    net::LstmState prev{random_tensor({1, 3}, rng), random_tensor({1, 3}, rng)};
    return grad_check(
        [&] {
          auto s = net::lstm_cell(x, prev, p);
          return add(project(s.state.h, seed), project(s.state.c, seed + 1));
        },
        {x, prev.h, prev.c, p.w_input, p.w_hidden, p.bias}, o);
  });
  comp("lstm_layer", "T=5", [](std::uint64_t seed, const GradCheckOptions& o) {
    Rng rng(seed);
    auto p = net::detail::make_lstm(4, 3, rng);
    auto x = random_tensor({5, 4}, rng);
    return grad_check([&] { return project(net::lstm_layer(x, p).sequence, seed); }, {x, p.w_input, p.w_hidden, p.bias}, o);
  });
  const std::size_t S = so.composed_size;
  const std::string size_tag = std::to_string(S) + "x" + std::to_string(S);
  auto model_inputs = [S](std::uint64_t seed) {
    auto m = net::init_model(detail::small_net(S), seed);
    Rng rng(seed + 99);
    Tensor x({S, S, 3}, true);
    for (double& v : x.data()) v = rng.uniform();
    return std::pair{m, x};
  };
  auto with_params = [](const net::RiacNetModel& m, std::initializer_list<Tensor> extra, auto pick) {
    std::vector<Tensor> out(extra);
    for (const auto& [name, t] : m.named_parameters())
      if (pick(name)) out.push_back(t);
    return out;
  };
  comp("attention", size_tag, [=](std::uint64_t seed, const GradCheckOptions& o) {
    auto [m, x] = model_inputs(seed);
    auto wrt = with_params(m, {x}, [](const std::string& n) { return n.rfind("attention.", 0) == 0; });
    return grad_check([&] { return project(net::attention_gate(x, m), seed); }, wrt, o);
  });
  comp("stcf", size_tag, [=](std::uint64_t seed, const GradCheckOptions& o) {
    auto [m, x] = model_inputs(seed);
    auto wrt = with_params(m, {x}, [](const std::string& n) { return n.rfind("stcf.", 0) == 0; });
    return grad_check([&] { return project(net::stcf_forward(x, m), seed); }, wrt, o);
  });
  comp("adrb", size_tag, [=](std::uint64_t seed, const GradCheckOptions& o) {
    auto [m, x] = model_inputs(seed);
    auto wrt = with_params(m, {x}, [](const std::string& n) { return n.rfind("stcf.", 0) == 0 || n.rfind("attention.", 0) == 0; });
    return grad_check([&] { return project(net::adrb_forward(x, m), seed); }, wrt, o);
  });
  comp("model", size_tag + " batch 2", [=](std::uint64_t seed, const GradCheckOptions& o) {
    auto [m, x] = model_inputs(seed);
    Rng rng(seed + 7);
    Tensor x2({S, S, 3}, true);
    for (double& v : x2.data()) v = rng.uniform();
    auto wrt = with_params(m, {x, x2}, [](const std::string&) { return true; });
    const std::vector<std::size_t> labels = {0, 2};
    return grad_check([&] { return net::forward_batch({x, x2}, m, Mode::Train, labels, seed).loss; }, wrt, o);
  });
  return cases;
}

inline std::string case_name(const GradCase& c) { return c.variant.empty() ? c.op : c.op + "[" + c.variant + "]"; }

// scope: "all", "primitives", "composed", or an op name such as "conv2d".
inline bool in_scope(const GradCase& c, const std::string& scope) {
  if (scope.empty() || scope == "all") return true;
  if (scope == "primitives") return !c.composed;
  if (scope == "composed") return c.composed;
  return c.op == scope;
}

inline std::vector<GradCaseResult> run_gradient_suite(const std::string& scope = "all", const GradSuiteOptions& so = {}) {
  std::vector<GradCaseResult> out;
  for (const auto& c : gradient_cases(so)) {
    if (!in_scope(c, scope)) continue;
    GradCaseResult r;
    r.name = case_name(c);
    r.composed = c.composed;
    r.tolerance = c.composed ? so.composed_tol : so.primitive_tol;
    GradCheckOptions o;
    o.eps = so.eps;
    o.coords_per_tensor = c.composed ? so.sampled_coords : 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t attempt = 0; attempt < so.max_attempts; ++attempt) {
      r.attempts = attempt + 1;
      const std::uint64_t seed = derive_seed(so.seed, r.name, attempt);
      o.seed = seed;
      try {
        auto res = c.run(seed, o);
        r.max_rel_error = res.max_rel_error;
        r.coords = res.coords_checked;
        r.passed = res.max_rel_error < r.tolerance;
        r.note.clear();
        break;
      } catch (const PointRejected& e) {
        r.note = e.what();
      }
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace riac::ad
