#pragma once
// RIAC-Net: a four-branch inception block (STCF), an attention-gated
// residual path, and a GAP -> BN -> LSTM x2 -> dropout -> dense -> softmax
// classification head.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "riac/archive.hpp"
#include "riac/cass_render.hpp"
#include "riac/ops.hpp"
#include "riac/rng.hpp"
#include "riac/tensor.hpp"

namespace riac::net {

using ad::Mode;
using ad::Shape;
using ad::Tensor;

// Filter counts of the four STCF branches.
struct StcfConfig {
  std::size_t branch1 = 64;          // 1x1 /2
  std::size_t branch2_reduce = 32;   // 1x1 /1
  std::size_t branch2 = 64;          // 3x3 /2
  std::size_t branch3_reduce = 128;  // 1x1 /1
  std::size_t branch3_mid = 64;      // 3x3 /1, same padding
  std::size_t branch3 = 64;          // 3x3 /2
  std::size_t branch4 = 64;          // maxpool 2x2 /2, then 1x1 /1

  std::size_t channels() const { return branch1 + branch2 + branch3 + branch4; }
};

enum class SequenceMode { SpatialRows, SingleStep };

inline std::string sequence_mode_name(SequenceMode m) { return m == SequenceMode::SpatialRows ? "spatial-rows" : "single-step"; }

inline SequenceMode parse_sequence_mode(const std::string& s) {
  if (s == "spatial-rows") return SequenceMode::SpatialRows;
  if (s == "single-step") return SequenceMode::SingleStep;
  throw DomainError("unknown sequence-former mode '" + s + "' (expected spatial-rows or single-step)");
}

struct NetConfig {
  std::size_t input_size = 224;
  std::size_t n_classes = 10;
  std::size_t lstm_hidden = 128;
  double dropout = 0.2;
  SequenceMode sequence_mode = SequenceMode::SpatialRows;
  StcfConfig stcf;
  ad::BatchNormOptions bn;

  std::size_t feature_size() const { return input_size / 2; }

  void validate() const {
    if (input_size < 8 || input_size % 2 != 0) throw DomainError("input size must be even and at least 8");
    if (n_classes < 2) throw DomainError("need at least two classes");
    if (lstm_hidden < 1) throw DomainError("LSTM hidden size must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw DomainError("dropout must lie in [0, 1)");
  }
};

struct ConvLayer {
  Tensor weight;  // k x k x Cin x Cout
  Tensor bias;    // Cout
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t kernel() const { return weight.dim(0); }
  Tensor operator()(const Tensor& x) const { return ad::conv2d(x, weight, bias, stride, pad); }
};

struct StcfParams {
  ConvLayer b1, b2a, b2b, b3a, b3b, b3c, b4;
};

struct AttentionParams {
  ConvLayer coarse;  // 7x7 /2 on x -> 1 channel
  ConvLayer pooled;  // 1x1 on maxpool(x) -> 1 channel
  ConvLayer gate;    // 1x1 after ReLU -> 1 channel, then sigmoid
  ConvLayer skip;    // 1x1 lifting pooled x to the STCF channel count
};

// Gate columns are laid out [input | forget | candidate | output].
struct LstmParams {
  Tensor w_input;   // I x 4H
  Tensor w_hidden;  // H x 4H
  Tensor bias;      // 4H

  std::size_t hidden() const { return w_hidden.dim(0); }
  std::size_t input() const { return w_input.dim(0); }
};

struct LstmState {
  Tensor h;  // 1 x H
  Tensor c;  // 1 x H

  static LstmState zeros(std::size_t hidden) { return {Tensor({1, hidden}), Tensor({1, hidden})}; }
};

struct RiacNetModel {
  NetConfig config;
  StcfParams stcf;
  AttentionParams attention;
  Tensor bn_gamma, bn_beta;
  ad::BatchNormStats bn_stats;
  LstmParams lstm1, lstm2;
  Tensor dense_w, dense_b;

  template <class F>
  void visit(F&& f) {
    auto conv = [&](const std::string& name, ConvLayer& c) {
      f(name + ".weight", c.weight);
      f(name + ".bias", c.bias);
    };
    conv("stcf.b1", stcf.b1);
    conv("stcf.b2a", stcf.b2a);
    conv("stcf.b2b", stcf.b2b);
    conv("stcf.b3a", stcf.b3a);
    conv("stcf.b3b", stcf.b3b);
    conv("stcf.b3c", stcf.b3c);
    conv("stcf.b4", stcf.b4);
    conv("attention.coarse", attention.coarse);
    conv("attention.pooled", attention.pooled);
    conv("attention.gate", attention.gate);
    conv("attention.skip", attention.skip);
    f("bn.gamma", bn_gamma);
    f("bn.beta", bn_beta);
    auto lstm = [&](const std::string& name, LstmParams& l) {
      f(name + ".w_input", l.w_input);
      f(name + ".w_hidden", l.w_hidden);
      f(name + ".bias", l.bias);
    };
    lstm("lstm1", lstm1);
    lstm("lstm2", lstm2);
    f("dense.weight", dense_w);
    f("dense.bias", dense_b);
  }

  std::vector<std::pair<std::string, Tensor>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    const_cast<RiacNetModel*>(this)->visit([&](const std::string& n, Tensor& t) { out.emplace_back(n, t); });
    return out;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (auto& [n, t] : named_parameters()) out.push_back(t);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : parameters()) n += t.size();
    return n;
  }

  // Deep copy; the result shares no storage with *this.
  RiacNetModel clone() const {
    RiacNetModel copy = *this;
    copy.visit([](const std::string&, Tensor& t) { t = t.clone(true); });
    return copy;
  }

  void zero_grad() const {
    for (const auto& t : parameters()) t.zero_grad();
  }
};

namespace detail {

inline ConvLayer make_conv(std::size_t k, std::size_t cin, std::size_t cout, std::size_t stride, std::size_t pad, Rng& rng) {
  ConvLayer c;
  c.weight = Tensor({k, k, cin, cout}, true);
  c.bias = Tensor({cout}, true);
  const double bound = std::sqrt(6.0 / static_cast<double>(k * k * cin));
  for (double& v : c.weight.data()) v = rng.uniform(-bound, bound);
  c.stride = stride;
  c.pad = pad;
  return c;
}

inline LstmParams make_lstm(std::size_t in, std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.w_input = Tensor({in, 4 * hidden}, true);
  p.w_hidden = Tensor({hidden, 4 * hidden}, true);
  p.bias = Tensor({4 * hidden}, true);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& v : p.w_input.data()) v = rng.uniform(-bound, bound);
  for (double& v : p.w_hidden.data()) v = rng.uniform(-bound, bound);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.bias.data()[j] = 1.0;
  return p;
}

}  // namespace detail

// Convolution and dense weights ~ U(+-sqrt(6 / fan_in)); LSTM weights ~
// U(+-1/sqrt(H)) with forget-gate bias 1; other biases zero.
inline RiacNetModel init_model(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const auto& s = cfg.stcf;
  RiacNetModel m;
  m.config = cfg;
  m.stcf.b1 = detail::make_conv(1, 3, s.branch1, 2, 0, rng);
  m.stcf.b2a = detail::make_conv(1, 3, s.branch2_reduce, 1, 0, rng);
  m.stcf.b2b = detail::make_conv(3, s.branch2_reduce, s.branch2, 2, 1, rng);
  m.stcf.b3a = detail::make_conv(1, 3, s.branch3_reduce, 1, 0, rng);
  m.stcf.b3b = detail::make_conv(3, s.branch3_reduce, s.branch3_mid, 1, 1, rng);
  m.stcf.b3c = detail::make_conv(3, s.branch3_mid, s.branch3, 2, 1, rng);
  m.stcf.b4 = detail::make_conv(1, 3, s.branch4, 1, 0, rng);
  m.attention.coarse = detail::make_conv(7, 3, 1, 2, 3, rng);
  m.attention.pooled = detail::make_conv(1, 3, 1, 1, 0, rng);
  m.attention.gate = detail::make_conv(1, 1, 1, 1, 0, rng);
  m.attention.skip = detail::make_conv(1, 3, s.channels(), 1, 0, rng);
  const std::size_t C = s.channels();
  m.bn_gamma = Tensor::full({C}, 1.0, true);
  m.bn_beta = Tensor({C}, true);
  m.bn_stats = ad::BatchNormStats(C);
  m.lstm1 = detail::make_lstm(C, cfg.lstm_hidden, rng);
  m.lstm2 = detail::make_lstm(cfg.lstm_hidden, cfg.lstm_hidden, rng);
  m.dense_w = Tensor({cfg.lstm_hidden, cfg.n_classes}, true);
  const double bound = std::sqrt(6.0 / static_cast<double>(cfg.lstm_hidden));
  for (double& v : m.dense_w.data()) v = rng.uniform(-bound, bound);
  m.dense_b = Tensor({cfg.n_classes}, true);
  return m;
}

// ---------------------------------------------------------------------------
// Feature extractor

inline void check_input(const Tensor& x, const NetConfig& cfg) {
  if (x.rank() != 3 || x.dim(0) != cfg.input_size || x.dim(1) != cfg.input_size || x.dim(2) != 3)
    throw ShapeError("network input must be " + std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_size) +
                     "x3, got " + ad::shape_str(x.shape()));
}

struct StcfBranches {
  Tensor b1, b2, b3, b4;
};

inline StcfBranches stcf_branches(const Tensor& x, const RiacNetModel& m) {
  check_input(x, m.config);
  const auto& p = m.stcf;
  StcfBranches out;
  out.b1 = ad::relu(p.b1(x));
  out.b2 = ad::relu(p.b2b(ad::relu(p.b2a(x))));
  out.b3 = ad::relu(p.b3c(ad::relu(p.b3b(ad::relu(p.b3a(x))))));
  out.b4 = ad::relu(p.b4(ad::maxpool2d(x, 2, 2)));
  return out;
}

// Residual mapping: the four branches stacked along channels.
inline Tensor stcf_forward(const Tensor& x, const RiacNetModel& m) {
  auto b = stcf_branches(x, m);
  return ad::concat_channels({b.b1, b.b2, b.b3, b.b4});
}

// sigmoid(f1x1(relu(f7x7(x) + f1x1(maxpool(x))))), one channel at half resolution.
inline Tensor attention_map(const Tensor& x, const RiacNetModel& m) {
  check_input(x, m.config);
  const auto& a = m.attention;
  Tensor additive = ad::add(a.coarse(x), a.pooled(ad::maxpool2d(x, 2, 2)));
  return ad::sigmoid(a.gate(ad::relu(additive)));
}

// Skip path: average-pooled x gated by the attention map, lifted to the
// STCF channel count.
inline Tensor attention_gate(const Tensor& x, const RiacNetModel& m) {
  Tensor gate = attention_map(x, m);
  Tensor pooled = ad::avgpool2d(x, 2, 2);
  return m.attention.skip(ad::mul(pooled, gate));
}

inline Tensor adrb_forward(const Tensor& x, const RiacNetModel& m) {
  return ad::relu(ad::add(attention_gate(x, m), stcf_forward(x, m)));
}

// ---------------------------------------------------------------------------
// Head

// spatial-rows: width-GAP, one step per feature-map row (top row first).
// single-step: full GAP as a one-step sequence.
inline Tensor sequence_former(const Tensor& featmap, SequenceMode mode) {
  if (mode == SequenceMode::SpatialRows) return ad::global_avg_pool(featmap, ad::PoolAxes::Width);
  Tensor g = ad::global_avg_pool(featmap, ad::PoolAxes::Full);
  return ad::reshape(g, {1, g.size()});
}

struct LstmStep {
  LstmState state;
  Tensor input_gate, forget_gate, candidate, output_gate;
};

namespace detail {

// `z` holds the input projection plus bias for this step (1 x 4H).
inline LstmStep lstm_step_projected(const Tensor& z_in, const LstmState& prev, const LstmParams& p) {
  const std::size_t H = p.hidden();
  Tensor z = ad::add(z_in, ad::matmul(prev.h, p.w_hidden));
  LstmStep s;
  s.input_gate = ad::sigmoid(ad::slice_cols(z, 0, H));
  s.forget_gate = ad::sigmoid(ad::slice_cols(z, H, 2 * H));
  s.candidate = ad::tanh(ad::slice_cols(z, 2 * H, 3 * H));
  s.output_gate = ad::sigmoid(ad::slice_cols(z, 3 * H, 4 * H));
  s.state.c = ad::add(ad::mul(prev.c, s.forget_gate), ad::mul(s.candidate, s.input_gate));
  s.state.h = ad::mul(s.output_gate, ad::tanh(s.state.c));
  return s;
}

}  // namespace detail

// One step on input row x_t (1 x I).
inline LstmStep lstm_cell(const Tensor& x_t, const LstmState& prev, const LstmParams& p) {
  if (x_t.rank() != 2 || x_t.dim(0) != 1 || x_t.dim(1) != p.input())
    throw ShapeError("lstm: input step must be 1x" + std::to_string(p.input()) + ", got " + ad::shape_str(x_t.shape()));
  return detail::lstm_step_projected(ad::add(ad::matmul(x_t, p.w_input), p.bias), prev, p);
}

struct LstmOutput {
  Tensor sequence;  // T x H, all hidden states
  LstmState final_state;
};

inline LstmOutput lstm_layer(const Tensor& seq, const LstmParams& p, const LstmState* initial = nullptr) {
  if (seq.rank() != 2 || seq.dim(1) != p.input())
    throw ShapeError("lstm: sequence must be T x " + std::to_string(p.input()) + ", got " + ad::shape_str(seq.shape()));
  const std::size_t T = seq.dim(0);
  LstmState state = initial ? *initial : LstmState::zeros(p.hidden());
  Tensor projected = ad::add(ad::matmul(seq, p.w_input), p.bias);
  std::vector<Tensor> hs;
  hs.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    state = detail::lstm_step_projected(T == 1 ? projected : ad::slice_rows(projected, t, t + 1), state, p).state;
    hs.push_back(state.h);
  }
  return {T == 1 ? hs.front() : ad::concat_rows(hs), state};
}

struct BatchOutput {
  Tensor probabilities;  // B x classes
  Tensor loss;           // defined when labels were given
};

// Head over a batch of feature maps. BN statistics are taken over every
// sequence step of every sample in the batch.
inline BatchOutput head_forward_batch(const std::vector<Tensor>& featmaps, RiacNetModel& m, Mode mode,
                                      std::span<const std::size_t> labels = {}, std::uint64_t dropout_seed = 0) {
  if (featmaps.empty()) throw ShapeError("head: empty batch");
  std::vector<Tensor> seqs;
  for (const auto& f : featmaps) seqs.push_back(sequence_former(f, m.config.sequence_mode));
  const std::size_t T = seqs.front().dim(0);
  Tensor stacked = seqs.size() == 1 ? seqs.front() : ad::concat_rows(seqs);
  Tensor normed = ad::batchnorm(stacked, m.bn_gamma, m.bn_beta, m.bn_stats, mode, m.config.bn);
  std::vector<Tensor> last;
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    Tensor s = seqs.size() == 1 ? normed : ad::slice_rows(normed, b * T, (b + 1) * T);
    auto l1 = lstm_layer(s, m.lstm1);
    auto l2 = lstm_layer(l1.sequence, m.lstm2);
    last.push_back(l2.final_state.h);
  }
  Tensor h = last.size() == 1 ? last.front() : ad::concat_rows(last);
  Tensor dropped = ad::dropout(h, m.config.dropout, mode, dropout_seed);
  BatchOutput out;
  if (!labels.empty()) {
    auto r = ad::dense_softmax_xent(dropped, m.dense_w, m.dense_b, labels);
    out.probabilities = r.probabilities;
    out.loss = r.loss;
  } else {
    out.probabilities = ad::dense_softmax(dropped, m.dense_w, m.dense_b);
  }
  return out;
}

inline std::vector<double> head_forward(const Tensor& featmap, RiacNetModel& m, Mode mode, std::uint64_t dropout_seed = 0) {
  auto out = head_forward_batch({featmap}, m, mode, {}, dropout_seed);
  return {out.probabilities.data().begin(), out.probabilities.data().end()};
}

// Pixel bytes to [0, 1] reals, H x W x 3.
inline Tensor image_to_tensor(const cass::CassImage& img) {
  Tensor t({img.height, img.width, 3});
  auto d = t.data();
  for (std::size_t i = 0; i < img.pixels.size(); ++i) d[i] = static_cast<double>(img.pixels[i]) / 255.0;
  return t;
}

inline BatchOutput forward_batch(const std::vector<Tensor>& images, RiacNetModel& m, Mode mode,
                                 std::span<const std::size_t> labels = {}, std::uint64_t dropout_seed = 0) {
  std::vector<Tensor> maps;
  maps.reserve(images.size());
  for (const auto& x : images) maps.push_back(adrb_forward(x, m));
  return head_forward_batch(maps, m, mode, labels, dropout_seed);
}

inline std::vector<double> model_forward(const cass::CassImage& img, RiacNetModel& m, Mode mode, std::uint64_t dropout_seed = 0) {
  if (img.width != m.config.input_size || img.height != m.config.input_size)
    throw ShapeError("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) + ", model expects " +
                     std::to_string(m.config.input_size));
  ad::NoGradScope no_grad;
  return head_forward(adrb_forward(image_to_tensor(img), m), m, mode, dropout_seed);
}

// ---------------------------------------------------------------------------
// Architecture description (shape propagation only)

struct LayerShape {
  std::string name;
  Shape input;
  Shape output;
};

inline std::vector<LayerShape> architecture(const NetConfig& cfg) {
  cfg.validate();
  const auto& s = cfg.stcf;
  const std::size_t S = cfg.input_size;
  auto conv = [](const Shape& in, std::size_t k, std::size_t stride, std::size_t pad, std::size_t cout) {
    return Shape{ad::conv_output_size(in[0], k, stride, pad), ad::conv_output_size(in[1], k, stride, pad), cout};
  };
  auto pool = [](const Shape& in) { return Shape{(in[0] - 2) / 2 + 1, (in[1] - 2) / 2 + 1, in[2]}; };
  std::vector<LayerShape> L;
  const Shape x{S, S, 3};
  auto push = [&](std::string n, const Shape& in, Shape out) {
    L.push_back({std::move(n), in, out});
    return out;
  };
  Shape b1 = push("stcf.branch1.conv1x1/2", x, conv(x, 1, 2, 0, s.branch1));
  Shape t = push("stcf.branch2.conv1x1/1", x, conv(x, 1, 1, 0, s.branch2_reduce));
  Shape b2 = push("stcf.branch2.conv3x3/2", t, conv(t, 3, 2, 1, s.branch2));
  t = push("stcf.branch3.conv1x1/1", x, conv(x, 1, 1, 0, s.branch3_reduce));
  t = push("stcf.branch3.conv3x3/1", t, conv(t, 3, 1, 1, s.branch3_mid));
  Shape b3 = push("stcf.branch3.conv3x3/2", t, conv(t, 3, 2, 1, s.branch3));
  t = push("stcf.branch4.maxpool2x2/2", x, pool(x));
  Shape b4 = push("stcf.branch4.conv1x1/1", t, conv(t, 1, 1, 0, s.branch4));
  Shape fused{b1[0], b1[1], b1[2] + b2[2] + b3[2] + b4[2]};
  for (const auto& b : {b2, b3, b4})
    if (b[0] != b1[0] || b[1] != b1[1]) throw ShapeError("STCF branch outputs disagree spatially");
  push("stcf.concat", Shape{b1[0], b1[1], 0}, fused);
  Shape a = push("attention.conv7x7/2", x, conv(x, 7, 2, 3, 1));
  push("attention.maxpool2x2/2+conv1x1", x, conv(pool(x), 1, 1, 0, 1));
  push("attention.sigmoid(conv1x1)", a, a);
  Shape pooled = push("attention.avgpool2x2/2", x, pool(x));
  push("attention.skip.conv1x1", pooled, Shape{pooled[0], pooled[1], fused[2]});
  push("adrb.relu(add)", fused, fused);
  Shape seq = cfg.sequence_mode == SequenceMode::SpatialRows ? Shape{fused[0], fused[2]} : Shape{1, fused[2]};
  push("head.sequence_former(" + sequence_mode_name(cfg.sequence_mode) + ")", fused, seq);
  push("head.batchnorm", seq, seq);
  push("head.lstm1", seq, Shape{seq[0], cfg.lstm_hidden});
  push("head.lstm2", Shape{seq[0], cfg.lstm_hidden}, Shape{1, cfg.lstm_hidden});
  push("head.dropout(" + std::to_string(cfg.dropout).substr(0, 4) + ")", Shape{1, cfg.lstm_hidden}, Shape{1, cfg.lstm_hidden});
  push("head.dense+softmax", Shape{1, cfg.lstm_hidden}, Shape{1, cfg.n_classes});
  return L;
}

inline std::string describe_architecture(const NetConfig& cfg) {
  std::ostringstream os;
  os << "RIAC-Net input " << cfg.input_size << "x" << cfg.input_size << "x3, classes " << cfg.n_classes << '\n';
  for (const auto& l : architecture(cfg)) os << l.name << ' ' << ad::shape_str(l.input) << " -> " << ad::shape_str(l.output) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Checkpoints

inline ad::Archive to_archive(const RiacNetModel& m) {
  ad::Archive ar;
  const auto& c = m.config;
  const auto& s = c.stcf;
  ar.meta = {{"kind", "riac-net"},
             {"input_size", std::to_string(c.input_size)},
             {"n_classes", std::to_string(c.n_classes)},
             {"lstm_hidden", std::to_string(c.lstm_hidden)},
             {"dropout", std::to_string(c.dropout)},
             {"sequence_mode", sequence_mode_name(c.sequence_mode)},
             {"bn_eps", std::to_string(c.bn.eps)},
             {"bn_momentum", std::to_string(c.bn.momentum)},
             {"stcf", std::to_string(s.branch1) + "," + std::to_string(s.branch2_reduce) + "," + std::to_string(s.branch2) + "," +
                          std::to_string(s.branch3_reduce) + "," + std::to_string(s.branch3_mid) + "," +
                          std::to_string(s.branch3) + "," + std::to_string(s.branch4)}};
  for (const auto& [name, t] : m.named_parameters()) ar.arrays.push_back({name, t.shape(), {t.data().begin(), t.data().end()}});
  ar.arrays.push_back({"bn.running_mean", {m.bn_stats.mean.size()}, m.bn_stats.mean});
  ar.arrays.push_back({"bn.running_var", {m.bn_stats.var.size()}, m.bn_stats.var});
  return ar;
}

inline RiacNetModel from_archive(const ad::Archive& ar) {
  NetConfig c;
  c.input_size = std::stoul(ar.meta_value("input_size"));
  c.n_classes = std::stoul(ar.meta_value("n_classes"));
  c.lstm_hidden = std::stoul(ar.meta_value("lstm_hidden"));
  c.dropout = std::stod(ar.meta_value("dropout"));
  c.sequence_mode = parse_sequence_mode(ar.meta_value("sequence_mode"));
  c.bn.eps = std::stod(ar.meta_value("bn_eps"));
  c.bn.momentum = std::stod(ar.meta_value("bn_momentum"));
  {
    std::istringstream ss(ar.meta_value("stcf"));
    std::string tok;
    std::vector<std::size_t> w;
    while (std::getline(ss, tok, ',')) w.push_back(std::stoul(tok));
    if (w.size() != 7) throw ParseError("checkpoint has a malformed stcf entry");
    c.stcf = {w[0], w[1], w[2], w[3], w[4], w[5], w[6]};
  }
  RiacNetModel m = init_model(c, 0);
  m.visit([&](const std::string& name, Tensor& t) {
    const auto& a = ar.array(name);
    if (a.shape != t.shape()) throw ParseError("checkpoint array '" + name + "' has shape " + ad::shape_str(a.shape));
    std::copy(a.data.begin(), a.data.end(), t.data().begin());
  });
  m.bn_stats.mean = ar.array("bn.running_mean").data;
  m.bn_stats.var = ar.array("bn.running_var").data;
  return m;
}

}  // namespace riac::net
