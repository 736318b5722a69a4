#pragma once
// Differentiable primitives. Image tensors are H x W x C, row-major;
// convolution kernels are k x k x Cin x Cout; sequence/batch tensors are
// rows x features.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "riac/rng.hpp"
#include "riac/tensor.hpp"

namespace riac::ad {

enum class Mode { Train, Eval };

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

inline void expect_rank(const Tensor& t, std::size_t r, std::string_view op, std::string_view what) {
  if (t.rank() != r)
    throw ShapeError(std::string(op) + ": " + std::string(what) + " must have rank " + std::to_string(r) + ", got " +
                     shape_str(t.shape()));
}

// No-op outside a tape, so forward code can record unconditionally.
inline void record(std::string_view op, std::vector<Tensor> inputs, const Tensor& out, std::function<void()> fn) {
  if (active_tape) active_tape->record(op, std::move(inputs), out, std::move(fn));
}

inline void im2col(const double* x, std::size_t H, std::size_t W, std::size_t C, std::size_t k, std::size_t s,
                   std::size_t p, std::size_t Ho, std::size_t Wo, double* cols) {
  double* dst = cols;
  for (std::size_t oy = 0; oy < Ho; ++oy)
    for (std::size_t ox = 0; ox < Wo; ++ox)
      for (std::size_t ky = 0; ky < k; ++ky) {
        const long iy = static_cast<long>(oy * s + ky) - static_cast<long>(p);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const long ix = static_cast<long>(ox * s + kx) - static_cast<long>(p);
          if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W))
            std::fill(dst, dst + C, 0.0);
          else
            std::memcpy(dst, x + (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * C, C * sizeof(double));
          dst += C;
        }
      }
}

inline void col2im_add(const double* cols, std::size_t H, std::size_t W, std::size_t C, std::size_t k, std::size_t s,
                       std::size_t p, std::size_t Ho, std::size_t Wo, double* gx) {
  const double* src = cols;
  for (std::size_t oy = 0; oy < Ho; ++oy)
    for (std::size_t ox = 0; ox < Wo; ++ox)
      for (std::size_t ky = 0; ky < k; ++ky) {
        const long iy = static_cast<long>(oy * s + ky) - static_cast<long>(p);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const long ix = static_cast<long>(ox * s + kx) - static_cast<long>(p);
          if (!(iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W))) {
            double* d = gx + (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * C;
            for (std::size_t c = 0; c < C; ++c) d[c] += src[c];
          }
          src += C;
        }
      }
}

// Numpy-style broadcasting of two shapes (right-aligned).
struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a, stride_b;
};

inline Broadcast plan_broadcast(const Shape& a, const Shape& b, std::string_view op) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape pa(r, 1), pb(r, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<long>(r - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<long>(r - b.size()));
  Broadcast bc;
  bc.out.resize(r);
  for (std::size_t d = 0; d < r; ++d) {
    if (pa[d] == pb[d] || pb[d] == 1) bc.out[d] = pa[d];
    else if (pa[d] == 1) bc.out[d] = pb[d];
    else
      throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                       " are not broadcast-compatible at dimension " + std::to_string(d));
  }
  auto strides = [&](const Shape& p) {
    std::vector<std::size_t> st(r, 0);
    std::size_t acc = 1;
    for (std::size_t d = r; d-- > 0;) {
      st[d] = p[d] == 1 && bc.out[d] != 1 ? 0 : acc;
      acc *= p[d];
    }
    return st;
  };
  bc.stride_a = strides(pa);
  bc.stride_b = strides(pb);
  return bc;
}

template <class F>
void broadcast_loop(const Broadcast& bc, F&& f) {
  const std::size_t r = bc.out.size();
  if (r == 0) {
    f(std::size_t{0}, std::size_t{0}, std::size_t{0});
    return;
  }
  const std::size_t total = numel(bc.out);
  if (total == 0) return;
  const std::size_t inner = bc.out[r - 1];
  const std::size_t ia_step = bc.stride_a[r - 1], ib_step = bc.stride_b[r - 1];
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t o = 0; o < total; o += inner) {
    for (std::size_t k = 0; k < inner; ++k) f(o + k, ia + k * ia_step, ib + k * ib_step);
    for (std::size_t d = r - 1; d-- > 0;) {
      ++idx[d];
      ia += bc.stride_a[d];
      ib += bc.stride_b[d];
      if (idx[d] < bc.out[d]) break;
      ia -= bc.stride_a[d] * bc.out[d];
      ib -= bc.stride_b[d] * bc.out[d];
      idx[d] = 0;
    }
  }
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, std::string_view op, Fwd fwd, Deriv deriv) {
  Tensor out(x.shape(), needs_grad({&x}));
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t i = 0; i < xd.size(); ++i) od[i] = fwd(xd[i]);
  if (out.requires_grad()) {
    record(op, {x}, out, [x, out, deriv] {
      auto gx = x.grad();
      auto go = out.grad();
      auto xd = x.data();
      auto od = out.data();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * deriv(xd[i], od[i]);
    });
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution and pooling

inline std::size_t conv_output_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (in + 2 * pad < k) throw ShapeError("convolution window " + std::to_string(k) + " exceeds padded input " + std::to_string(in + 2 * pad));
  return (in + 2 * pad - k) / stride + 1;
}

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad) {
  detail::expect_rank(x, 3, "conv2d", "input");
  detail::expect_rank(w, 4, "conv2d", "kernels");
  detail::expect_rank(b, 1, "conv2d", "bias");
  const std::size_t H = x.dim(0), W = x.dim(1), Ci = x.dim(2);
  const std::size_t k = w.dim(0), Co = w.dim(3);
  if (w.dim(1) != k) throw ShapeError("conv2d: kernel width dimension " + std::to_string(w.dim(1)) + " differs from height " + std::to_string(k));
  if (k != 1 && k != 3 && k != 7) throw ShapeError("conv2d: kernel size " + std::to_string(k) + " not in {1,3,7}");
  if (w.dim(2) != Ci)
    throw ShapeError("conv2d: input-channel dimension mismatch, input has " + std::to_string(Ci) + " channels, kernels expect " +
                     std::to_string(w.dim(2)));
  if (b.dim(0) != Co)
    throw ShapeError("conv2d: bias dimension " + std::to_string(b.dim(0)) + " does not match output channels " + std::to_string(Co));
  if (stride < 1) throw ShapeError("conv2d: stride must be positive");
  const std::size_t Ho = conv_output_size(H, k, stride, pad), Wo = conv_output_size(W, k, stride, pad);
  const std::size_t M = Ho * Wo, K = k * k * Ci;
  const bool direct = k == 1 && stride == 1 && pad == 0;

  Tensor out({Ho, Wo, Co}, detail::needs_grad({&x, &w, &b}));
  Buffer cols;
  const double* cols_ptr = x.data().data();
  if (!direct) {
    cols.resize(M * K);
    detail::im2col(x.data().data(), H, W, Ci, k, stride, pad, Ho, Wo, cols.data());
    cols_ptr = cols.data();
  }
  detail::MatMap o(out.data().data(), static_cast<long>(M), static_cast<long>(Co));
  o.noalias() = detail::ConstMatMap(cols_ptr, static_cast<long>(M), static_cast<long>(K)) *
                detail::ConstMatMap(w.data().data(), static_cast<long>(K), static_cast<long>(Co));
  o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data().data(), static_cast<long>(Co));

  if (out.requires_grad()) {
    detail::record("conv2d", {x, w, b}, out, [=] {
      detail::ConstMatMap go(out.grad().data(), static_cast<long>(M), static_cast<long>(Co));
      Buffer cols2;
      const double* cp = x.data().data();
      if (!direct && w.requires_grad()) {
        cols2.resize(M * K);
        detail::im2col(x.data().data(), H, W, Ci, k, stride, pad, Ho, Wo, cols2.data());
        cp = cols2.data();
      }
      if (w.requires_grad())
        detail::MatMap(w.grad().data(), static_cast<long>(K), static_cast<long>(Co)).noalias() +=
            detail::ConstMatMap(cp, static_cast<long>(M), static_cast<long>(K)).transpose() * go;
      if (b.requires_grad())
        Eigen::Map<Eigen::RowVectorXd>(b.grad().data(), static_cast<long>(Co)) += go.colwise().sum();
      if (x.requires_grad()) {
        auto wmat = detail::ConstMatMap(w.data().data(), static_cast<long>(K), static_cast<long>(Co));
        if (direct) {
          detail::MatMap(x.grad().data(), static_cast<long>(M), static_cast<long>(K)).noalias() += go * wmat.transpose();
        } else {
          detail::RowMat dcols = go * wmat.transpose();
          detail::col2im_add(dcols.data(), H, W, Ci, k, stride, pad, Ho, Wo, x.grad().data());
        }
      }
    });
  }
  return out;
}

inline Tensor maxpool2d(const Tensor& x, std::size_t k = 2, std::size_t stride = 2) {
  detail::expect_rank(x, 3, "maxpool2d", "input");
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  if (k < 1 || stride < 1) throw ShapeError("maxpool2d: window and stride must be positive");
  if (k > H || k > W) throw ShapeError("maxpool2d: window " + std::to_string(k) + " exceeds input " + shape_str(x.shape()));
  const std::size_t Ho = (H - k) / stride + 1, Wo = (W - k) / stride + 1;
  Tensor out({Ho, Wo, C}, detail::needs_grad({&x}));
  auto xd = x.data();
  auto od = out.data();
  std::vector<std::size_t> arg(out.size());
  for (std::size_t oy = 0; oy < Ho; ++oy)
    for (std::size_t ox = 0; ox < Wo; ++ox)
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t best = (oy * stride * W + ox * stride) * C + c;
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::size_t i = ((oy * stride + ky) * W + (ox * stride + kx)) * C + c;
            if (xd[i] > xd[best]) best = i;  // strict: first index wins ties
          }
        const std::size_t o = (oy * Wo + ox) * C + c;
        od[o] = xd[best];
        arg[o] = best;
      }
  detail::observe_maxpool(xd, x.shape(), k, stride);
  if (out.requires_grad()) {
    detail::record("maxpool2d", {x}, out, [x, out, arg = std::move(arg)] {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t o = 0; o < go.size(); ++o) gx[arg[o]] += go[o];
    });
  }
  return out;
}

inline Tensor avgpool2d(const Tensor& x, std::size_t k = 2, std::size_t stride = 2) {
  detail::expect_rank(x, 3, "avgpool2d", "input");
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  if (k < 1 || stride < 1) throw ShapeError("avgpool2d: window and stride must be positive");
  if (k > H || k > W) throw ShapeError("avgpool2d: window " + std::to_string(k) + " exceeds input " + shape_str(x.shape()));
  const std::size_t Ho = (H - k) / stride + 1, Wo = (W - k) / stride + 1;
  const double inv = 1.0 / static_cast<double>(k * k);
  Tensor out({Ho, Wo, C}, detail::needs_grad({&x}));
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t oy = 0; oy < Ho; ++oy)
    for (std::size_t ox = 0; ox < Wo; ++ox)
      for (std::size_t c = 0; c < C; ++c) {
        double s = 0;
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) s += xd[((oy * stride + ky) * W + (ox * stride + kx)) * C + c];
        od[(oy * Wo + ox) * C + c] = s * inv;
      }
  if (out.requires_grad()) {
    detail::record("avgpool2d", {x}, out, [=] {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox)
          for (std::size_t c = 0; c < C; ++c) {
            const double g = go[(oy * Wo + ox) * C + c] * inv;
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) gx[((oy * stride + ky) * W + (ox * stride + kx)) * C + c] += g;
          }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

inline Tensor relu(const Tensor& x) {
  detail::observe_relu(x.data());
  return detail::unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline double sigmoid_value(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& x) {
  return detail::unary(x, "sigmoid", sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& x) {
  return detail::unary(
      x, "tanh", [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

inline Tensor scale(const Tensor& x, double s) {
  return detail::unary(
      x, "scale", [s](double v) { return s * v; }, [s](double, double) { return s; });
}

namespace detail {

template <class Fwd, class GradA, class GradB>
Tensor binary(const Tensor& a, const Tensor& b, std::string_view op, Fwd fwd, GradA ga_fn, GradB gb_fn) {
  const bool same_shape = a.shape() == b.shape();
  Broadcast bc = same_shape ? Broadcast{a.shape(), {}, {}} : plan_broadcast(a.shape(), b.shape(), op);
  Tensor out(bc.out, needs_grad({&a, &b}));
  auto ad = a.data();
  auto bd = b.data();
  auto od = out.data();
  if (same_shape) {
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = fwd(ad[i], bd[i]);
  } else {
    broadcast_loop(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) { od[o] = fwd(ad[ia], bd[ib]); });
  }
  if (out.requires_grad()) {
    record(op, {a, b}, out, [a, b, out, bc = std::move(bc), same_shape, ga_fn, gb_fn] {
      auto ad = a.data();
      auto bd = b.data();
      auto go = out.grad();
      const bool need_a = a.requires_grad(), need_b = b.requires_grad();
      std::span<double> ga = need_a ? a.grad() : std::span<double>{};
      std::span<double> gb = need_b ? b.grad() : std::span<double>{};
      auto step = [&](std::size_t o, std::size_t ia, std::size_t ib) {
        if (need_a) ga[ia] += go[o] * ga_fn(ad[ia], bd[ib]);
        if (need_b) gb[ib] += go[o] * gb_fn(ad[ia], bd[ib]);
      };
      if (same_shape)
        for (std::size_t i = 0; i < go.size(); ++i) step(i, i, i);
      else
        broadcast_loop(bc, step);
    });
  }
  return out;
}

}  // namespace detail

// Broadcasting follows numpy rules, e.g. H x W x C with H x W x 1, or
// rows x F with F.
inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

// ---------------------------------------------------------------------------
// Structural

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), detail::needs_grad({&x}));
  if (out.requires_grad()) {
    detail::record("reshape", {x}, out, [x, out] {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
    });
  }
  return out;
}

// Concatenation along the last axis; all leading dimensions must agree.
inline Tensor concat_channels(const std::vector<Tensor>& inputs) {
  if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape& first = inputs.front().shape();
  if (first.empty()) throw ShapeError("concat_channels: scalar input");
  const std::size_t lead = numel(first) / first.back();
  std::size_t total = 0;
  bool grad = false;
  for (const auto& t : inputs) {
    if (t.rank() != first.size() || !std::equal(first.begin(), first.end() - 1, t.shape().begin()))
      throw ShapeError("concat_channels: spatial mismatch between " + shape_str(first) + " and " + shape_str(t.shape()));
    total += t.shape().back();
    grad = grad || detail::needs_grad({&t});
  }
  Shape shape = first;
  shape.back() = total;
  Tensor out(shape, grad);
  auto od = out.data();
  std::size_t offset = 0;
  for (const auto& t : inputs) {
    const std::size_t c = t.shape().back();
    auto td = t.data();
    for (std::size_t r = 0; r < lead; ++r) std::copy_n(td.begin() + static_cast<long>(r * c), c, od.begin() + static_cast<long>(r * total + offset));
    offset += c;
  }
  if (grad) {
    detail::record("concat_channels", inputs, out, [inputs, out, lead, total] {
      auto go = out.grad();
      std::size_t offset = 0;
      for (const auto& t : inputs) {
        const std::size_t c = t.shape().back();
        if (t.requires_grad()) {
          auto gt = t.grad();
          for (std::size_t r = 0; r < lead; ++r)
            for (std::size_t j = 0; j < c; ++j) gt[r * c + j] += go[r * total + offset + j];
        }
        offset += c;
      }
    });
  }
  return out;
}

// Concatenation along axis 0 of rank-2 tensors with equal column counts.
inline Tensor concat_rows(const std::vector<Tensor>& inputs) {
  if (inputs.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = inputs.front().dim(1);
  std::size_t rows = 0;
  bool grad = false;
  for (const auto& t : inputs) {
    detail::expect_rank(t, 2, "concat_rows", "input");
    if (t.dim(1) != cols) throw ShapeError("concat_rows: column mismatch " + shape_str(t.shape()));
    rows += t.dim(0);
    grad = grad || detail::needs_grad({&t});
  }
  Tensor out({rows, cols}, grad);
  auto od = out.data();
  std::size_t at = 0;
  for (const auto& t : inputs) {
    std::copy(t.data().begin(), t.data().end(), od.begin() + static_cast<long>(at));
    at += t.size();
  }
  if (grad) {
    detail::record("concat_rows", inputs, out, [inputs, out] {
      auto go = out.grad();
      std::size_t at = 0;
      for (const auto& t : inputs) {
        if (t.requires_grad()) {
          auto gt = t.grad();
          for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += go[at + i];
        }
        at += t.size();
      }
    });
  }
  return out;
}

inline Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  detail::expect_rank(x, 2, "slice_rows", "input");
  if (begin >= end || end > x.dim(0)) throw ShapeError("slice_rows: bad range for " + shape_str(x.shape()));
  const std::size_t cols = x.dim(1);
  Tensor out({end - begin, cols}, detail::needs_grad({&x}));
  std::copy_n(x.data().begin() + static_cast<long>(begin * cols), out.size(), out.data().begin());
  if (out.requires_grad()) {
    detail::record("slice_rows", {x}, out, [x, out, begin, cols] {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[begin * cols + i] += go[i];
    });
  }
  return out;
}

inline Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  detail::expect_rank(x, 2, "slice_cols", "input");
  if (begin >= end || end > x.dim(1)) throw ShapeError("slice_cols: bad range for " + shape_str(x.shape()));
  const std::size_t rows = x.dim(0), cols = x.dim(1), w = end - begin;
  Tensor out({rows, w}, detail::needs_grad({&x}));
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < w; ++j) od[r * w + j] = xd[r * cols + begin + j];
  if (out.requires_grad()) {
    detail::record("slice_cols", {x}, out, [x, out, rows, cols, begin, w] {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) gx[r * cols + begin + j] += go[r * w + j];
    });
  }
  return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::expect_rank(a, 2, "matmul", "left operand");
  detail::expect_rank(b, 2, "matmul", "right operand");
  const long M = static_cast<long>(a.dim(0)), K = static_cast<long>(a.dim(1)), N = static_cast<long>(b.dim(1));
  if (b.dim(0) != a.dim(1))
    throw ShapeError("matmul: inner dimension mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor out({a.dim(0), b.dim(1)}, detail::needs_grad({&a, &b}));
  detail::MatMap(out.data().data(), M, N).noalias() =
      detail::ConstMatMap(a.data().data(), M, K) * detail::ConstMatMap(b.data().data(), K, N);
  if (out.requires_grad()) {
    detail::record("matmul", {a, b}, out, [a, b, out, M, K, N] {
      detail::ConstMatMap go(out.grad().data(), M, N);
      if (a.requires_grad())
        detail::MatMap(a.grad().data(), M, K).noalias() += go * detail::ConstMatMap(b.data().data(), K, N).transpose();
      if (b.requires_grad())
        detail::MatMap(b.grad().data(), K, N).noalias() += detail::ConstMatMap(a.data().data(), M, K).transpose() * go;
    });
  }
  return out;
}

inline Tensor sum(const Tensor& x) {
  double s = 0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s, detail::needs_grad({&x}));
  if (out.requires_grad()) {
    detail::record("sum", {x}, out, [x, out] {
      const double g = out.grad()[0];
      for (double& v : x.grad()) v += g;
    });
  }
  return out;
}

inline Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

// ---------------------------------------------------------------------------
// Normalisation, pooling to sequences, dropout

struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;

  BatchNormStats() = default;
  explicit BatchNormStats(std::size_t features) : mean(features, 0.0), var(features, 1.0) {}
};

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
};

// Per-feature normalisation of rows x F. Train mode uses the batch's biased
// statistics and updates `stats`; eval mode uses `stats`.
inline Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats, Mode mode,
                        BatchNormOptions opt = {}) {
  detail::expect_rank(x, 2, "batchnorm", "input");
  const std::size_t M = x.dim(0), F = x.dim(1);
  if (M == 0) throw ShapeError("batchnorm: zero-size batch");
  if (gamma.size() != F || beta.size() != F) throw ShapeError("batchnorm: gamma/beta must have " + std::to_string(F) + " features");
  if (stats.mean.size() != F) stats = BatchNormStats(F);
  auto xd = x.data();
  std::vector<double> mu(F, 0.0), var(F, 0.0);
  if (mode == Mode::Train) {
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t f = 0; f < F; ++f) mu[f] += xd[r * F + f];
    for (auto& m : mu) m /= static_cast<double>(M);
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t f = 0; f < F; ++f) {
        const double d = xd[r * F + f] - mu[f];
        var[f] += d * d;
      }
    for (auto& v : var) v /= static_cast<double>(M);
    for (std::size_t f = 0; f < F; ++f) {
      stats.mean[f] = opt.momentum * stats.mean[f] + (1.0 - opt.momentum) * mu[f];
      stats.var[f] = opt.momentum * stats.var[f] + (1.0 - opt.momentum) * var[f];
    }
  } else {
    mu = stats.mean;
    var = stats.var;
  }
  std::vector<double> inv_std(F);
  for (std::size_t f = 0; f < F; ++f) inv_std[f] = 1.0 / std::sqrt(var[f] + opt.eps);
  std::vector<double> xhat(M * F);
  Tensor out({M, F}, detail::needs_grad({&x, &gamma, &beta}));
  auto od = out.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  for (std::size_t r = 0; r < M; ++r)
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t i = r * F + f;
      xhat[i] = (xd[i] - mu[f]) * inv_std[f];
      od[i] = gd[f] * xhat[i] + bd[f];
    }
  if (out.requires_grad()) {
    detail::record("batchnorm", {x, gamma, beta}, out,
                   [x, gamma, beta, out, M, F, mode, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
                     auto go = out.grad();
                     auto gd = gamma.data();
                     std::vector<double> sum_g(F, 0.0), sum_gx(F, 0.0);
                     for (std::size_t r = 0; r < M; ++r)
                       for (std::size_t f = 0; f < F; ++f) {
                         sum_g[f] += go[r * F + f];
                         sum_gx[f] += go[r * F + f] * xhat[r * F + f];
                       }
                     if (gamma.requires_grad()) {
                       auto gg = gamma.grad();
                       for (std::size_t f = 0; f < F; ++f) gg[f] += sum_gx[f];
                     }
                     if (beta.requires_grad()) {
                       auto gb = beta.grad();
                       for (std::size_t f = 0; f < F; ++f) gb[f] += sum_g[f];
                     }
                     if (x.requires_grad()) {
                       auto gx = x.grad();
                       const double m = static_cast<double>(M);
                       for (std::size_t r = 0; r < M; ++r)
                         for (std::size_t f = 0; f < F; ++f) {
                           const std::size_t i = r * F + f;
                           if (mode == Mode::Train)
                             gx[i] += gd[f] * inv_std[f] * (go[i] - sum_g[f] / m - xhat[i] * sum_gx[f] / m);
                           else
                             gx[i] += gd[f] * inv_std[f] * go[i];
                         }
                     }
                   });
  }
  return out;
}

enum class PoolAxes { Full, Height, Width };

// H x W x C map averaged over the chosen axes: Full -> C, Width -> H x C,
// Height -> W x C.
inline Tensor global_avg_pool(const Tensor& x, PoolAxes axes = PoolAxes::Full) {
  detail::expect_rank(x, 3, "global_avg_pool", "input");
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  Shape shape = axes == PoolAxes::Full ? Shape{C} : axes == PoolAxes::Width ? Shape{H, C} : Shape{W, C};
  const double inv = 1.0 / static_cast<double>(axes == PoolAxes::Full ? H * W : axes == PoolAxes::Width ? W : H);
  auto target = [=](std::size_t y, std::size_t xx, std::size_t c) {
    switch (axes) {
      case PoolAxes::Full: return c;
      case PoolAxes::Width: return y * C + c;
      case PoolAxes::Height: return xx * C + c;
    }
    return c;
  };
  Tensor out(shape, detail::needs_grad({&x}));
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t xx = 0; xx < W; ++xx)
      for (std::size_t c = 0; c < C; ++c) od[target(y, xx, c)] += xd[(y * W + xx) * C + c];
  for (double& v : od) v *= inv;
  if (out.requires_grad()) {
    detail::record("global_avg_pool", {x}, out, [x, out, H, W, C, inv, target] {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx)
          for (std::size_t c = 0; c < C; ++c) gx[(y * W + xx) * C + c] += go[target(y, xx, c)] * inv;
    });
  }
  return out;
}

// Inverted dropout: survivors are scaled by 1/(1-p) in train mode; eval is identity.
inline Tensor dropout(const Tensor& x, double p, Mode mode, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("dropout probability must lie in [0, 1)");
  if (mode == Mode::Eval || p == 0.0) {
    return detail::unary(
        x, "dropout", [](double v) { return v; }, [](double, double) { return 1.0; });
  }
  Rng rng(seed);
  std::vector<double> mask(x.size());
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep;
  Tensor out(x.shape(), detail::needs_grad({&x}));
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] * mask[i];
  if (out.requires_grad()) {
    detail::record("dropout", {x}, out, [x, out, mask = std::move(mask)] {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * mask[i];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classifier output

struct SoftmaxXent {
  Tensor probabilities;  // rows x classes, no gradient
  Tensor loss;           // scalar mean cross-entropy
};

namespace detail {

inline void softmax_rows(std::span<const double> logits, std::size_t rows, std::size_t n, std::span<double> probs) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = logits.data() + r * n;
    double* p = probs.data() + r * n;
    const double zmax = *std::max_element(z, z + n);
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += (p[c] = std::exp(z[c] - zmax));
    for (std::size_t c = 0; c < n; ++c) p[c] /= s;
  }
}

}  // namespace detail

// Affine map, max-shifted softmax and mean cross-entropy against `labels`.
inline SoftmaxXent dense_softmax_xent(const Tensor& features, const Tensor& weights, const Tensor& bias,
                                      std::span<const std::size_t> labels) {
  if (features.rank() != 1 && features.rank() != 2) throw ShapeError("dense_softmax_xent: features must be F or rows x F");
  detail::expect_rank(weights, 2, "dense_softmax_xent", "weights");
  const std::size_t rows = features.rank() == 1 ? 1 : features.dim(0);
  const std::size_t F = features.rank() == 1 ? features.size() : features.dim(1);
  const std::size_t n = weights.dim(1);
  if (weights.dim(0) != F) throw ShapeError("dense_softmax_xent: weights expect " + std::to_string(weights.dim(0)) + " features, got " + std::to_string(F));
  if (bias.size() != n) throw ShapeError("dense_softmax_xent: bias must have " + std::to_string(n) + " entries");
  if (labels.size() != rows) throw ShapeError("dense_softmax_xent: one label per row required");
  for (std::size_t l : labels)
    if (l >= n) throw DomainError("label " + std::to_string(l) + " outside [0, " + std::to_string(n) + ")");

  Buffer logits(rows * n);
  detail::MatMap(logits.data(), static_cast<long>(rows), static_cast<long>(n)).noalias() =
      detail::ConstMatMap(features.data().data(), static_cast<long>(rows), static_cast<long>(F)) *
      detail::ConstMatMap(weights.data().data(), static_cast<long>(F), static_cast<long>(n));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c) logits[r * n + c] += bias.data()[c];
  Tensor probs({rows, n});
  detail::softmax_rows(logits, rows, n, probs.data());

  // Cross-entropy from log-softmax to keep saturated logits exact.
  double loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = logits.data() + r * n;
    const double zmax = *std::max_element(z, z + n);
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += std::exp(z[c] - zmax);
    loss += -(z[labels[r]] - zmax - std::log(s));
  }
  loss /= static_cast<double>(rows);
  Tensor loss_t = Tensor::scalar(loss, detail::needs_grad({&features, &weights, &bias}));
  if (loss_t.requires_grad()) {
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    detail::record("dense_softmax_xent", {features, weights, bias}, loss_t,
                   [features, weights, bias, loss_t, probs, lab = std::move(lab), rows, F, n] {
                     const double g = loss_t.grad()[0] / static_cast<double>(rows);
                     detail::RowMat dz(static_cast<long>(rows), static_cast<long>(n));
                     auto pd = probs.data();
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t c = 0; c < n; ++c)
                         dz(static_cast<long>(r), static_cast<long>(c)) = g * (pd[r * n + c] - (c == lab[r] ? 1.0 : 0.0));
                     if (weights.requires_grad())
                       detail::MatMap(weights.grad().data(), static_cast<long>(F), static_cast<long>(n)).noalias() +=
                           detail::ConstMatMap(features.data().data(), static_cast<long>(rows), static_cast<long>(F)).transpose() * dz;
                     if (bias.requires_grad())
                       Eigen::Map<Eigen::RowVectorXd>(bias.grad().data(), static_cast<long>(n)) += dz.colwise().sum();
                     if (features.requires_grad())
                       detail::MatMap(features.grad().data(), static_cast<long>(rows), static_cast<long>(F)).noalias() +=
                           dz * detail::ConstMatMap(weights.data().data(), static_cast<long>(F), static_cast<long>(n)).transpose();
                   });
  }
  return {probs, loss_t};
}

// Inference-only probabilities (rows x classes).
inline Tensor dense_softmax(const Tensor& features, const Tensor& weights, const Tensor& bias) {
  const std::size_t rows = features.rank() == 1 ? 1 : features.dim(0);
  std::vector<std::size_t> dummy(rows, 0);
  NoGradScope no_grad;
  return dense_softmax_xent(features, weights, bias, dummy).probabilities;
}

}  // namespace riac::ad
