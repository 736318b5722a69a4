#pragma once
// Dense double-precision tensors with a reverse-mode tape.
//
// A Tensor is a shared handle: copies alias the same storage, like the
// tensors of most deep-learning frameworks. Operations record themselves on
// the thread's active Tape (see TapeScope) when any input requires a
// gradient; backward() replays the records in reverse.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "riac/error.hpp"

namespace riac::ad {

using Shape = std::vector<std::size_t>;

// Vectorised Eigen kernels peel differently depending on where a buffer
// starts, which changes summation order. Aligning every buffer the kernels
// see to the widest vector width keeps results bit-reproducible.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false) : impl_(std::make_shared<Impl>()) {
    impl_->data.assign(numel(shape), 0.0);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
  }

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false) : impl_(std::make_shared<Impl>()) {
    if (values.size() != numel(shape))
      throw ShapeError("tensor data length " + std::to_string(values.size()) + " does not match shape " + shape_str(shape));
    impl_->shape = std::move(shape);
    impl_->data.assign(values.begin(), values.end());
    impl_->requires_grad = requires_grad;
  }

  static Tensor scalar(double v, bool requires_grad = false) { return Tensor(Shape{}, {v}, requires_grad); }

  static Tensor full(Shape shape, double v, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), v);
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<double> data() const { return impl_->data; }

  // Allocated (zero-filled) on first access.
  std::span<double> grad() const {
    if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
  }
  bool has_grad() const { return impl_->grad.size() == impl_->data.size() && !impl_->data.empty(); }
  void zero_grad() const { impl_->grad.assign(impl_->data.size(), 0.0); }
  void drop_grad() const { impl_->grad.clear(); }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) const { impl_->requires_grad = on; }

  double item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
  }

  // Copy of the values, disconnected from any graph.
  Tensor detach() const { return clone(false); }

  Tensor clone(bool requires_grad) const {
    Tensor t(impl_->shape, requires_grad);
    t.impl_->data = impl_->data;
    return t;
  }

  bool same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    Buffer data;
    Buffer grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Tape

class Tape {
 public:
  struct Record {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(std::string_view op, std::vector<Tensor> inputs, Tensor output, std::function<void()> fn) {
    records_.push_back({std::string(op), std::move(inputs), std::move(output), std::move(fn)});
  }

  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  void clear() { records_.clear(); }

  bool produced(const Tensor& t) const {
    for (const auto& r : records_)
      if (r.output.same(t)) return true;
    return false;
  }

 private:
  std::vector<Record> records_;
};

namespace detail {
inline thread_local Tape* active_tape = nullptr;
}  // namespace detail

inline Tape* active_tape() { return detail::active_tape; }

class TapeScope {
 public:
  explicit TapeScope(Tape& tape) : previous_(detail::active_tape) { detail::active_tape = &tape; }
  ~TapeScope() { detail::active_tape = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

class NoGradScope {
 public:
  NoGradScope() : previous_(detail::active_tape) { detail::active_tape = nullptr; }
  ~NoGradScope() { detail::active_tape = previous_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

// Reverse sweep from a scalar loss. Gradients accumulate into existing grad
// buffers; every grad-requiring input on the tape ends with a buffer (zero
// when unreachable from the loss).
inline void backward(Tape& tape, const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) throw ShapeError("backward() needs a scalar loss");
  if (!tape.produced(loss)) throw DomainError("backward(): loss was not produced on this tape");
  for (const auto& r : tape.records())
    for (const auto& in : r.inputs)
      if (in.requires_grad()) (void)in.grad();
  loss.grad()[0] += 1.0;
  const auto& recs = tape.records();
  for (auto it = recs.rbegin(); it != recs.rend(); ++it)
    if (it->output.has_grad()) it->backward();
}

namespace detail {

inline bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  if (!active_tape) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

// Watches non-differentiable points (ReLU at 0, max-pool ties) during
// gradient checking. The base evaluation records each kinked operation's
// inputs; a probe evaluation flags contamination when some unit sits closer
// to its kink than `factor` times the displacement the probe induced there.
struct KinkMonitor {
  enum class Phase { Record, Probe };
  Phase phase = Phase::Record;
  double factor = 10.0;
  std::vector<std::vector<double>> base;
  std::vector<std::size_t> window;  // pool window size per call, 0 for ReLU
  std::vector<std::size_t> stride;
  std::vector<Shape> shapes;
  std::size_t cursor = 0;
  bool contaminated = false;
};

inline thread_local KinkMonitor* kink_monitor = nullptr;

inline void observe_relu(std::span<const double> z) {
  KinkMonitor* m = kink_monitor;
  if (!m) return;
  if (m->phase == KinkMonitor::Phase::Record) {
    m->base.emplace_back(z.begin(), z.end());
    m->window.push_back(0);
    m->stride.push_back(0);
    m->shapes.push_back({});
    return;
  }
  if (m->cursor >= m->base.size()) {
    m->contaminated = true;
    return;
  }
  const auto& b = m->base[m->cursor++];
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double shift = std::abs(z[i] - b[i]);
    if (shift > 0.0 && std::abs(b[i]) < m->factor * shift) {
      m->contaminated = true;
      return;
    }
  }
}

inline void observe_maxpool(std::span<const double> x, const Shape& shape, std::size_t k, std::size_t s) {
  KinkMonitor* m = kink_monitor;
  if (!m) return;
  if (m->phase == KinkMonitor::Phase::Record) {
    m->base.emplace_back(x.begin(), x.end());
    m->window.push_back(k);
    m->stride.push_back(s);
    m->shapes.push_back(shape);
    return;
  }
  if (m->cursor >= m->base.size()) {
    m->contaminated = true;
    return;
  }
  const auto& b = m->base[m->cursor++];
  const std::size_t H = shape[0], W = shape[1], C = shape[2];
  const std::size_t Ho = (H - k) / s + 1, Wo = (W - k) / s + 1;
  for (std::size_t oy = 0; oy < Ho; ++oy)
    for (std::size_t ox = 0; ox < Wo; ++ox)
      for (std::size_t c = 0; c < C; ++c) {
        double top1 = -INFINITY, top2 = -INFINITY, shift = 0.0;
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::size_t i = ((oy * s + ky) * W + (ox * s + kx)) * C + c;
            const double v = b[i];
            if (v > top1) {
              top2 = top1;
              top1 = v;
            } else if (v > top2) {
              top2 = v;
            }
            shift = std::max(shift, std::abs(x[i] - v));
          }
        if (shift > 0.0 && (top1 - top2) < m->factor * shift) {
          m->contaminated = true;
          return;
        }
      }
}

}  // namespace detail

}  // namespace riac::ad
