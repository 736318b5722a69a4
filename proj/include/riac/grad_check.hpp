#pragma once
// Central-difference gradient verification.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "riac/ops.hpp"
#include "riac/rng.hpp"
#include "riac/tensor.hpp"

namespace riac::ad {

// The base point lies too close to a ReLU or max-pool kink for a central
// difference to be meaningful.
struct PointRejected : DomainError {
  explicit PointRejected(const std::string& w) : DomainError(w) {}
};

struct GradCheckOptions {
  double eps = 1e-4;
  // 0 checks every coordinate and rejects the point on any kink hit.
  // Otherwise this many coordinates per tensor are sampled, and a sampled
  // coordinate whose probes straddle a kink is replaced by another.
  std::size_t coords_per_tensor = 0;
  std::uint64_t seed = 0;
  // A probe can only cross a ReLU kink when |z| < shift, and swap a max-pool
  // winner when the top-two gap < 2 shift; 2 covers both.
  double kink_factor = 2.0;
  std::size_t max_replacements = 64;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<double> per_tensor;
  std::size_t coords_checked = 0;
  std::size_t coords_replaced = 0;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// `f` must build a scalar from the tensors in `wrt` on the active tape.
inline GradCheckResult grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& wrt,
                                  const GradCheckOptions& opt = {}) {
  detail::KinkMonitor monitor;
  monitor.factor = opt.kink_factor;
  struct MonitorGuard {
    detail::KinkMonitor* prev;
    explicit MonitorGuard(detail::KinkMonitor* m) : prev(detail::kink_monitor) { detail::kink_monitor = m; }
    ~MonitorGuard() { detail::kink_monitor = prev; }
  } guard(&monitor);

  for (const auto& t : wrt) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = f();
  }
  if (loss.size() != 1) throw ShapeError("grad_check: function must be scalar-valued");
  backward(tape, loss);
  std::vector<std::vector<double>> analytic;
  for (const auto& t : wrt) analytic.emplace_back(t.grad().begin(), t.grad().end());
  tape.clear();

  monitor.phase = detail::KinkMonitor::Phase::Probe;
  auto probe = [&](const Tensor& t, std::size_t i, double delta, bool& kinked) {
    auto d = t.data();
    const double orig = d[i];
    d[i] = orig + delta;
    monitor.cursor = 0;
    monitor.contaminated = false;
    double v;
    {
      NoGradScope no_grad;
      v = f().item();
    }
    kinked = kinked || monitor.contaminated;
    d[i] = orig;
    return v;
  };

  GradCheckResult result;
  Rng rng(opt.seed);
  for (std::size_t ti = 0; ti < wrt.size(); ++ti) {
    const Tensor& t = wrt[ti];
    double worst = 0.0;
    std::vector<std::size_t> coords;
    std::set<std::size_t> tried;
    if (opt.coords_per_tensor == 0 || opt.coords_per_tensor >= t.size()) {
      for (std::size_t i = 0; i < t.size(); ++i) coords.push_back(i);
    } else {
      while (coords.size() < opt.coords_per_tensor) {
        const std::size_t i = rng.below(t.size());
        if (tried.insert(i).second) coords.push_back(i);
      }
    }
    const bool sampled = opt.coords_per_tensor != 0 && opt.coords_per_tensor < t.size();
    std::size_t replacements = 0;
    for (std::size_t c = 0; c < coords.size(); ++c) {
      const std::size_t i = coords[c];
      bool kinked = false;
      const double fp = probe(t, i, opt.eps, kinked);
      const double fm = probe(t, i, -opt.eps, kinked);
      if (kinked) {
        if (!sampled)
          throw PointRejected("grad_check: tensor " + std::to_string(ti) + " coordinate " + std::to_string(i) +
                              " lies within " + std::to_string(opt.kink_factor) + " eps of a kink");
        if (++replacements > opt.max_replacements || tried.size() >= t.size())
          throw PointRejected("grad_check: tensor " + std::to_string(ti) + " has too many coordinates near kinks");
        std::size_t j;
        do j = rng.below(t.size());
        while (!tried.insert(j).second);
        coords.push_back(j);
        ++result.coords_replaced;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * opt.eps);
      worst = std::max(worst, relative_error(analytic[ti][i], numeric));
      ++result.coords_checked;
    }
    result.per_tensor.push_back(worst);
    result.max_rel_error = std::max(result.max_rel_error, worst);
  }
  return result;
}

}  // namespace riac::ad
