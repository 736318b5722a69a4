#pragma once
// Small synthetic skeleton corpus whose classes are separable by construction:
//   arm   - both arms swing out and up, everything else still
//   leg   - legs lift sideways in turn, everything else still
//   whole - torso sways, elbows pump across the chest, knees bend
// Uses the 20-joint Kinect layout so the standard part partition applies.

#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "riac/rng.hpp"
#include "riac/skeleton_io.hpp"

namespace riac::synth {

using skeleton::ActionSequence;
using skeleton::Joint3D;

inline const std::vector<std::string>& synthetic_classes() {
  static const std::vector<std::string> names = {"arm", "leg", "whole"};
  return names;
}

struct SyntheticOptions {
  std::size_t subjects = 10;  // one sequence per (class, subject)
  std::size_t min_frames = 40;
  std::size_t max_frames = 90;
  double noise = 0.004;  // metres
  std::uint64_t seed = 7;
};

namespace detail {

// Standing pose, metres; x to the subject's right, y up, z toward the camera.
inline std::array<Joint3D, 20> rest_pose() {
  return {{{0.0, 0.0, 0.0},     {0.0, 0.25, 0.0},    {0.0, 0.5, 0.0},      {0.0, 0.7, 0.0},      // hip, spine, neck, head
           {-0.18, 0.48, 0.0},  {-0.18, 0.2, 0.0},   {-0.18, -0.05, 0.0},  {-0.18, -0.12, 0.0},  // left arm
           {0.18, 0.48, 0.0},   {0.18, 0.2, 0.0},    {0.18, -0.05, 0.0},   {0.18, -0.12, 0.0},   // right arm
           {-0.1, -0.02, 0.0},  {-0.1, -0.45, 0.0},  {-0.1, -0.85, 0.0},   {-0.1, -0.9, 0.08},   // left leg
           {0.1, -0.02, 0.0},   {0.1, -0.45, 0.0},   {0.1, -0.85, 0.0},    {0.1, -0.9, 0.08}}};  // right leg
}

// Rotates joints [first, last] about `pivot` in the image plane.
inline void rotate_xy(std::array<Joint3D, 20>& j, std::size_t first, std::size_t last, const Joint3D& pivot, double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  for (std::size_t k = first; k <= last; ++k) {
    const double dx = j[k].x - pivot.x, dy = j[k].y - pivot.y;
    j[k].x = pivot.x + c * dx - s * dy;
    j[k].y = pivot.y + s * dx + c * dy;
  }
}

inline std::array<Joint3D, 20> pose(int label, double phase, double amp) {
  constexpr double deg = std::numbers::pi / 180.0;
  auto j = rest_pose();
  const double lift = 0.5 * (1.0 - std::cos(phase));  // 0..1
  if (label == 0) {
    rotate_xy(j, 5, 7, j[4], -150.0 * deg * amp * lift);
    rotate_xy(j, 9, 11, j[8], 150.0 * deg * amp * lift);
  } else if (label == 1) {
    rotate_xy(j, 13, 15, j[12], -40.0 * deg * amp * std::max(0.0, std::sin(phase)));
    rotate_xy(j, 17, 19, j[16], 40.0 * deg * amp * std::max(0.0, -std::sin(phase)));
  } else {
    // Forearms fold inward across the chest, then the upper body sways.
    rotate_xy(j, 6, 7, j[5], 110.0 * deg * amp * lift);
    rotate_xy(j, 10, 11, j[9], -110.0 * deg * amp * lift);
    rotate_xy(j, 1, 11, j[0], 15.0 * deg * amp * std::sin(phase));
    // Knees bow outward while the hips drop; feet stay planted.
    const double bend = 0.12 * amp * lift;
    for (std::size_t k : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 16}) j[k].y -= bend;
    j[13].x -= 0.6 * bend;
    j[13].y -= 0.5 * bend;
    j[17].x += 0.6 * bend;
    j[17].y -= 0.5 * bend;
  }
  return j;
}

}  // namespace detail

inline std::vector<ActionSequence> synthetic_corpus(const SyntheticOptions& opt = {}) {
  if (opt.subjects == 0 || opt.min_frames < 2 || opt.max_frames < opt.min_frames)
    throw DomainError("synthetic corpus: need at least one subject and 2 <= min_frames <= max_frames");
  std::vector<ActionSequence> out;
  for (int label = 0; label < 3; ++label) {
    for (std::size_t s = 1; s <= opt.subjects; ++s) {
      Rng rng(derive_seed(opt.seed, "synthetic", static_cast<std::uint64_t>(label), s));
      ActionSequence seq;
      seq.dataset = "synthetic";
      seq.label = label;
      seq.label_name = synthetic_classes()[static_cast<std::size_t>(label)];
      seq.subject = static_cast<int>(s);
      seq.trial = 1;
      seq.id = "c" + std::to_string(label) + "_s" + skeleton::detail::two_digits(static_cast<int>(s));
      const std::size_t n = opt.min_frames + rng.below(opt.max_frames - opt.min_frames + 1);
      const double cycles = rng.uniform(1.5, 2.5);
      const double phase0 = rng.uniform(0.0, 0.5);
      const double amp = rng.uniform(0.8, 1.2);
      const double scale = rng.uniform(0.9, 1.1);
      const Joint3D offset{rng.uniform(-0.3, 0.3), rng.uniform(-0.1, 0.1), rng.uniform(2.0, 3.0)};
      for (std::size_t t = 0; t < n; ++t) {
        const double phase = phase0 + 2.0 * std::numbers::pi * cycles * static_cast<double>(t) / static_cast<double>(n - 1);
        skeleton::SkeletonFrame f;
        for (const auto& p : detail::pose(label, phase, amp))
          f.joints.push_back({offset.x + scale * p.x + opt.noise * rng.normal(), offset.y + scale * p.y + opt.noise * rng.normal(),
                              offset.z + scale * p.z + opt.noise * rng.normal()});
        seq.frames.push_back(std::move(f));
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

// Single fold: the listed subjects are tested, everyone else trains.
inline skeleton::SplitSpec subject_holdout(const skeleton::DatasetManifest& m, const std::set<int>& test_subjects) {
  skeleton::SplitSpec spec;
  spec.protocol = "holdout";
  skeleton::Fold f;
  for (const auto& e : m.entries) (test_subjects.count(e.subject) ? f.test : f.train).push_back(e.id);
  spec.folds.push_back(std::move(f));
  return spec;
}

}  // namespace riac::synth
