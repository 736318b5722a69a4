#pragma once
// Shared fixtures: scratch directories and tiny raw-format dataset writers.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>

#include "riac/skeleton_io.hpp"

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("riac_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

// Joint j of frame f: a deterministic, non-degenerate coordinate.
inline riac::skeleton::Joint3D fixture_joint(std::size_t j, long f) {
  return {0.1 * static_cast<double>(j) + 0.01 * static_cast<double>(f), 0.05 * static_cast<double>(j % 7),
          2.0 + 0.001 * static_cast<double>(f)};
}

// UT Kinect layout for one subject/trial: frames 1..n, two annotated actions.
inline void write_utkinect(const fs::path& root, int subject, int trial, long n_frames) {
  char key[16];
  std::snprintf(key, sizeof key, "s%02d_e%02d", subject, trial);
  std::ofstream lab(root / "actionLabel.txt", std::ios::app);
  lab << key << "\nwalk: 1 " << n_frames / 2 << "\nsitDown: " << n_frames / 2 + 1 << ' ' << n_frames << '\n';
  fs::create_directories(root / "joints");
  std::ofstream js(root / "joints" / ("joints_" + std::string(key) + ".txt"));
  for (long f = 1; f <= n_frames; ++f) {
    js << f;
    for (std::size_t j = 0; j < 20; ++j) {
      auto p = fixture_joint(j, f);
      js << ' ' << p.x << ' ' << p.y << ' ' << p.z;
    }
    js << '\n';
  }
}

// MSR layout: a frame-count header line then 20 "x y z c" rows per frame.
inline void write_msr(const fs::path& root, int action, int subject, int trial, long n_frames) {
  fs::create_directories(root);
  char name[64];
  std::snprintf(name, sizeof name, "a%02d_s%02d_e%02d_skeleton3D.txt", action, subject, trial);
  std::ofstream os(root / name);
  os << n_frames << " 20\n";
  for (long f = 0; f < n_frames; ++f)
    for (std::size_t j = 0; j < 20; ++j) {
      auto p = fixture_joint(j, f);
      os << p.x << ' ' << p.y << ' ' << p.z << " 1\n";
    }
}

// Florence layout: "gesture actor category" + 45 reals per line.
inline void append_florence(const fs::path& file, int gesture, int actor, int category, long n_frames) {
  std::ofstream os(file, std::ios::app);
  for (long f = 0; f < n_frames; ++f) {
    os << gesture << ' ' << actor << ' ' << category;
    for (std::size_t j = 0; j < 15; ++j) {
      auto p = fixture_joint(j, f);
      os << ' ' << p.x << ' ' << p.y << ' ' << p.z;
    }
    os << '\n';
  }
}

// A manifest-only corpus: `per` entries per (class, subject) pair.
inline riac::skeleton::DatasetManifest grid_manifest(const std::string& dataset, std::size_t classes, int subjects, int per) {
  riac::skeleton::DatasetManifest m;
  m.dataset = dataset;
  m.class_names = riac::skeleton::dataset_classes(dataset);
  m.joint_count = riac::skeleton::dataset_joint_count(dataset);
  for (int s = 1; s <= subjects; ++s)
    for (int t = 1; t <= per; ++t)
      for (std::size_t c = 0; c < classes; ++c) {
        riac::skeleton::ManifestEntry e;
        e.id = "c" + std::to_string(c) + "_s" + std::to_string(s) + "_e" + std::to_string(t);
        e.label = static_cast<int>(c);
        e.subject = s;
        e.trial = t;
        e.path = "sequences/" + e.id + ".seq";
        if (dataset == "msr") e.subsets = riac::skeleton::msr_subset_tags(e.label);
        m.entries.push_back(e);
      }
  return m;
}

}  // namespace testutil
