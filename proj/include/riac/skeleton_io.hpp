#pragma once
// Skeleton datasets: parsing of the three raw layouts, the canonical
// sequence record, temporal resampling, body-part partitioning and
// evaluation splits.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "riac/error.hpp"

namespace riac::skeleton {

namespace fs = std::filesystem;

struct Joint3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
  friend bool operator==(const Joint3D&, const Joint3D&) = default;
};

struct SkeletonFrame {
  std::vector<Joint3D> joints;
  friend bool operator==(const SkeletonFrame&, const SkeletonFrame&) = default;
};

struct ActionSequence {
  std::string dataset;
  std::string id;
  int label = 0;
  std::string label_name;
  int subject = 0;
  int trial = 0;
  std::vector<SkeletonFrame> frames;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t joint_count() const { return frames.empty() ? 0 : frames.front().joints.size(); }
};

// Throws DomainError when the sequence violates its invariants.
inline void validate(const ActionSequence& seq) {
  if (seq.frames.empty()) throw DomainError("sequence '" + seq.id + "' has no frames");
  const std::size_t k = seq.joint_count();
  if (k == 0) throw DomainError("sequence '" + seq.id + "' has frames without joints");
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    if (seq.frames[f].joints.size() != k)
      throw DomainError("sequence '" + seq.id + "': frame " + std::to_string(f) + " has " +
                        std::to_string(seq.frames[f].joints.size()) + " joints, expected " +
                        std::to_string(k));
    for (const auto& j : seq.frames[f].joints)
      if (!j.finite())
        throw DomainError("sequence '" + seq.id + "': non-finite joint in frame " + std::to_string(f));
  }
}

// ---------------------------------------------------------------------------
// Class tables

inline const std::vector<std::string>& utkinect_classes() {
  static const std::vector<std::string> names = {"walk", "sitDown", "standUp", "pickUp",    "carry",
                                                 "throw", "push",   "pull",    "waveHands", "clapHands"};
  return names;
}

inline const std::vector<std::string>& florence_classes() {
  static const std::vector<std::string> names = {"wave",      "drink",   "answerPhone", "clap", "tightLace",
                                                 "sitDown",   "standUp", "readWatch",   "bow"};
  return names;
}

inline const std::vector<std::string>& msr_classes() {
  static const std::vector<std::string> names = {
      "highArmWave", "horizontalArmWave", "hammer",    "handCatch", "forwardPunch",
      "highThrow",   "drawX",             "drawTick",  "drawCircle", "handClap",
      "twoHandWave", "sideBoxing",        "bend",      "forwardKick", "sideKick",
      "jogging",     "tennisSwing",       "tennisServe", "golfSwing", "pickUpThrow"};
  return names;
}

// Zero-based MSR action indices of the three 8-action activity sets.
inline const std::vector<int>& msr_subset(int set) {
  static const std::array<std::vector<int>, 3> sets = {{
      {1, 2, 4, 5, 9, 12, 17, 19},
      {0, 3, 6, 7, 8, 10, 11, 13},
      {5, 13, 14, 15, 16, 17, 18, 19},
  }};
  if (set < 1 || set > 3) throw DomainError("MSR activity set must be 1, 2 or 3");
  return sets[static_cast<std::size_t>(set - 1)];
}

inline std::vector<std::string> msr_subset_tags(int label) {
  std::vector<std::string> tags;
  for (int s = 1; s <= 3; ++s) {
    const auto& members = msr_subset(s);
    if (std::find(members.begin(), members.end(), label) != members.end())
      tags.push_back("AS" + std::to_string(s));
  }
  return tags;
}

inline std::size_t dataset_joint_count(std::string_view dataset) {
  if (dataset == "florence") return 15;
  return 20;
}

inline const std::vector<std::string>& dataset_classes(std::string_view dataset) {
  if (dataset == "utkinect") return utkinect_classes();
  if (dataset == "florence") return florence_classes();
  if (dataset == "msr") return msr_classes();
  throw UsageError("unknown dataset '" + std::string(dataset) + "' (expected utkinect, florence or msr)");
}

// ---------------------------------------------------------------------------
// Body parts

enum class Part { HS, LL, RL, LH, RH, FS };

// Fusion order of the five parts (w_HS, w_LL, w_RL, w_LH, w_RH).
inline constexpr std::array<Part, 5> kFusedParts = {Part::HS, Part::LL, Part::RL, Part::LH, Part::RH};
inline constexpr std::array<Part, 6> kAllParts = {Part::FS, Part::HS, Part::LL, Part::RL, Part::LH, Part::RH};

inline std::string part_name(Part p) {
  switch (p) {
    case Part::HS: return "HS";
    case Part::LL: return "LL";
    case Part::RL: return "RL";
    case Part::LH: return "LH";
    case Part::RH: return "RH";
    case Part::FS: return "FS";
  }
  return "?";
}

inline Part parse_part(std::string_view s) {
  for (Part p : kAllParts)
    if (part_name(p) == s) return p;
  throw UsageError("unknown part '" + std::string(s) + "' (expected FS, HS, LL, RL, LH or RH)");
}

// Joint index lists (zero-based) for the five parts, in chain order.
struct PartitionScheme {
  std::size_t joint_count = 0;
  std::array<std::vector<std::size_t>, 5> parts;  // indexed like kFusedParts

  const std::vector<std::size_t>& joints(Part p) const {
    for (std::size_t i = 0; i < kFusedParts.size(); ++i)
      if (kFusedParts[i] == p) return parts[i];
    throw DomainError("FS has no joint list of its own");
  }

  // Disjoint cover of [0, joint_count) by five nonempty parts.
  void validate() const {
    std::vector<int> seen(joint_count, 0);
    for (const auto& part : parts) {
      if (part.empty()) throw DomainError("partition scheme has an empty part");
      for (std::size_t j : part) {
        if (j >= joint_count) throw DomainError("partition joint index out of range");
        if (seen[j]++) throw DomainError("partition parts overlap at joint " + std::to_string(j));
      }
    }
    for (std::size_t j = 0; j < joint_count; ++j)
      if (!seen[j]) throw DomainError("partition does not cover joint " + std::to_string(j));
  }
};

// Kinect 20-joint layout (J1 hip centre .. J20 right foot), indices zero-based.
inline PartitionScheme kinect20_scheme() {
  PartitionScheme s;
  s.joint_count = 20;
  s.parts = {{{3, 2, 1, 0}, {12, 13, 14, 15}, {16, 17, 18, 19}, {4, 5, 6, 7}, {8, 9, 10, 11}}};
  return s;
}

// OpenNI 15-joint layout: head, neck, spine, L shoulder/elbow/wrist,
// R shoulder/elbow/wrist, L hip/knee/ankle, R hip/knee/ankle.
inline PartitionScheme florence15_scheme() {
  PartitionScheme s;
  s.joint_count = 15;
  s.parts = {{{0, 1, 2}, {9, 10, 11}, {12, 13, 14}, {3, 4, 5}, {6, 7, 8}}};
  return s;
}

inline PartitionScheme scheme_for(std::size_t joint_count) {
  if (joint_count == 20) return kinect20_scheme();
  if (joint_count == 15) return florence15_scheme();
  throw DomainError("no partition scheme for " + std::to_string(joint_count) + " joints");
}

// One part's trajectories: rows are joints (in scheme order), columns frames.
// `chains` lists row-index runs joined by bones when rendered.
struct PartTrajectory {
  Part part = Part::FS;
  std::string sequence_id;
  std::vector<std::vector<Joint3D>> rows;
  std::vector<std::vector<std::size_t>> chains;

  std::size_t joint_count() const { return rows.size(); }
  std::size_t frame_count() const { return rows.empty() ? 0 : rows.front().size(); }
};

inline PartTrajectory extract_part(const ActionSequence& seq, const PartitionScheme& scheme, Part part) {
  if (seq.joint_count() != scheme.joint_count)
    throw DomainError("partition scheme expects " + std::to_string(scheme.joint_count) +
                      " joints but sequence '" + seq.id + "' has " + std::to_string(seq.joint_count()));
  PartTrajectory out;
  out.part = part;
  out.sequence_id = seq.id;
  auto add_joints = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> chain;
    for (std::size_t j : idx) {
      std::vector<Joint3D> row;
      row.reserve(seq.frames.size());
      for (const auto& f : seq.frames) row.push_back(f.joints[j]);
      chain.push_back(out.rows.size());
      out.rows.push_back(std::move(row));
    }
    out.chains.push_back(std::move(chain));
  };
  if (part == Part::FS) {
    // All joints in index order; bones are drawn within each part's chain.
    for (std::size_t j = 0; j < scheme.joint_count; ++j) {
      std::vector<Joint3D> row;
      for (const auto& f : seq.frames) row.push_back(f.joints[j]);
      out.rows.push_back(std::move(row));
    }
    for (const auto& idx : scheme.parts) out.chains.push_back(idx);
  } else {
    add_joints(scheme.joints(part));
  }
  return out;
}

inline std::map<Part, PartTrajectory> partition(const ActionSequence& seq, const PartitionScheme& scheme) {
  std::map<Part, PartTrajectory> out;
  for (Part p : kAllParts) out.emplace(p, extract_part(seq, scheme, p));
  return out;
}

// ---------------------------------------------------------------------------
// Resampling

// Uniform fractional-index linear interpolation, t_i = i (n-1)/(T-1).
inline ActionSequence resample(const ActionSequence& seq, std::size_t target_length = 60) {
  const std::size_t n = seq.frames.size();
  if (n < 2) throw DomainError("cannot resample degenerate sequence '" + seq.id + "' with " + std::to_string(n) + " frame(s)");
  if (target_length < 2) throw DomainError("resample target length must be at least 2");
  if (n == target_length) return seq;

  ActionSequence out = seq;
  out.frames.assign(target_length, SkeletonFrame{});
  const std::size_t k = seq.joint_count();
  for (std::size_t i = 0; i < target_length; ++i) {
    if (i == target_length - 1) {
      out.frames[i] = seq.frames[n - 1];
      continue;
    }
    const double t = static_cast<double>(i * (n - 1)) / static_cast<double>(target_length - 1);
    const auto lo = static_cast<std::size_t>(std::floor(t));
    const double frac = t - static_cast<double>(lo);
    const auto hi = std::min(lo + 1, n - 1);
    auto& joints = out.frames[i].joints;
    joints.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const Joint3D& a = seq.frames[lo].joints[j];
      const Joint3D& b = seq.frames[hi].joints[j];
      joints[j] = {a.x + (b.x - a.x) * frac, a.y + (b.y - a.y) * frac, a.z + (b.z - a.z) * frac};
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text helpers

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::optional<double> to_double(std::string_view tok) {
  double v = 0.0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline std::optional<long> to_long(std::string_view tok) {
  long v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline double parse_real(std::string_view tok, const std::string& file, std::size_t line) {
  auto v = to_double(tok);
  if (!v) throw ParseError(file, line, "malformed number '" + std::string(tok) + "'");
  if (!std::isfinite(*v)) throw ParseError(file, line, "non-finite coordinate '" + std::string(tok) + "'");
  return *v;
}

inline long parse_int(std::string_view tok, const std::string& file, std::size_t line) {
  auto v = to_long(tok);
  if (!v) {
    // Some distributions write integral ids as reals ("12.000").
    auto d = to_double(tok);
    if (!d || *d != std::floor(*d)) throw ParseError(file, line, "malformed integer '" + std::string(tok) + "'");
    return static_cast<long>(*d);
  }
  return *v;
}

inline std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open '" + p.string() + "'");
  return in;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// UT Kinect: joints_sSS_eEE.txt (frame number + 60 reals per line) and
// actionLabel.txt (a "sSS_eEE" header followed by "action: start end" lines).

inline std::vector<ActionSequence> parse_utkinect(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("UT Kinect root '" + root.string() + "' is not a directory");
  fs::path label_file = root / "actionLabel.txt";
  if (!fs::exists(label_file)) throw IoError("missing annotation file '" + label_file.string() + "'");
  fs::path joint_dir = fs::is_directory(root / "joints") ? root / "joints" : root;

  struct Interval {
    int label;
    long start, end;
  };
  std::map<std::string, std::vector<Interval>> intervals;
  {
    auto in = detail::open_input(label_file);
    std::string line, current;
    std::size_t ln = 0;
    const auto& classes = utkinect_classes();
    while (std::getline(in, line)) {
      ++ln;
      auto toks = detail::split_ws(line);
      if (toks.empty()) continue;
      if (toks.size() == 1) {
        current = std::string(toks[0]);
        intervals[current];
        continue;
      }
      if (current.empty()) throw ParseError(label_file.string(), ln, "interval before any sequence header");
      std::string name(toks[0]);
      if (!name.empty() && name.back() == ':') name.pop_back();
      if (toks.size() != 3) throw ParseError(label_file.string(), ln, "expected 'action: start end'");
      auto it = std::find_if(classes.begin(), classes.end(),
                             [&](const std::string& c) { return detail::lower(c) == detail::lower(name); });
      if (it == classes.end()) throw ParseError(label_file.string(), ln, "unknown action '" + name + "'");
      intervals[current].push_back({static_cast<int>(it - classes.begin()),
                                    detail::parse_int(toks[1], label_file.string(), ln),
                                    detail::parse_int(toks[2], label_file.string(), ln)});
    }
  }
  if (intervals.empty()) throw IoError("annotation file '" + label_file.string() + "' lists no sequences");

  static const std::regex name_re(R"(s(\d+)_e(\d+))");
  std::vector<ActionSequence> out;
  for (const auto& [key, ivs] : intervals) {
    std::smatch m;
    if (!std::regex_match(key, m, name_re)) throw ParseError(label_file.string(), 0, "bad sequence key '" + key + "'");
    const int subject = std::stoi(m[1]);
    const int trial = std::stoi(m[2]);
    fs::path jf = joint_dir / ("joints_" + key + ".txt");
    auto in = detail::open_input(jf);
    std::vector<std::pair<long, SkeletonFrame>> frames;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      auto toks = detail::split_ws(line);
      if (toks.empty()) continue;
      if (toks.size() != 61)
        throw ParseError(jf.string(), ln, "expected 61 tokens, found " + std::to_string(toks.size()));
      SkeletonFrame f;
      f.joints.resize(20);
      const long frame_no = detail::parse_int(toks[0], jf.string(), ln);
      for (std::size_t j = 0; j < 20; ++j)
        f.joints[j] = {detail::parse_real(toks[1 + 3 * j], jf.string(), ln),
                       detail::parse_real(toks[2 + 3 * j], jf.string(), ln),
                       detail::parse_real(toks[3 + 3 * j], jf.string(), ln)};
      frames.emplace_back(frame_no, std::move(f));
    }
    for (const auto& iv : ivs) {
      ActionSequence seq;
      seq.dataset = "utkinect";
      seq.label = iv.label;
      seq.label_name = utkinect_classes()[static_cast<std::size_t>(iv.label)];
      seq.subject = subject;
      seq.trial = trial;
      seq.id = key + "_" + seq.label_name;
      for (const auto& [no, f] : frames)
        if (no >= iv.start && no <= iv.end) seq.frames.push_back(f);
      if (seq.frames.empty())
        throw ParseError(jf.string(), 0, "no frames inside annotated interval of '" + seq.label_name + "'");
      out.push_back(std::move(seq));
    }
  }
  std::sort(out.begin(), out.end(), [](const ActionSequence& a, const ActionSequence& b) {
    return std::tie(a.subject, a.trial, a.label) < std::tie(b.subject, b.trial, b.label);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Florence: one file, each line "gesture actor category" + 45 reals; lines of
// one gesture are contiguous.

inline std::vector<ActionSequence> parse_florence(const fs::path& file) {
  if (fs::is_directory(file)) throw IoError("Florence input '" + file.string() + "' is a directory, expected the coordinates file");
  auto in = detail::open_input(file);
  std::vector<ActionSequence> out;
  std::set<long> finished;
  std::map<std::pair<long, long>, int> trial_counter;
  long current = -1;
  std::string line;
  std::size_t ln = 0;
  const std::string fname = file.string();
  while (std::getline(in, line)) {
    ++ln;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 48) throw ParseError(fname, ln, "expected 48 tokens, found " + std::to_string(toks.size()));
    const long gesture = detail::parse_int(toks[0], fname, ln);
    const long actor = detail::parse_int(toks[1], fname, ln);
    const long category = detail::parse_int(toks[2], fname, ln);
    if (category < 1 || category > 9) throw ParseError(fname, ln, "category " + std::to_string(category) + " outside 1..9");
    if (gesture != current) {
      if (finished.count(gesture))
        throw ParseError(fname, ln, "gesture " + std::to_string(gesture) + " is not contiguous in the file");
      if (current != -1) finished.insert(current);
      current = gesture;
      ActionSequence seq;
      seq.dataset = "florence";
      seq.id = "g" + std::to_string(gesture);
      seq.label = static_cast<int>(category - 1);
      seq.label_name = florence_classes()[static_cast<std::size_t>(seq.label)];
      seq.subject = static_cast<int>(actor);
      seq.trial = ++trial_counter[{actor, category}];
      out.push_back(std::move(seq));
    } else if (out.back().label != category - 1 || out.back().subject != actor) {
      throw ParseError(fname, ln, "gesture " + std::to_string(gesture) + " changes actor or category mid-sequence");
    }
    SkeletonFrame f;
    f.joints.resize(15);
    for (std::size_t j = 0; j < 15; ++j)
      f.joints[j] = {detail::parse_real(toks[3 + 3 * j], fname, ln), detail::parse_real(toks[4 + 3 * j], fname, ln),
                     detail::parse_real(toks[5 + 3 * j], fname, ln)};
    out.back().frames.push_back(std::move(f));
  }
  if (out.empty()) throw ParseError(fname, ln, "no skeleton lines found");
  return out;
}

// ---------------------------------------------------------------------------
// MSR Action3D: aAA_sSS_eEE_skeleton*.txt, blocks of `rows_per_frame` rows of
// "x y z confidence". With 40 rows the second 20 are world coordinates.
// Lines with at most two tokens are frame-count headers and are skipped.

inline std::vector<ActionSequence> parse_msr(const fs::path& root, std::size_t rows_per_frame = 20) {
  if (rows_per_frame != 20 && rows_per_frame != 40) throw UsageError("msr rows per frame must be 20 or 40");
  if (!fs::is_directory(root)) throw IoError("MSR root '" + root.string() + "' is not a directory");
  static const std::regex name_re(R"(a(\d+)_s(\d+)_e(\d+)_skeleton.*\.txt)");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_regular_file() && std::regex_match(e.path().filename().string(), name_re)) files.push_back(e.path());
  if (files.empty()) throw IoError("no MSR skeleton files under '" + root.string() + "'");
  std::sort(files.begin(), files.end());

  std::vector<ActionSequence> out;
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    const std::string fname = path.string();
    std::smatch m;
    std::regex_match(name, m, name_re);
    const int action = std::stoi(m[1]);
    if (action < 1 || action > 20) throw ParseError(fname, 0, "unknown action id " + std::to_string(action));
    ActionSequence seq;
    seq.dataset = "msr";
    seq.label = action - 1;
    seq.label_name = msr_classes()[static_cast<std::size_t>(seq.label)];
    seq.subject = std::stoi(m[2]);
    seq.trial = std::stoi(m[3]);
    seq.id = "a" + detail::two_digits(action) + "_s" + detail::two_digits(seq.subject) + "_e" +
             detail::two_digits(seq.trial);

    auto in = detail::open_input(path);
    std::vector<Joint3D> rows;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      auto toks = detail::split_ws(line);
      if (toks.size() <= 2) continue;
      if (toks.size() != 4) throw ParseError(fname, ln, "expected 4 tokens, found " + std::to_string(toks.size()));
      rows.push_back({detail::parse_real(toks[0], fname, ln), detail::parse_real(toks[1], fname, ln),
                      detail::parse_real(toks[2], fname, ln)});
    }
    if (rows.empty() || rows.size() % rows_per_frame != 0)
      throw ParseError(fname, ln,
                       "row count " + std::to_string(rows.size()) + " is not a multiple of " +
                           std::to_string(rows_per_frame) + " (truncated frame block)");
    const std::size_t offset = rows_per_frame - 20;
    for (std::size_t b = 0; b < rows.size(); b += rows_per_frame) {
      SkeletonFrame f;
      f.joints.assign(rows.begin() + static_cast<long>(b + offset),
                      rows.begin() + static_cast<long>(b + rows_per_frame));
      seq.frames.push_back(std::move(f));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical record: header "dataset label subject trial n_frames n_joints"
// then one line of 3*n_joints reals per frame.

inline void write_sequence(std::ostream& os, const ActionSequence& seq) {
  os << seq.dataset << ' ' << seq.label << ' ' << seq.subject << ' ' << seq.trial << ' ' << seq.frames.size() << ' '
     << seq.joint_count() << '\n';
  char buf[64];
  for (const auto& f : seq.frames) {
    for (std::size_t j = 0; j < f.joints.size(); ++j) {
      const auto& p = f.joints[j];
      for (double v : {p.x, p.y, p.z}) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        os.write(buf, end - buf);
        os << ' ';
      }
    }
    os << '\n';
  }
}

inline ActionSequence read_sequence(std::istream& is, const std::string& source, const std::string& id) {
  std::string line;
  std::size_t ln = 0;
  std::vector<std::string_view> toks;
  while (std::getline(is, line)) {
    ++ln;
    toks = detail::split_ws(line);
    if (!toks.empty()) break;
  }
  if (toks.size() != 6) throw ParseError(source, ln, "expected header 'dataset label subject trial n_frames n_joints'");
  ActionSequence seq;
  seq.dataset = std::string(toks[0]);
  seq.id = id;
  seq.label = static_cast<int>(detail::parse_int(toks[1], source, ln));
  seq.subject = static_cast<int>(detail::parse_int(toks[2], source, ln));
  seq.trial = static_cast<int>(detail::parse_int(toks[3], source, ln));
  const long n_frames = detail::parse_int(toks[4], source, ln);
  const long n_joints = detail::parse_int(toks[5], source, ln);
  if (n_frames < 1 || n_joints < 1) throw ParseError(source, ln, "header counts must be positive");
  if (seq.dataset == "utkinect" || seq.dataset == "florence" || seq.dataset == "msr") {
    const auto& names = dataset_classes(seq.dataset);
    if (seq.label < 0 || static_cast<std::size_t>(seq.label) >= names.size())
      throw ParseError(source, ln, "label " + std::to_string(seq.label) + " outside the dataset's class set");
    seq.label_name = names[static_cast<std::size_t>(seq.label)];
  }
  for (long f = 0; f < n_frames; ++f) {
    if (!std::getline(is, line)) throw ParseError(source, ln, "file ends before frame " + std::to_string(f));
    ++ln;
    toks = detail::split_ws(line);
    if (toks.size() != static_cast<std::size_t>(3 * n_joints))
      throw ParseError(source, ln, "expected " + std::to_string(3 * n_joints) + " reals");
    SkeletonFrame fr;
    fr.joints.resize(static_cast<std::size_t>(n_joints));
    for (std::size_t j = 0; j < fr.joints.size(); ++j)
      fr.joints[j] = {detail::parse_real(toks[3 * j], source, ln), detail::parse_real(toks[3 * j + 1], source, ln),
                      detail::parse_real(toks[3 * j + 2], source, ln)};
    seq.frames.push_back(std::move(fr));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Manifest: "# dataset <id> joints <k>" then "id class subject trial path".

struct ManifestEntry {
  std::string id;
  int label = 0;
  int subject = 0;
  int trial = 0;
  std::string path;
  std::vector<std::string> subsets;  // MSR activity-set tags
};

struct DatasetManifest {
  std::string dataset;
  std::vector<std::string> class_names;
  std::size_t joint_count = 0;
  std::vector<ManifestEntry> entries;

  std::vector<int> subject_ids() const {
    std::set<int> s;
    for (const auto& e : entries) s.insert(e.subject);
    return {s.begin(), s.end()};
  }

  const ManifestEntry& entry(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return e;
    throw DomainError("manifest has no sequence '" + id + "'");
  }

  // Entries tagged with an MSR activity set ("AS1".."AS3"), classes renumbered 0..7.
  DatasetManifest subset(const std::string& tag) const {
    if (tag.size() != 3 || tag.rfind("AS", 0) != 0) throw DomainError("unknown subset '" + tag + "'");
    const auto& members = msr_subset(tag[2] - '0');
    DatasetManifest out = *this;
    out.entries.clear();
    out.class_names.clear();
    for (int a : members) out.class_names.push_back(class_names.at(static_cast<std::size_t>(a)));
    for (const auto& e : entries) {
      auto it = std::find(members.begin(), members.end(), e.label);
      if (it == members.end()) continue;
      ManifestEntry copy = e;
      copy.label = static_cast<int>(it - members.begin());
      out.entries.push_back(std::move(copy));
    }
    return out;
  }
};

inline DatasetManifest manifest_of(const std::vector<ActionSequence>& seqs, std::string dataset,
                                   std::vector<std::string> class_names) {
  DatasetManifest m;
  m.dataset = std::move(dataset);
  m.class_names = std::move(class_names);
  m.joint_count = seqs.empty() ? 0 : seqs.front().joint_count();
  for (const auto& s : seqs) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= m.class_names.size())
      throw DomainError("sequence '" + s.id + "' label outside class set");
    ManifestEntry e{s.id, s.label, s.subject, s.trial, "sequences/" + s.id + ".seq", {}};
    if (m.dataset == "msr") e.subsets = msr_subset_tags(s.label);
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void write_manifest(const fs::path& path, const DatasetManifest& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "# dataset " << m.dataset << " joints " << m.joint_count << '\n';
  os << "# classes";
  for (const auto& c : m.class_names) os << ' ' << c;
  os << '\n';
  for (const auto& e : m.entries) os << e.id << ' ' << e.label << ' ' << e.subject << ' ' << e.trial << ' ' << e.path << '\n';
}

inline DatasetManifest read_manifest(const fs::path& path) {
  auto in = detail::open_input(path);
  DatasetManifest m;
  std::string line;
  std::size_t ln = 0;
  const std::string fname = path.string();
  while (std::getline(in, line)) {
    ++ln;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "#") {
      if (toks.size() >= 5 && toks[1] == "dataset" && toks[3] == "joints") {
        m.dataset = std::string(toks[2]);
        m.joint_count = static_cast<std::size_t>(detail::parse_int(toks[4], fname, ln));
      } else if (toks.size() >= 2 && toks[1] == "classes") {
        for (std::size_t i = 2; i < toks.size(); ++i) m.class_names.emplace_back(toks[i]);
      }
      continue;
    }
    if (toks.size() != 5) throw ParseError(fname, ln, "expected 'id class subject trial path'");
    ManifestEntry e;
    e.id = std::string(toks[0]);
    e.label = static_cast<int>(detail::parse_int(toks[1], fname, ln));
    e.subject = static_cast<int>(detail::parse_int(toks[2], fname, ln));
    e.trial = static_cast<int>(detail::parse_int(toks[3], fname, ln));
    e.path = std::string(toks[4]);
    if (m.dataset == "msr") e.subsets = msr_subset_tags(e.label);
    m.entries.push_back(std::move(e));
  }
  if (m.dataset.empty()) throw ParseError(fname, 1, "missing '# dataset' header");
  if (m.class_names.empty()) m.class_names = dataset_classes(m.dataset);
  for (const auto& e : m.entries)
    if (e.label < 0 || static_cast<std::size_t>(e.label) >= m.class_names.size())
      throw ParseError(fname, 0, "sequence '" + e.id + "' label outside class set");
  return m;
}

// Writes <dir>/sequences/<id>.seq and <dir>/manifest.txt.
inline DatasetManifest write_corpus(const fs::path& dir, const std::vector<ActionSequence>& seqs, const std::string& dataset,
                                    const std::vector<std::string>& class_names) {
  fs::create_directories(dir / "sequences");
  DatasetManifest m = manifest_of(seqs, dataset, class_names);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    std::ofstream os(dir / m.entries[i].path);
    if (!os) throw IoError("cannot write '" + (dir / m.entries[i].path).string() + "'");
    write_sequence(os, seqs[i]);
  }
  write_manifest(dir / "manifest.txt", m);
  return m;
}

inline ActionSequence load_sequence(const fs::path& corpus_dir, const DatasetManifest& m, const ManifestEntry& e) {
  const fs::path p = corpus_dir / e.path;
  auto in = detail::open_input(p);
  ActionSequence seq = read_sequence(in, p.string(), e.id);
  if (seq.label != e.label) throw ParseError(p.string(), 1, "label disagrees with manifest");
  seq.label_name = m.class_names.at(static_cast<std::size_t>(e.label));
  return seq;
}

// ---------------------------------------------------------------------------
// Evaluation splits

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

struct SplitSpec {
  std::string protocol;
  std::vector<Fold> folds;
};

inline const std::vector<std::string>& protocol_names() {
  static const std::vector<std::string> names = {"loocv-sequence", "loocv-subject", "cross-subject"};
  return names;
}

inline SplitSpec make_splits(const DatasetManifest& m, const std::string& protocol) {
  SplitSpec spec;
  spec.protocol = protocol;
  if (protocol == "loocv-sequence") {
    for (const auto& held : m.entries) {
      Fold f;
      for (const auto& e : m.entries) (e.id == held.id ? f.test : f.train).push_back(e.id);
      spec.folds.push_back(std::move(f));
    }
  } else if (protocol == "loocv-subject") {
    for (int s : m.subject_ids()) {
      Fold f;
      for (const auto& e : m.entries) (e.subject == s ? f.test : f.train).push_back(e.id);
      spec.folds.push_back(std::move(f));
    }
  } else if (protocol == "cross-subject") {
    // Odd subject ids train, even subject ids test.
    Fold f;
    for (const auto& e : m.entries) (e.subject % 2 == 1 ? f.train : f.test).push_back(e.id);
    spec.folds.push_back(std::move(f));
  } else {
    std::string valid;
    for (const auto& n : protocol_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw DomainError("unknown protocol '" + protocol + "' (valid: " + valid + ")");
  }
  return spec;
}

}  // namespace riac::skeleton
