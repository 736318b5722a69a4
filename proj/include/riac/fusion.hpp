#pragma once
// Per-part class probabilities and weighted late fusion.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "riac/error.hpp"
#include "riac/skeleton_io.hpp"

namespace riac::fusion {

using skeleton::Part;

struct PartPredictions {
  Part part = Part::FS;
  std::vector<std::string> class_names;
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> probs;

  std::size_t size() const { return ids.size(); }
  std::size_t n_classes() const { return class_names.size(); }

  void validate(double tol = 1e-6) const {
    if (labels.size() != ids.size() || probs.size() != ids.size())
      throw ShapeError("predictions for " + skeleton::part_name(part) + ": ids, labels and probabilities differ in count");
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i].size() != n_classes())
        throw ShapeError("predictions for " + ids[i] + " have " + std::to_string(probs[i].size()) + " columns, expected " +
                         std::to_string(n_classes()));
      if (labels[i] >= n_classes()) throw DomainError("predictions for " + ids[i] + ": label out of range");
      const double s = std::accumulate(probs[i].begin(), probs[i].end(), 0.0);
      if (!(std::abs(s - 1.0) <= tol)) throw NumericError("predictions for " + ids[i] + " do not sum to 1");
    }
  }

  // Appends another fold's predictions.
  void append(const PartPredictions& o) {
    if (o.part != part || o.class_names != class_names) throw DomainError("cannot append predictions of a different part or class list");
    ids.insert(ids.end(), o.ids.begin(), o.ids.end());
    labels.insert(labels.end(), o.labels.begin(), o.labels.end());
    probs.insert(probs.end(), o.probs.begin(), o.probs.end());
  }

  std::vector<std::size_t> predicted() const;
};

// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline std::vector<std::size_t> PartPredictions::predicted() const {
  std::vector<std::size_t> out;
  out.reserve(probs.size());
  for (const auto& p : probs) out.push_back(argmax(p));
  return out;
}

// Probabilities are written with 17 significant digits so a read-back is exact.
inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

// Header: sample_id,true_label,<PART>:<class>,...
inline void write_predictions(const std::filesystem::path& path, const PartPredictions& p) {
  p.validate();
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "sample_id,true_label";
  for (const auto& c : p.class_names) os << ',' << skeleton::part_name(p.part) << ':' << c;
  os << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << p.ids[i] << ',' << p.labels[i];
    for (double v : p.probs[i]) os << ',' << format_double(v);
    os << '\n';
  }
  if (!os) throw IoError("short write to '" + path.string() + "'");
}

inline PartPredictions read_predictions(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open predictions '" + path.string() + "'");
  const std::string fname = path.string();
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  std::string line;
  if (!std::getline(is, line)) throw ParseError(fname, 1, "empty predictions file");
  auto head = split(line);
  if (head.size() < 3 || head[0] != "sample_id" || head[1] != "true_label") throw ParseError(fname, 1, "bad predictions header");
  PartPredictions p;
  std::string part;
  for (std::size_t c = 2; c < head.size(); ++c) {
    const auto colon = head[c].find(':');
    if (colon == std::string::npos) throw ParseError(fname, 1, "column '" + head[c] + "' is not PART:class");
    const std::string pp = head[c].substr(0, colon);
    if (part.empty()) part = pp;
    if (pp != part) throw ParseError(fname, 1, "columns name more than one part");
    p.class_names.push_back(head[c].substr(colon + 1));
  }
  try {
    p.part = skeleton::parse_part(part);
  } catch (const Error& e) {
    throw ParseError(fname, 1, e.what());
  }
  std::size_t ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != head.size()) throw ParseError(fname, ln, "expected " + std::to_string(head.size()) + " columns");
    p.ids.push_back(cells[0]);
    p.labels.push_back(static_cast<std::size_t>(skeleton::detail::parse_int(cells[1], fname, ln)));
    std::vector<double> row;
    for (std::size_t c = 2; c < cells.size(); ++c) row.push_back(skeleton::detail::parse_real(cells[c], fname, ln));
    p.probs.push_back(std::move(row));
  }
  p.validate();
  return p;
}

// (w_HS, w_LL, w_RL, w_LH, w_RH)
using FusionWeights = std::array<int, 5>;

inline constexpr int kMinWeight = 1;
inline constexpr int kMaxWeight = 5;
inline constexpr std::size_t kGridSize = 5 * 5 * 5 * 5 * 5;

inline void validate_weights(const FusionWeights& w) {
  for (int v : w)
    if (v < kMinWeight || v > kMaxWeight) throw DomainError("fusion weights must lie in {1,...,5}");
}

inline std::string weights_str(const FusionWeights& w) {
  std::string s = "{";
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s + "}";
}

inline FusionWeights parse_weights(const std::string& text) {
  std::string t = text;
  std::erase_if(t, [](char c) { return c == '{' || c == '}' || c == ' '; });
  FusionWeights w{};
  std::istringstream ss(t);
  std::string cell;
  std::size_t n = 0;
  while (std::getline(ss, cell, ',')) {
    if (n >= 5) throw UsageError("fusion weights need exactly 5 values: '" + text + "'");
    int v = 0;
    auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (r.ec != std::errc{} || r.ptr != cell.data() + cell.size()) throw UsageError("bad fusion weight '" + cell + "'");
    w[n++] = v;
  }
  if (n != 5) throw UsageError("fusion weights need exactly 5 values: '" + text + "'");
  validate_weights(w);
  return w;
}

// The i-th grid vector in lexicographic order, (1,1,1,1,1) first.
inline FusionWeights grid_weights(std::size_t index) {
  FusionWeights w{};
  for (int k = 4; k >= 0; --k) {
    w[static_cast<std::size_t>(k)] = kMinWeight + static_cast<int>(index % 5);
    index /= 5;
  }
  return w;
}

// `parts` must be the five fused parts in HS, LL, RL, LH, RH order.
inline void check_aligned(std::span<const PartPredictions> parts) {
  if (parts.size() != 5) throw DomainError("fusion needs exactly five part predictions");
  for (std::size_t k = 0; k < 5; ++k) {
    if (parts[k].part != skeleton::kFusedParts[k])
      throw DomainError("fusion input " + std::to_string(k) + " is " + skeleton::part_name(parts[k].part) + ", expected " +
                        skeleton::part_name(skeleton::kFusedParts[k]));
    parts[k].validate();
  }
  const auto& ref = parts[0];
  for (std::size_t k = 1; k < 5; ++k) {
    const auto& p = parts[k];
    if (p.class_names != ref.class_names) throw DomainError("fusion inputs disagree on the class list");
    if (p.ids != ref.ids) throw DomainError("fusion inputs are not aligned: " + skeleton::part_name(p.part) + " covers different samples");
    if (p.labels != ref.labels) throw DomainError("fusion inputs disagree on true labels");
  }
}

struct FusedResult {
  std::vector<std::vector<double>> scores;
  std::vector<std::size_t> predicted;
};

// P_c = sum_k w_k p_k,c with arbitrary positive real weights.
inline FusedResult fuse_scores(const std::array<double, 5>& w, std::span<const PartPredictions> parts) {
  check_aligned(parts);
  for (double v : w)
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("fusion weights must be positive");
  FusedResult r;
  const std::size_t n = parts[0].size(), c = parts[0].n_classes();
  r.scores.assign(n, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t j = 0; j < c; ++j) r.scores[i][j] += w[k] * parts[k].probs[i][j];
    r.predicted.push_back(argmax(r.scores[i]));
  }
  return r;
}

inline FusedResult fuse(const FusionWeights& w, std::span<const PartPredictions> parts) {
  validate_weights(w);
  std::array<double, 5> d{};
  for (std::size_t k = 0; k < 5; ++k) d[k] = w[k];
  return fuse_scores(d, parts);
}

// Accuracy, optionally weighted per sample (weights must sum to > 0).
inline double weighted_accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                                std::span<const double> sample_weights = {}) {
  if (predicted.size() != truth.size() || truth.empty()) throw DomainError("accuracy: empty or mismatched label lists");
  if (!sample_weights.empty() && sample_weights.size() != truth.size()) throw DomainError("accuracy: sample weight count mismatch");
  double hit = 0.0, total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double sw = sample_weights.empty() ? 1.0 : sample_weights[i];
    total += sw;
    if (predicted[i] == truth[i]) hit += sw;
  }
  return hit / total;
}

struct SearchResult {
  FusionWeights weights{};
  double accuracy = 0.0;
  std::size_t evaluated = 0;
};

// Exhaustive search over {1..5}^5. Ties go to the lexicographically smallest
// vector. Sample weights let pooled LOOCV folds count as a mean of fold
// accuracies.
inline SearchResult search_weights(std::span<const PartPredictions> parts, std::span<const double> sample_weights = {},
                                   std::size_t jobs = 1) {
  check_aligned(parts);
  const std::size_t n = parts[0].size(), c = parts[0].n_classes();
  if (n == 0) throw DomainError("search_weights: no samples");
  if (!sample_weights.empty() && sample_weights.size() != n) throw DomainError("search_weights: sample weight count mismatch");
  const auto& labels = parts[0].labels;

  auto scan = [&](std::size_t lo, std::size_t hi) {
    SearchResult best;
    best.accuracy = -1.0;
    std::vector<double> score(c);
    for (std::size_t g = lo; g < hi; ++g) {
      const FusionWeights w = grid_weights(g);
      double hit = 0.0, total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        std::fill(score.begin(), score.end(), 0.0);
        for (std::size_t k = 0; k < 5; ++k)
          for (std::size_t j = 0; j < c; ++j) score[j] += w[k] * parts[k].probs[i][j];
        const double sw = sample_weights.empty() ? 1.0 : sample_weights[i];
        total += sw;
        if (argmax(score) == labels[i]) hit += sw;
      }
      const double acc = hit / total;
      if (acc > best.accuracy) {
        best.accuracy = acc;
        best.weights = w;
      }
      ++best.evaluated;
    }
    return best;
  };

  jobs = std::clamp<std::size_t>(jobs, 1, 64);
  if (jobs == 1) return scan(0, kGridSize);
  std::vector<SearchResult> partial(jobs);
  std::vector<std::thread> pool;
  const std::size_t chunk = (kGridSize + jobs - 1) / jobs;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] { partial[t] = scan(std::min(kGridSize, t * chunk), std::min(kGridSize, (t + 1) * chunk)); });
  for (auto& th : pool) th.join();
  // Chunks are in grid order, so a strict '>' keeps the earliest maximum.
  SearchResult best;
  best.accuracy = -1.0;
  for (const auto& r : partial) {
    best.evaluated += r.evaluated;
    if (r.evaluated && r.accuracy > best.accuracy) {
      best.accuracy = r.accuracy;
      best.weights = r.weights;
    }
  }
  return best;
}

}  // namespace riac::fusion
