#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "riac/error.hpp"

namespace riac::metrics {

using Matrix = std::vector<std::vector<std::size_t>>;

// Row = true class, column = predicted class.
inline Matrix confusion_matrix(std::span<const std::size_t> predicted, std::span<const std::size_t> truth, std::size_t n) {
  if (predicted.size() != truth.size()) throw DomainError("confusion_matrix: prediction and label counts differ");
  Matrix m(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n || predicted[i] >= n)
      throw DomainError("confusion_matrix: label outside [0, " + std::to_string(n) + ")");
    ++m[truth[i]][predicted[i]];
  }
  return m;
}

inline double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw DomainError("accuracy: empty or mismatched label lists");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

inline double trace_accuracy(const Matrix& m) {
  std::size_t diag = 0, total = 0;
  for (std::size_t r = 0; r < m.size(); ++r) {
    diag += m[r][r];
    total += std::accumulate(m[r].begin(), m[r].end(), std::size_t{0});
  }
  return total ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::size_t cls = 0;
  std::vector<RocPoint> points;
  double auc = 0.0;
};

struct RocReport {
  std::vector<RocCurve> curves;
  std::vector<std::size_t> skipped;  // classes without both positives and negatives
  double macro_auc = 0.0;
};

// One-vs-rest curve for a single score column. Tied scores move as one
// threshold step, so the trapezoid area equals the Mann-Whitney statistic.
inline RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive, std::size_t cls = 0) {
  const std::size_t n = scores.size();
  std::size_t P = 0;
  for (bool p : positive) P += p;
  const std::size_t N = n - P;
  if (P == 0 || N == 0) throw DomainError("roc_curve: need at least one positive and one negative sample");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RocCurve curve;
  curve.cls = cls;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::size_t dtp = 0, dfp = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (positive[order[j]] ? dtp : dfp) += 1;
      ++j;
    }
    // Trapezoid in count units, normalised at the end.
    area += static_cast<double>(dfp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(dtp));
    tp += dtp;
    fp += dfp;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(N), static_cast<double>(tp) / static_cast<double>(P)});
    i = j;
  }
  curve.auc = area / (static_cast<double>(P) * static_cast<double>(N));
  return curve;
}

// `scores` is samples x classes.
inline RocReport roc_auc(const std::vector<std::vector<double>>& scores, std::span<const std::size_t> labels) {
  if (scores.size() != labels.size() || scores.empty()) throw DomainError("roc_auc: score and label counts differ or are empty");
  const std::size_t n_classes = scores.front().size();
  for (std::size_t l : labels)
    if (l >= n_classes) throw DomainError("roc_auc: label outside class range");
  if (std::all_of(labels.begin(), labels.end(), [&](std::size_t l) { return l == labels.front(); }))
    throw DomainError("roc_auc: all samples carry the same label");
  RocReport report;
  double sum = 0.0;
  std::vector<double> column(scores.size());
  // vector<bool> has no contiguous storage, hence the raw array.
  auto positive = std::make_unique<bool[]>(scores.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t P = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      column[i] = scores[i].at(c);
      positive[i] = labels[i] == c;
      P += labels[i] == c;
    }
    if (P == 0 || P == scores.size()) {
      report.skipped.push_back(c);
      continue;
    }
    report.curves.push_back(roc_curve(column, std::span<const bool>(positive.get(), scores.size()), c));
    sum += report.curves.back().auc;
  }
  report.macro_auc = sum / static_cast<double>(report.curves.size());
  return report;
}

}  // namespace riac::metrics
