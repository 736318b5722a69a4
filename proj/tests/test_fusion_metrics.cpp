#include <gtest/gtest.h>

#include <chrono>

#include "riac/fusion.hpp"
#include "riac/metrics.hpp"
#include "riac/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace riac;
using namespace riac::fusion;
using skeleton::Part;
using oracle::dyadic_parts;
using oracle::oracle_search;

TEST(FusionSearch, MatchesIndependentExhaustiveSearch) {
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto parts = dyadic_parts(seed, 20, 4);
    auto got = search_weights(parts);
    auto want = oracle_search(parts);
    EXPECT_EQ(got.accuracy, want.accuracy) << "seed " << seed;
    EXPECT_EQ(got.weights, want.w) << "seed " << seed << " got " << weights_str(got.weights);
    EXPECT_EQ(got.evaluated, kGridSize);
    auto threaded = search_weights(parts, {}, 4);
    EXPECT_EQ(threaded.weights, got.weights);
    EXPECT_EQ(threaded.accuracy, got.accuracy);
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
}

TEST(FusionSearch, AccuracyMatchesFuseAtWinner) {
  auto parts = dyadic_parts(11, 30, 3);
  auto r = search_weights(parts);
  auto f = fuse(r.weights, parts);
  EXPECT_EQ(r.accuracy, weighted_accuracy(f.predicted, parts[0].labels));
}

TEST(FusionSearch, SampleWeightsGiveMeanOfFoldAccuracies) {
  auto parts = dyadic_parts(12, 12, 3);
  // Two folds of sizes 4 and 8, weighted 1/(2*|fold|).
  std::vector<double> sw(12);
  for (std::size_t i = 0; i < 12; ++i) sw[i] = i < 4 ? 1.0 / 8.0 : 1.0 / 16.0;
  auto r = search_weights(parts, sw);
  auto pred = fuse(r.weights, parts).predicted;
  double a = 0, b = 0;
  for (std::size_t i = 0; i < 4; ++i) a += pred[i] == parts[0].labels[i];
  for (std::size_t i = 4; i < 12; ++i) b += pred[i] == parts[0].labels[i];
  EXPECT_NEAR(r.accuracy, 0.5 * (a / 4 + b / 8), 1e-15);
}

TEST(Fusion, UnanimityAndScaleInvariance) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto parts = dyadic_parts(100 + trial, 10, 3);
    // Unanimity: identical part predictions fuse to that prediction for any weights.
    for (std::size_t k = 1; k < 5; ++k) parts[k].probs = parts[0].probs;
    FusionWeights w{};
    for (auto& v : w) v = 1 + static_cast<int>(rng.below(5));
    auto fused = fuse(w, parts);
    EXPECT_EQ(fused.predicted, parts[0].predicted());
    // Scaling every weight by a positive constant leaves the decision unchanged.
    auto other = dyadic_parts(200 + trial, 10, 3);
    std::array<double, 5> d{}, d3{};
    for (std::size_t k = 0; k < 5; ++k) {
      d[k] = w[k];
      d3[k] = 4.0 * w[k];
    }
    EXPECT_EQ(fuse_scores(d, other).predicted, fuse_scores(d3, other).predicted);
  }
}

TEST(Fusion, ScoresAreLinearInWeights) {
  auto parts = dyadic_parts(5, 6, 3);
  auto a = fuse_scores({1, 0.5, 2, 1, 3}, parts);
  auto b = fuse_scores({2, 1, 4, 2, 6}, parts);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(b.scores[i][j], 2.0 * a.scores[i][j]);
}

TEST(Fusion, WeightGridAndParsing) {
  EXPECT_EQ(grid_weights(0), (FusionWeights{1, 1, 1, 1, 1}));
  EXPECT_EQ(grid_weights(1), (FusionWeights{1, 1, 1, 1, 2}));
  EXPECT_EQ(grid_weights(kGridSize - 1), (FusionWeights{5, 5, 5, 5, 5}));
  EXPECT_EQ(parse_weights("{2,3,4,4,5}"), (FusionWeights{2, 3, 4, 4, 5}));
  EXPECT_EQ(weights_str({2, 3, 4, 4, 5}), "{2,3,4,4,5}");
  EXPECT_THROW(parse_weights("1,2,3"), UsageError);
  EXPECT_THROW(parse_weights("0,1,1,1,1"), Error);
  EXPECT_THROW(parse_weights("1,2,x,1,1"), UsageError);
}

TEST(Fusion, RejectsMisalignedInputs) {
  auto parts = dyadic_parts(1, 5, 3);
  auto swapped = parts;
  std::swap(swapped[0], swapped[1]);
  EXPECT_THROW(search_weights(swapped), DomainError);
  auto shifted = parts;
  shifted[2].ids[0] = "other";
  EXPECT_THROW(search_weights(shifted), DomainError);
  auto bad = parts;
  bad[3].probs[0][0] += 0.5;
  EXPECT_THROW(fuse({1, 1, 1, 1, 1}, bad), NumericError);
  EXPECT_THROW(search_weights(std::span<const PartPredictions>(parts.data(), 4)), DomainError);
}

TEST(Fusion, PredictionsCsvRoundTrip) {
  auto parts = dyadic_parts(8, 7, 4);
  parts[2].probs[1] = {0.1, 0.2, 0.3, 0.4};
  testutil::TempDir dir("pred");
  write_predictions(dir / "p.csv", parts[2]);
  auto back = read_predictions(dir / "p.csv");
  EXPECT_EQ(back.part, parts[2].part);
  EXPECT_EQ(back.ids, parts[2].ids);
  EXPECT_EQ(back.labels, parts[2].labels);
  EXPECT_EQ(back.probs, parts[2].probs);
  EXPECT_EQ(back.class_names, parts[2].class_names);
  testutil::write_text(dir / "bad.csv", testutil::read_text(dir / "p.csv") + "s9,0,0.5\n");
  try {
    read_predictions(dir / "bad.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv:9"), std::string::npos) << e.what();
  }
}

TEST(Metrics, PerfectClassifier) {
  std::vector<std::size_t> truth{0, 1, 2, 2, 1, 0, 3};
  auto cm = metrics::confusion_matrix(truth, truth, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) EXPECT_EQ(cm[i][j], 0.0);
  EXPECT_EQ(cm[2][2], 2.0);
  EXPECT_EQ(metrics::trace_accuracy(cm), 1.0);
  std::vector<std::vector<double>> scores;
  for (auto t : truth) {
    std::vector<double> row(4, 0.0);
    row[t] = 1.0;
    scores.push_back(row);
  }
  auto roc = metrics::roc_auc(scores, truth);
  EXPECT_EQ(roc.macro_auc, 1.0);
  EXPECT_EQ(roc.curves.size(), 4u);
}

TEST(Metrics, RandomScoresGiveChanceAuc) {
  Rng rng(2024);
  std::vector<std::vector<double>> scores;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 10000; ++i) {
    labels.push_back(rng.below(3));
    scores.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  }
  auto roc = metrics::roc_auc(scores, labels);
  EXPECT_NEAR(roc.macro_auc, 0.5, 0.05);
  for (const auto& c : roc.curves) EXPECT_NEAR(c.auc, 0.5, 0.05);
}

TEST(Metrics, AucEqualsMannWhitneyWithTies) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.below(40);
    std::vector<double> s(n);
    std::unique_ptr<bool[]> pos(new bool[n]);
    std::size_t P = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(6));  // heavy ties
      pos[i] = rng.uniform() < 0.4;
      P += pos[i];
    }
    if (P == 0 || P == n) continue;
    double u = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (pos[i] && !pos[j]) u += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    const double mw = u / (static_cast<double>(P) * static_cast<double>(n - P));
    auto c = metrics::roc_curve(s, std::span<const bool>(pos.get(), n));
    EXPECT_NEAR(c.auc, mw, 1e-12);
    EXPECT_EQ(c.points.front().fpr, 0.0);
    EXPECT_EQ(c.points.back().tpr, 1.0);
    // Reversing the scores mirrors the AUC.
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -s[i];
    EXPECT_NEAR(metrics::roc_curve(neg, std::span<const bool>(pos.get(), n)).auc, 1.0 - mw, 1e-12);
  }
}

TEST(Metrics, DegenerateInputs) {
  std::vector<std::size_t> same{1, 1, 1};
  std::vector<std::vector<double>> s(3, std::vector<double>{0.5, 0.5});
  EXPECT_THROW(metrics::roc_auc(s, same), DomainError);
  std::vector<std::size_t> two{0, 1, 1};
  auto r = metrics::roc_auc({{0.2, 0.3, 0.5}, {0.1, 0.8, 0.1}, {0.3, 0.3, 0.4}}, two);
  EXPECT_EQ(r.skipped, (std::vector<std::size_t>{2}));
  EXPECT_THROW(metrics::confusion_matrix(std::vector<std::size_t>{0, 5}, std::vector<std::size_t>{0, 1}, 2), DomainError);
  EXPECT_EQ(metrics::accuracy(std::vector<std::size_t>{0, 1, 1, 0}, std::vector<std::size_t>{0, 1, 0, 0}), 0.75);
}
