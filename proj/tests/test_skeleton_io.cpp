#include <gtest/gtest.h>

#include <sstream>

#include "riac/skeleton_io.hpp"
#include "test_util.hpp"

using namespace riac;
using namespace riac::skeleton;

namespace {

ActionSequence ramp(std::size_t frames, std::size_t joints = 2) {
  ActionSequence s;
  s.id = "ramp";
  for (std::size_t f = 0; f < frames; ++f) {
    SkeletonFrame fr;
    for (std::size_t j = 0; j < joints; ++j) {
      const double v = frames == 1 ? 0.0 : static_cast<double>(f) / static_cast<double>(frames - 1);
      fr.joints.push_back({v, 2.0 * v + static_cast<double>(j), -v});
    }
    s.frames.push_back(fr);
  }
  return s;
}

}  // namespace

TEST(Resample, DownsamplesTo60WithExactEndpoints) {
  auto s = ramp(120);
  auto r = resample(s, 60);
  ASSERT_EQ(r.frame_count(), 60u);
  EXPECT_EQ(r.frames.front(), s.frames.front());
  EXPECT_EQ(r.frames.back(), s.frames.back());
}

TEST(Resample, UpsamplesTo60WithExactEndpoints) {
  auto s = ramp(5);
  auto r = resample(s, 60);
  ASSERT_EQ(r.frame_count(), 60u);
  EXPECT_EQ(r.frames.front(), s.frames.front());
  EXPECT_EQ(r.frames.back(), s.frames.back());
}

TEST(Resample, SameLengthIsBitIdentical) {
  auto s = ramp(60, 20);
  s.frames[7].joints[3].x = 0.1 + 0.2;  // a value with a messy binary expansion
  auto r = resample(s, 60);
  ASSERT_EQ(r.frame_count(), 60u);
  for (std::size_t f = 0; f < 60; ++f)
    for (std::size_t j = 0; j < 20; ++j) {
      EXPECT_EQ(std::memcmp(&r.frames[f].joints[j], &s.frames[f].joints[j], sizeof(Joint3D)), 0);
    }
}

TEST(Resample, TwoFrameRampSpotValue) {
  ActionSequence s;
  s.id = "r";
  s.frames = {SkeletonFrame{{{0.0, 0.0, 0.0}}}, SkeletonFrame{{{1.0, 1.0, 1.0}}}};
  auto r = resample(s, 60);
  EXPECT_EQ(r.frames[30].joints[0].x, 30.0 / 59.0);
  for (std::size_t i = 0; i < 60; ++i) EXPECT_NEAR(r.frames[i].joints[0].y, static_cast<double>(i) / 59.0, 1e-15);
}

TEST(Resample, LinearRampStaysLinear) {
  // Property: resampling an affine-in-time signal yields the same affine signal.
  for (std::size_t n : {2u, 3u, 7u, 59u, 61u, 200u}) {
    auto r = resample(ramp(n), 60);
    for (std::size_t i = 0; i < 60; ++i) EXPECT_NEAR(r.frames[i].joints[0].x, static_cast<double>(i) / 59.0, 1e-12) << n;
  }
}

TEST(Resample, DegenerateInputsThrow) {
  EXPECT_THROW(resample(ramp(1), 60), DomainError);
  EXPECT_THROW(resample(ramp(0), 60), DomainError);
  EXPECT_THROW(resample(ramp(5), 1), DomainError);
}

TEST(Validate, RejectsRaggedAndNonFinite) {
  auto s = ramp(4, 3);
  EXPECT_NO_THROW(validate(s));
  s.frames[2].joints.pop_back();
  EXPECT_THROW(validate(s), DomainError);
  s = ramp(4, 3);
  s.frames[1].joints[0].z = std::nan("");
  EXPECT_THROW(validate(s), DomainError);
}

TEST(Partition, SchemesAreDisjointCovers) {
  EXPECT_NO_THROW(kinect20_scheme().validate());
  EXPECT_NO_THROW(florence15_scheme().validate());
  auto bad = kinect20_scheme();
  bad.parts[0].push_back(12);
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Partition, ExtractsRowsPerPart) {
  ActionSequence s;
  s.id = "x";
  for (long f = 0; f < 3; ++f) {
    SkeletonFrame fr;
    for (std::size_t j = 0; j < 20; ++j) fr.joints.push_back(testutil::fixture_joint(j, f));
    s.frames.push_back(fr);
  }
  auto parts = partition(s, kinect20_scheme());
  ASSERT_EQ(parts.size(), 6u);
  EXPECT_EQ(parts.at(Part::FS).joint_count(), 20u);
  EXPECT_EQ(parts.at(Part::FS).chains.size(), 5u);
  const auto& ll = parts.at(Part::LL);
  ASSERT_EQ(ll.joint_count(), 4u);
  EXPECT_EQ(ll.frame_count(), 3u);
  EXPECT_EQ(ll.rows[0][2], testutil::fixture_joint(12, 2));
  EXPECT_EQ(ll.rows[3][1], testutil::fixture_joint(15, 1));
  std::size_t total = 0;
  for (Part p : kFusedParts) total += parts.at(p).joint_count();
  EXPECT_EQ(total, 20u);
  EXPECT_THROW(extract_part(ramp(3, 15), kinect20_scheme(), Part::HS), DomainError);
}

TEST(Parts, NamesRoundTrip) {
  for (Part p : kAllParts) EXPECT_EQ(parse_part(part_name(p)), p);
  EXPECT_THROW(parse_part("XX"), UsageError);
}

TEST(Parsers, UtKinectSplitsAnnotatedIntervals) {
  testutil::TempDir dir("ut");
  testutil::write_utkinect(dir.path(), 1, 1, 10);
  testutil::write_utkinect(dir.path(), 2, 1, 8);
  auto seqs = parse_utkinect(dir.path());
  ASSERT_EQ(seqs.size(), 4u);
  EXPECT_EQ(seqs[0].subject, 1);
  EXPECT_EQ(seqs[0].label_name, "walk");
  EXPECT_EQ(seqs[0].frame_count(), 5u);
  EXPECT_EQ(seqs[1].label_name, "sitDown");
  EXPECT_EQ(seqs[1].frame_count(), 5u);
  EXPECT_EQ(seqs[3].frame_count(), 4u);
  EXPECT_NEAR(seqs[1].frames[0].joints[4].x, testutil::fixture_joint(4, 6).x, 1e-12);
  for (const auto& s : seqs) EXPECT_NO_THROW(validate(s));
}

TEST(Parsers, UtKinectReportsFileAndLine) {
  testutil::TempDir dir("utbad");
  testutil::write_utkinect(dir.path(), 1, 1, 4);
  std::ofstream(dir.path() / "joints" / "joints_s01_e01.txt", std::ios::app) << "5 1 2 3\n";
  try {
    parse_utkinect(dir.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("joints_s01_e01.txt:5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_utkinect(dir.path() / "missing"), IoError);
}

TEST(Parsers, MsrBlocksAndTruncation) {
  testutil::TempDir dir("msr");
  testutil::write_msr(dir.path(), 3, 2, 1, 6);
  auto seqs = parse_msr(dir.path());
  ASSERT_EQ(seqs.size(), 1u);
  EXPECT_EQ(seqs[0].id, "a03_s02_e01");
  EXPECT_EQ(seqs[0].label, 2);
  EXPECT_EQ(seqs[0].subject, 2);
  EXPECT_EQ(seqs[0].frame_count(), 6u);
  EXPECT_EQ(seqs[0].joint_count(), 20u);
  std::ofstream(dir.path() / "a03_s02_e01_skeleton3D.txt", std::ios::app) << "0 0 0 1\n";
  EXPECT_THROW(parse_msr(dir.path()), ParseError);
  EXPECT_THROW(parse_msr(dir.path(), 30), UsageError);
}

TEST(Parsers, FlorenceGroupsGestures) {
  testutil::TempDir dir("fl");
  auto file = dir.path() / "Florence_dataset_WorldCoordinates.txt";
  testutil::append_florence(file, 1, 1, 1, 4);
  testutil::append_florence(file, 2, 1, 3, 6);
  auto seqs = parse_florence(file);
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(seqs[0].frame_count(), 4u);
  EXPECT_EQ(seqs[1].label, 2);
  EXPECT_EQ(seqs[1].joint_count(), 15u);
  testutil::append_florence(file, 1, 1, 1, 1);
  EXPECT_THROW(parse_florence(file), ParseError);
}

TEST(Corpus, SequenceAndManifestRoundTrip) {
  testutil::TempDir dir("corpus");
  testutil::write_msr(dir / "raw", 1, 1, 1, 5);
  testutil::write_msr(dir / "raw", 20, 4, 2, 7);
  auto seqs = parse_msr(dir / "raw");
  auto m = write_corpus(dir / "corpus", seqs, "msr", msr_classes());
  auto back = read_manifest(dir / "corpus" / "manifest.txt");
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.dataset, "msr");
  EXPECT_EQ(back.joint_count, 20u);
  EXPECT_EQ(back.entries[1].subsets, (std::vector<std::string>{"AS1", "AS3"}));
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    auto s = load_sequence(dir / "corpus", back, back.entries[i]);
    EXPECT_EQ(s.frames, seqs[i].frames);
    EXPECT_EQ(s.subject, seqs[i].subject);
  }
}

TEST(Splits, CrossSubjectIsOddTrainEvenTest) {
  auto m = testutil::grid_manifest("msr", 20, 10, 3);
  auto spec = make_splits(m, "cross-subject");
  ASSERT_EQ(spec.folds.size(), 1u);
  std::set<int> train, test;
  for (const auto& id : spec.folds[0].train) train.insert(m.entry(id).subject);
  for (const auto& id : spec.folds[0].test) test.insert(m.entry(id).subject);
  EXPECT_EQ(train, (std::set<int>{1, 3, 5, 7, 9}));
  EXPECT_EQ(test, (std::set<int>{2, 4, 6, 8, 10}));
  EXPECT_EQ(spec.folds[0].train.size() + spec.folds[0].test.size(), m.entries.size());
}

TEST(Splits, UtKinectLoocvHas200Folds) {
  auto m = testutil::grid_manifest("utkinect", 10, 10, 2);
  ASSERT_EQ(m.entries.size(), 200u);
  auto spec = make_splits(m, "loocv-sequence");
  ASSERT_EQ(spec.folds.size(), 200u);
  std::set<std::string> held;
  for (const auto& f : spec.folds) {
    ASSERT_EQ(f.test.size(), 1u);
    EXPECT_EQ(f.train.size(), 199u);
    EXPECT_EQ(std::count(f.train.begin(), f.train.end(), f.test[0]), 0);
    held.insert(f.test[0]);
  }
  EXPECT_EQ(held.size(), 200u);
  EXPECT_EQ(make_splits(m, "loocv-subject").folds.size(), 10u);
  EXPECT_THROW(make_splits(m, "kfold"), DomainError);
}

TEST(Splits, MsrSubsetsSelectEightActions) {
  auto m = testutil::grid_manifest("msr", 20, 2, 1);
  for (const char* tag : {"AS1", "AS2", "AS3"}) {
    auto sub = m.subset(tag);
    std::set<int> labels;
    for (const auto& e : sub.entries) labels.insert(e.label);
    EXPECT_EQ(sub.class_names.size(), 8u) << tag;
    EXPECT_EQ(labels.size(), 8u) << tag;
    EXPECT_EQ(sub.entries.size(), 16u) << tag;
  }
  EXPECT_EQ(m.subset("AS1").class_names.front(), "horizontalArmWave");
  EXPECT_THROW(m.subset("AS4"), DomainError);
}
