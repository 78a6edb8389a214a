#include <gtest/gtest.h>

#include <fstream>

#include "fewshot/common.hpp"
#include "fewshot/dataset.hpp"
#include "fewshot/manifest.hpp"
#include "fewshot/png_io.hpp"
#include "support/test_support.hpp"

namespace fewshot {
namespace {

using testing::TempDir;
using testing::random_image;
using testing::tagged_dataset;

TEST(Preprocess, IdentityAtTargetSizeIsBitwise) {
  Rng rng(1);
  const Image img = random_image(7, 5, 3, rng);
  EXPECT_EQ(preprocess(img, 7, 5), img);
}

TEST(Preprocess, IdempotentAtTargetSize) {
  Rng rng(2);
  const Image img = random_image(13, 9, 1, rng);
  const Image once = preprocess(img, 8, 8);
  EXPECT_EQ(preprocess(once, 8, 8), once);
}

TEST(Preprocess, ConstantImageStaysConstant) {
  Image img(6, 6, 1);
  img.pixels.assign(img.pixels.size(), 0.37f);
  const Image out = preprocess(img, 11, 4);
  for (float v : out.pixels) EXPECT_EQ(v, 0.37f);
}

// 2x2 checkerboard upsampled to 4x4: half-pixel bilinear weights place the
// interior samples at source offsets 0.25/0.75.
TEST(Preprocess, CheckerboardUpsampleMatchesHandBilinear) {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 0.0f;
  img.at(0, 1, 0) = 1.0f;
  img.at(1, 0, 0) = 1.0f;
  img.at(1, 1, 0) = 0.0f;
  const Image out = preprocess(img, 4, 4);
  EXPECT_NEAR(out.at(1, 1, 0), 0.375f, 1e-6);
  EXPECT_NEAR(out.at(1, 2, 0), 0.625f, 1e-6);
  EXPECT_NEAR(out.at(2, 1, 0), 0.625f, 1e-6);
  EXPECT_NEAR(out.at(2, 2, 0), 0.375f, 1e-6);
  for (float v : out.pixels) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  // Interior strictly inside (0,1).
  for (int y = 1; y <= 2; ++y)
    for (int x = 1; x <= 2; ++x) {
      EXPECT_GT(out.at(y, x, 0), 0.0f);
      EXPECT_LT(out.at(y, x, 0), 1.0f);
    }
}

TEST(PngIo, RoundTripsQuantizedValues) {
  TempDir dir("png");
  Rng rng(3);
  Image img = random_image(9, 11, 1, rng);
  // Snap to the 8-bit grid so the round trip is exact.
  for (float& v : img.pixels)
    v = std::round(v * 255.0f) / 255.0f;
  write_png(dir.str("a.png"), img);
  const Image back = read_png(dir.str("a.png"));
  ASSERT_EQ(back.shape(), img.shape());
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    EXPECT_NEAR(back.pixels[i], img.pixels[i], 0.5f / 255.0f);
}

TEST(Manifest, LoadsRowsInOrderWithClasses) {
  TempDir dir("manifest");
  Image img(4, 4, 1);
  for (int i = 0; i < 3; ++i)
    write_png(dir.str("img" + std::to_string(i) + ".png"), img);
  std::ofstream(dir.str("m.csv"))
      << "path,label,split\nimg0.png,0,train\nimg1.png,0,train\nimg2.png,1,"
         "test\n";
  LoadOptions options;
  options.target_height = 4;
  options.target_width = 4;
  options.channels = 1;
  const Dataset ds = load_manifest(dir.str("m.csv"), options);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.classes, (std::set<int>{0, 1}));
  EXPECT_EQ(ds.samples[0].id, "img0.png");
  EXPECT_EQ(ds.samples[2].split, Split::kTest);
  EXPECT_EQ(split_subset(ds, Split::kTrain).size(), 2u);
}

TEST(Manifest, EmptyManifestIsAnError) {
  TempDir dir("manifest_empty");
  std::ofstream(dir.str("m.csv")) << "path,label,split\n";
  try {
    load_manifest(dir.str("m.csv"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("empty dataset"), std::string::npos);
  }
}

TEST(Manifest, MissingImageNamesTheRow) {
  TempDir dir("manifest_missing");
  std::ofstream(dir.str("m.csv")) << "path,label,split\nnope.png,0,train\n";
  try {
    load_manifest(dir.str("m.csv"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("row 2"), std::string::npos);
    EXPECT_NE(what.find("nope.png"), std::string::npos);
  }
}

TEST(Manifest, RejectsBadLabelsSplitsAndHeaders) {
  TempDir dir("manifest_bad");
  Image img(4, 4, 1);
  write_png(dir.str("a.png"), img);
  std::ofstream(dir.str("label.csv")) << "path,label,split\na.png,x,train\n";
  EXPECT_THROW(load_manifest(dir.str("label.csv")), DataError);
  std::ofstream(dir.str("split.csv")) << "path,label,split\na.png,0,dev\n";
  EXPECT_THROW(load_manifest(dir.str("split.csv")), DataError);
  std::ofstream(dir.str("header.csv")) << "file,label,split\na.png,0,train\n";
  EXPECT_THROW(load_manifest(dir.str("header.csv")), DataError);
  std::ofstream(dir.str("dup.csv"))
      << "path,label,split\na.png,0,train\na.png,0,train\n";
  EXPECT_THROW(load_manifest(dir.str("dup.csv")), DataError);
}

TEST(MeanIr, ReproducesPublishedCorpusValues) {
  EXPECT_NEAR(mean_ir({{0, 20110}, {1, 294}}), 34.7, 0.05);
  EXPECT_NEAR(mean_ir({{0, 14762}, {1, 1692}}), 4.9, 0.05);
  EXPECT_NEAR(mean_ir({{0, 3173}, {1, 1692}}), 1.4, 0.05);
}

TEST(MeanIr, BalancedCountsGiveExactlyOne) {
  EXPECT_EQ(mean_ir({{0, 7}, {1, 7}}), 1.0);
  EXPECT_EQ(mean_ir({{0, 5}, {1, 5}, {2, 5}}), 1.0);
}

TEST(MeanIr, AtLeastOneAndOneOnlyWhenBalanced) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<int, std::size_t> counts;
    const int k = 2 + static_cast<int>(rng.index(4));
    bool balanced = true;
    std::size_t first = 0;
    for (int c = 0; c < k; ++c) {
      counts[c] = 1 + rng.index(50);
      if (c == 0) first = counts[c];
      balanced = balanced && counts[c] == first;
    }
    const double value = mean_ir(counts);
    EXPECT_GE(value, 1.0);
    EXPECT_EQ(value == 1.0, balanced);
  }
}

TEST(MeanIr, ZeroCountIsADomainError) {
  EXPECT_THROW(mean_ir({{0, 5}, {1, 0}}), DataError);
}

TEST(Subsample, CountsMatchSpec) {
  std::vector<int> labels(110, 0);
  std::fill(labels.begin() + 100, labels.end(), 1);
  const Dataset ds = tagged_dataset(labels);
  const Dataset draw = subsample_imbalanced(ds, {ImbalanceLevel::kHigh, 100, 1},
                                            static_cast<std::uint64_t>(7));
  EXPECT_EQ(draw.size(), 101u);
  const auto counts = class_counts(draw);
  EXPECT_EQ(counts.at(0), 100u);
  EXPECT_EQ(counts.at(1), 1u);
}

TEST(Subsample, DeterministicUnderSeed) {
  std::vector<int> labels(130, 0);
  std::fill(labels.begin() + 120, labels.end(), 1);
  const Dataset ds = tagged_dataset(labels);
  const ImbalanceSpec spec{ImbalanceLevel::kMedium, 100, 10};
  const Dataset a = subsample_imbalanced(ds, spec, std::uint64_t{99});
  const Dataset b = subsample_imbalanced(ds, spec, std::uint64_t{99});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(a.samples[i].id, b.samples[i].id);
}

TEST(Subsample, InsufficientClassReportsShortfall) {
  std::vector<int> labels(40, 0);
  std::fill(labels.begin() + 35, labels.end(), 1);
  const Dataset ds = tagged_dataset(labels);
  try {
    subsample_imbalanced(ds, {ImbalanceLevel::kNone, 100, 100},
                         std::uint64_t{1});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient"), std::string::npos);
  }
}

// Monte Carlo: with 200 majority candidates and 100-sample draws, each
// candidate is selected with probability 1/2.
TEST(Subsample, DrawsUniformlyWithoutReplacement) {
  std::vector<int> labels(220, 0);
  std::fill(labels.begin() + 200, labels.end(), 1);
  const Dataset ds = tagged_dataset(labels, 1);
  const ImbalanceSpec spec{ImbalanceLevel::kMedium, 100, 10};
  std::map<std::string, int> hits;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const Dataset draw =
        subsample_imbalanced(ds, spec, static_cast<std::uint64_t>(t));
    std::set<std::string> seen;
    for (const Sample& s : draw.samples) {
      ASSERT_TRUE(seen.insert(s.id).second) << "repetition within a draw";
      if (s.label == 0) ++hits[s.id];
    }
  }
  for (const auto& [id, count] : hits)
    EXPECT_NEAR(count / static_cast<double>(trials), 0.5, 0.05) << id;
}

TEST(Folds, PlansSatisfyInvariantsAndDiffer) {
  std::vector<int> labels(1000, 0);
  std::fill(labels.begin() + 800, labels.end(), 1);
  const Dataset ds = tagged_dataset(labels, 1);
  const ImbalanceSpec spec{ImbalanceLevel::kMedium, 100, 10};
  const FoldPlan plan = make_folds(ds, spec, 10, 31);
  ASSERT_EQ(plan.draws.size(), 10u);
  std::set<std::string> majority_sets;
  for (const FoldDraw& draw : plan.draws) {
    EXPECT_EQ(draw.majority_ids.size(), 100u);
    EXPECT_EQ(draw.minority_ids.size(), 10u);
    std::set<std::string> ids(draw.majority_ids.begin(),
                              draw.majority_ids.end());
    ids.insert(draw.minority_ids.begin(), draw.minority_ids.end());
    EXPECT_EQ(ids.size(), 110u) << "ids repeat within a draw";
    std::string joined;
    for (const std::string& id : draw.majority_ids) joined += id + ",";
    majority_sets.insert(joined);
  }
  EXPECT_GT(majority_sets.size(), 1u) << "all folds drew identical ids";
}

TEST(Folds, SingleFoldMatchesSubsampleWithDerivedStream) {
  std::vector<int> labels(150, 0);
  std::fill(labels.begin() + 140, labels.end(), 1);
  const Dataset ds = tagged_dataset(labels);
  const ImbalanceSpec spec{ImbalanceLevel::kMedium, 100, 10};
  const FoldPlan plan = make_folds(ds, spec, 1, 77);
  const Dataset direct = subsample_imbalanced(ds, spec, fold_stream(77, 0));
  std::vector<std::string> direct_ids;
  for (const Sample& s : direct.samples) direct_ids.push_back(s.id);
  std::vector<std::string> plan_ids = plan.draws[0].majority_ids;
  plan_ids.insert(plan_ids.end(), plan.draws[0].minority_ids.begin(),
                  plan.draws[0].minority_ids.end());
  EXPECT_EQ(plan_ids, direct_ids);
}

TEST(Folds, JsonRoundTripAndMaterialize) {
  std::vector<int> labels(160, 0);
  std::fill(labels.begin() + 150, labels.end(), 1);
  const Dataset ds = tagged_dataset(labels);
  const FoldPlan plan =
      make_folds(ds, {ImbalanceLevel::kMedium, 100, 10}, 3, 5);
  const FoldPlan back = FoldPlan::from_json(plan.to_json());
  EXPECT_EQ(back.seed, plan.seed);
  EXPECT_EQ(back.fold_count, plan.fold_count);
  ASSERT_EQ(back.draws.size(), plan.draws.size());
  for (std::size_t f = 0; f < plan.draws.size(); ++f) {
    EXPECT_EQ(back.draws[f].majority_ids, plan.draws[f].majority_ids);
    EXPECT_EQ(back.draws[f].minority_ids, plan.draws[f].minority_ids);
  }
  const Dataset fold = materialize_fold(ds, back, 1);
  EXPECT_EQ(fold.size(), 110u);
}

TEST(Levels, MinorityCountsScaleWithMajority) {
  EXPECT_EQ(level_minority_count(ImbalanceLevel::kHigh, 100), 1);
  EXPECT_EQ(level_minority_count(ImbalanceLevel::kHigh, 300), 3);
  EXPECT_EQ(level_minority_count(ImbalanceLevel::kMedium, 200), 20);
  EXPECT_EQ(level_minority_count(ImbalanceLevel::kLow, 200), 100);
  EXPECT_EQ(level_minority_count(ImbalanceLevel::kNone, 300), 300);
  EXPECT_THROW(level_minority_count(ImbalanceLevel::kHigh, 150), ConfigError);
}

TEST(Levels, ParserRejectsUnknownTokens) {
  try {
    parse_level("X");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("{H,M,L,N}"), std::string::npos);
  }
}

}  // namespace
}  // namespace fewshot
