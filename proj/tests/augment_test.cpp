#include <gtest/gtest.h>

#include <cmath>

#include "fewshot/augment.hpp"
#include "fewshot/common.hpp"
#include "support/test_support.hpp"

namespace fewshot {
namespace {

using testing::random_image;

TEST(Shift, ZeroShiftIsBitwiseIdentity) {
  Rng rng(1);
  const Image img = random_image(16, 16, 1, rng);
  EXPECT_EQ(shift(img, 0.0, 0.0), img);
}

TEST(Shift, OnePixelRightMovesContentAndZeroFills) {
  Image img(8, 8, 1);
  img.at(3, 4, 0) = 1.0f;
  const Image out = shift(img, 1.0 / 8.0, 0.0);
  EXPECT_EQ(out.at(3, 5, 0), 1.0f);
  EXPECT_EQ(out.at(3, 4, 0), 0.0f);
  for (int y = 0; y < 8; ++y) EXPECT_EQ(out.at(y, 0, 0), 0.0f);
}

// Integer-pixel round trip restores the original when no content crossed the
// border: 20x20 image with a 2-pixel zero margin, shifted by 0.1 = 2 px.
TEST(Shift, RoundTripWithinMarginRestoresExactly) {
  Rng rng(2);
  Image img(20, 20, 1);
  for (int y = 2; y < 18; ++y)
    for (int x = 2; x < 18; ++x)
      img.at(y, x, 0) = static_cast<float>(rng.uniform());
  const Image out = shift(shift(img, 0.1, 0.1), -0.1, -0.1);
  EXPECT_EQ(out, img);
}

TEST(Shift, RejectsFractionsBeyondHalf) {
  Image img(4, 4, 1);
  EXPECT_THROW(shift(img, 0.6, 0.0), ConfigError);
}

TEST(Scale, FactorOneIsBitwiseIdentity) {
  Rng rng(3);
  const Image img = random_image(15, 9, 1, rng);
  EXPECT_EQ(scale(img, 1.0), img);
}

TEST(Scale, ConstantImageSurvivesZoomIn) {
  Image img(10, 10, 1);
  img.pixels.assign(img.pixels.size(), 0.7f);
  for (double factor : {1.0, 1.1, 1.5}) {
    const Image out = scale(img, factor);
    for (float v : out.pixels) EXPECT_EQ(v, 0.7f) << "factor " << factor;
  }
}

// Halving an all-ones 32x32 image leaves a centered 16-pixel block of ones
// with a zero border.
TEST(Scale, HalfFactorShrinksToCentralBlock) {
  Image img(32, 32, 1);
  img.pixels.assign(img.pixels.size(), 1.0f);
  const Image out = scale(img, 0.5);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool inside = y >= 8 && y <= 23 && x >= 8 && x <= 23;
      EXPECT_EQ(out.at(y, x, 0), inside ? 1.0f : 0.0f)
          << "y=" << y << " x=" << x;
    }
}

TEST(Rotate, ZeroDegreesIsBitwiseIdentity) {
  Rng rng(4);
  const Image img = random_image(11, 11, 1, rng);
  EXPECT_EQ(rotate(img, 0.0), img);
}

TEST(Rotate, CenteredDiskIsRotationInvariant) {
  const int n = 21;
  Image img(n, n, 1);
  const double c = (n - 1) / 2.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double r = std::hypot(x - c, y - c);
      img.at(y, x, 0) = r <= 6.0 ? 1.0f : 0.0f;
    }
  // Soften the rim so bilinear resampling stays within tolerance.
  for (int pass = 0; pass < 2; ++pass) {
    Image blur = img;
    for (int y = 1; y + 1 < n; ++y)
      for (int x = 1; x + 1 < n; ++x)
        blur.at(y, x, 0) =
            0.25f * (img.at(y - 1, x, 0) + img.at(y + 1, x, 0) +
                     img.at(y, x - 1, 0) + img.at(y, x + 1, 0));
    img = blur;
  }
  for (double degrees : {17.0, -33.0, 45.0}) {
    const Image out = rotate(img, degrees);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        EXPECT_NEAR(out.at(y, x, 0), img.at(y, x, 0), 1e-2)
            << "deg=" << degrees << " y=" << y << " x=" << x;
  }
}

// A quarter turn of an axis-aligned bar equals the transpose-flip
// composition of the image (odd-sized grid maps onto itself).
TEST(Rotate, QuarterTurnTransposesBar) {
  const int n = 9;
  Image img(n, n, 1);
  for (int x = 1; x <= 7; ++x) img.at(4, x, 0) = 1.0f;
  const Image out = rotate(img, 90.0);
  Image expected(n, n, 1);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      // Inverse map of a +90 degree rotation sends (x, y) to the source
      // (x', y') = (c + (y - c), c - (x - c)).
      const int sx = y;
      const int sy = 8 - x;
      expected.at(y, x, 0) = img.at(sy, sx, 0);
    }
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    EXPECT_NEAR(out.pixels[i], expected.pixels[i], 1e-5) << i;
}

TEST(RandomAugment, AlphaZeroIsBitwiseIdentity) {
  Rng rng(5);
  AugmentConfig config;
  config.alpha = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Image img = random_image(12, 12, 1, rng);
    Rng draw = rng.derive(trial);
    EXPECT_EQ(random_augment(img, config, draw), img);
  }
}

TEST(RandomAugment, DeterministicUnderSeed) {
  Rng rng(6);
  const Image img = random_image(16, 16, 1, rng);
  AugmentConfig config;
  config.alpha = 12.0;
  Rng a(123), b(123);
  EXPECT_EQ(random_augment(img, config, a), random_augment(img, config, b));
}

TEST(RandomAugment, OutputsStayInUnitRangeWithInputShape) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Image img = random_image(14, 10, 1, rng);
    AugmentConfig config;
    config.alpha = 45.0 * rng.uniform();
    Rng draw = rng.derive(trial);
    const Image out = random_augment(img, config, draw);
    EXPECT_EQ(out.shape(), img.shape());
    for (float v : out.pixels) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(RandomAugment, RejectsAlphaOutsideStudiedRange) {
  AugmentConfig config;
  config.alpha = 46.0;
  EXPECT_THROW(validate(config), ConfigError);
}

// Parameters feeding the transforms come from Rng::uniform; chi-square
// sanity check for uniformity on [-15, 15].
TEST(RandomAugment, ParameterDrawsAreUniform) {
  Rng rng(8);
  const int bins = 20, draws = 10000;
  std::vector<int> histogram(bins, 0);
  for (int i = 0; i < draws; ++i) {
    const double v = rng.uniform(-15.0, 15.0);
    ASSERT_GE(v, -15.0);
    ASSERT_LT(v, 15.0);
    ++histogram[static_cast<int>((v + 15.0) / 30.0 * bins)];
  }
  const double expected = static_cast<double>(draws) / bins;
  double chi2 = 0.0;
  for (int count : histogram) {
    const double d = count - expected;
    chi2 += d * d / expected;
  }
  // 19 degrees of freedom, p = 0.01 critical value 36.19.
  EXPECT_LT(chi2, 36.19);
}

}  // namespace
}  // namespace fewshot
