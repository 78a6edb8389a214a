#pragma once

#include "fewshot/image.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

// Anatomy-preserving augmentation family: shift, scale, rotate. Flips are
// deliberately absent from this interface (they would mirror anatomy).
// alpha is a percentage for shift/scale and degrees for rotation; alpha = 0
// makes every transform the bitwise identity.
struct AugmentConfig {
  double alpha = 0.0;  // in [0, 45]
  bool enable_shift = true;
  bool enable_scale = true;
  bool enable_rotate = true;
};

void validate(const AugmentConfig& config);

// Translate content by (dx * width, dy * height) pixels; vacated pixels are
// zero-filled. Whole-pixel offsets are exact copies.
Image shift(const Image& image, double dx, double dy);

// Rescale about the image center; output size is unchanged, zoom-out borders
// are zero-filled and zoom-in crops centrally. factor in [0.5, 1.5].
Image scale(const Image& image, double factor);

// Rotate about the image center, zero fill outside. Accepts up to +/-90
// degrees; the random path stays within +/-alpha <= 45.
Image rotate(const Image& image, double degrees);

// Applies the enabled transforms in fixed order shift -> scale -> rotate with
// parameters drawn uniformly from [-alpha, alpha] (percent, percent, degrees).
Image random_augment(const Image& image, const AugmentConfig& config, Rng& rng);

}  // namespace fewshot
