#pragma once

#include <cstddef>
#include <vector>

namespace fewshot {

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  bool operator==(const ImageShape&) const = default;
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
};

// Rank-3 raster, row-major (y, x, channel), values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, int c)
      : height(h),
        width(w),
        channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, 0.0f) {}

  float& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  ImageShape shape() const { return {height, width, channels}; }

  bool operator==(const Image&) const = default;
};

// Bilinear resample to the target size with half-pixel centers; values are
// clamped to [0, 1]. Resizing an image already at the target size is the
// bitwise identity, which makes the operation idempotent at the target size.
Image preprocess(const Image& image, int target_height, int target_width);

// Samples `source` through the inverse affine map
//   src_x = m00*x + m01*y + m02,  src_y = m10*x + m11*y + m12
// with bilinear interpolation and zero fill outside the source support.
// Exact integer maps degenerate to exact pixel copies.
Image affine_sample(const Image& source, const double m[6]);

// Channel conversion used at load time: grayscale replicated to the target
// channel count, RGB collapsed by Rec.601 luma when a single channel is asked.
Image convert_channels(const Image& image, int target_channels);

}  // namespace fewshot
