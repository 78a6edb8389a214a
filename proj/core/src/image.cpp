#include "fewshot/image.hpp"

#include <algorithm>
#include <cmath>

#include "fewshot/common.hpp"

namespace fewshot {

namespace {

inline float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

// a + t*(b-a): exact at t=0 and constant-preserving, unlike (1-t)*a + t*b.
inline float lerp(float a, float b, float t) {
  return a + t * (b - a);
}

}  // namespace

Image preprocess(const Image& image, int target_height, int target_width) {
  if (target_height <= 0 || target_width <= 0)
    throw DataError("preprocess: target dimensions must be positive");
  if (image.height <= 0 || image.width <= 0 || image.channels <= 0 ||
      image.pixels.size() != image.shape().pixel_count())
    throw DataError("preprocess: malformed input raster");

  Image out(target_height, target_width, image.channels);
  const double sy = static_cast<double>(image.height) / target_height;
  const double sx = static_cast<double>(image.width) / target_width;
  for (int y = 0; y < target_height; ++y) {
    double src_y = (y + 0.5) * sy - 0.5;
    src_y = std::min(std::max(src_y, 0.0), static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(src_y);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const float fy = static_cast<float>(src_y - y0);
    for (int x = 0; x < target_width; ++x) {
      double src_x = (x + 0.5) * sx - 0.5;
      src_x = std::min(std::max(src_x, 0.0), static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(src_x);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const float fx = static_cast<float>(src_x - x0);
      for (int c = 0; c < image.channels; ++c) {
        const float top = lerp(image.at(y0, x0, c), image.at(y0, x1, c), fx);
        const float bot = lerp(image.at(y1, x0, c), image.at(y1, x1, c), fx);
        out.at(y, x, c) = clamp01(lerp(top, bot, fy));
      }
    }
  }
  return out;
}

Image affine_sample(const Image& source, const double m[6]) {
  Image out(source.height, source.width, source.channels);
  for (int y = 0; y < source.height; ++y) {
    for (int x = 0; x < source.width; ++x) {
      const double src_x = m[0] * x + m[1] * y + m[2];
      const double src_y = m[3] * x + m[4] * y + m[5];
      const double fx0 = std::floor(src_x);
      const double fy0 = std::floor(src_y);
      const int x0 = static_cast<int>(fx0);
      const int y0 = static_cast<int>(fy0);
      const float tx = static_cast<float>(src_x - fx0);
      const float ty = static_cast<float>(src_y - fy0);
      for (int c = 0; c < source.channels; ++c) {
        auto fetch = [&](int yy, int xx) -> float {
          if (yy < 0 || yy >= source.height || xx < 0 || xx >= source.width)
            return 0.0f;
          return source.at(yy, xx, c);
        };
        const float top = lerp(fetch(y0, x0), fetch(y0, x0 + 1), tx);
        const float bot = lerp(fetch(y0 + 1, x0), fetch(y0 + 1, x0 + 1), tx);
        out.at(y, x, c) = clamp01(lerp(top, bot, ty));
      }
    }
  }
  return out;
}

Image convert_channels(const Image& image, int target_channels) {
  if (image.channels == target_channels) return image;
  Image out(image.height, image.width, target_channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      float gray = 0.0f;
      if (image.channels >= 3) {
        gray = 0.299f * image.at(y, x, 0) + 0.587f * image.at(y, x, 1) +
               0.114f * image.at(y, x, 2);
      } else {
        gray = image.at(y, x, 0);
      }
      if (target_channels >= 3 && image.channels >= 3) {
        for (int c = 0; c < target_channels; ++c)
          out.at(y, x, c) = image.at(y, x, std::min(c, image.channels - 1));
      } else {
        for (int c = 0; c < target_channels; ++c) out.at(y, x, c) = gray;
      }
    }
  }
  return out;
}

}  // namespace fewshot
