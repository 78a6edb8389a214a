#include "fewshot/augment.hpp"

#include <cmath>

#include "fewshot/common.hpp"

namespace fewshot {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void validate(const AugmentConfig& config) {
  if (config.alpha < 0.0 || config.alpha > 45.0)
    throw ConfigError("augment alpha must lie in [0, 45], got " +
                      std::to_string(config.alpha));
}

Image shift(const Image& image, double dx, double dy) {
  if (std::abs(dx) > 0.5 || std::abs(dy) > 0.5)
    throw ConfigError("shift fractions must lie in [-0.5, 0.5]");
  if (dx == 0.0 && dy == 0.0) return image;
  // Inverse map: output(x, y) reads source(x - dx*W, y - dy*H).
  const double m[6] = {1.0, 0.0, -dx * image.width,
                       0.0, 1.0, -dy * image.height};
  return affine_sample(image, m);
}

Image scale(const Image& image, double factor) {
  if (factor < 0.5 || factor > 1.5)
    throw ConfigError("scale factor must lie in [0.5, 1.5]");
  if (factor == 1.0) return image;
  const double cx = (image.width - 1) / 2.0;
  const double cy = (image.height - 1) / 2.0;
  const double inv = 1.0 / factor;
  const double m[6] = {inv, 0.0, cx - inv * cx, 0.0, inv, cy - inv * cy};
  return affine_sample(image, m);
}

Image rotate(const Image& image, double degrees) {
  if (std::abs(degrees) > 90.0)
    throw ConfigError("rotation must lie in [-90, 90] degrees");
  if (degrees == 0.0) return image;
  const double rad = degrees * kPi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const double cx = (image.width - 1) / 2.0;
  const double cy = (image.height - 1) / 2.0;
  // Inverse rotation about the center.
  const double m[6] = {c,  s, cx - c * cx - s * cy,
                       -s, c, cy + s * cx - c * cy};
  return affine_sample(image, m);
}

Image random_augment(const Image& image, const AugmentConfig& config,
                     Rng& rng) {
  validate(config);
  Image out = image;
  if (config.enable_shift) {
    const double dx = rng.uniform(-config.alpha, config.alpha) / 100.0;
    const double dy = rng.uniform(-config.alpha, config.alpha) / 100.0;
    out = shift(out, dx, dy);
  }
  if (config.enable_scale) {
    const double pct = rng.uniform(-config.alpha, config.alpha) / 100.0;
    out = scale(out, 1.0 + pct);
  }
  if (config.enable_rotate) {
    const double deg = rng.uniform(-config.alpha, config.alpha);
    out = rotate(out, deg);
  }
  return out;
}

}  // namespace fewshot
