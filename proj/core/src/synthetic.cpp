#include "fewshot/synthetic.hpp"

#include <cmath>
#include <filesystem>

#include "fewshot/common.hpp"
#include "fewshot/manifest.hpp"
#include "fewshot/png_io.hpp"

namespace fewshot {

Image synthetic_image(int label, int image_size, float noise, Rng& rng) {
  Image img(image_size, image_size, 1);
  const double mid = (image_size - 1) / 2.0;
  const double cx = mid + rng.uniform(-3.0, 3.0);
  const double cy = mid + rng.uniform(-3.0, 3.0);
  if (label == 0) {
    const double sigma = rng.uniform(3.0, 5.0);
    const double amp = rng.uniform(0.5, 0.7);
    for (int y = 0; y < image_size; ++y)
      for (int x = 0; x < image_size; ++x) {
        const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        img.at(y, x, 0) =
            static_cast<float>(0.25 + amp * std::exp(-r2 / (2 * sigma * sigma)));
      }
  } else {
    const double radius = rng.uniform(6.0, 9.0);
    const double width = rng.uniform(1.5, 2.5);
    const double depth = rng.uniform(0.3, 0.5);
    for (int y = 0; y < image_size; ++y)
      for (int x = 0; x < image_size; ++x) {
        const double r =
            std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
        const double d = (r - radius) / width;
        img.at(y, x, 0) =
            static_cast<float>(0.55 - depth * std::exp(-0.5 * d * d));
      }
  }
  for (float& v : img.pixels) {
    v += static_cast<float>(rng.uniform(-noise, noise));
    v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }
  return img;
}

Dataset make_synthetic_dataset(const SyntheticConfig& config) {
  Dataset dataset;
  dataset.name = config.name;
  dataset.classes = {0, 1};
  dataset.image_shape = {config.image_size, config.image_size, 1};
  Rng rng(config.seed);
  auto add = [&](int label, int count, Split split, const char* tag) {
    for (int i = 0; i < count; ++i) {
      Sample s;
      s.id = std::string(tag) + "_c" + std::to_string(label) + "_" +
             std::to_string(i) + ".png";
      s.label = label;
      s.source = config.name;
      s.split = split;
      s.image = synthetic_image(label, config.image_size, config.noise, rng);
      dataset.samples.push_back(std::move(s));
    }
  };
  add(0, config.train_per_class, Split::kTrain, "train");
  add(1, config.train_per_class, Split::kTrain, "train");
  add(0, config.test_per_class, Split::kTest, "test");
  add(1, config.test_per_class, Split::kTest, "test");
  return dataset;
}

std::string write_synthetic_corpus(const SyntheticConfig& config,
                                   const std::string& directory) {
  namespace fs = std::filesystem;
  const Dataset dataset = make_synthetic_dataset(config);
  const fs::path dir(directory);
  fs::create_directories(dir / "images");

  std::vector<std::string> paths;
  std::vector<int> labels;
  std::vector<Split> splits;
  for (const Sample& s : dataset.samples) {
    const std::string rel = "images/" + s.id;
    write_png((dir / rel).string(), s.image);
    paths.push_back(rel);
    labels.push_back(s.label);
    splits.push_back(s.split);
  }
  const std::string manifest = (dir / "manifest.csv").string();
  write_manifest(manifest, paths, labels, splits);
  return manifest;
}

}  // namespace fewshot
