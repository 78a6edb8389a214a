#pragma once

#include <cstdint>
#include <string>

#include "fewshot/dataset.hpp"

namespace fewshot {

// Two-class synthetic raster corpus: class 0 images carry a bright Gaussian
// blob, class 1 images a darker ring, both with jittered geometry and
// additive noise. Used for self-contained experiments and tests.
struct SyntheticConfig {
  int image_size = 32;
  int train_per_class = 300;
  int test_per_class = 100;
  float noise = 0.05f;
  std::uint64_t seed = 7;
  std::string name = "synthetic";
};

Image synthetic_image(int label, int image_size, float noise, Rng& rng);

Dataset make_synthetic_dataset(const SyntheticConfig& config);

// Materializes the corpus as PNG files plus a manifest; returns the manifest
// path. Loading it back through load_manifest reproduces the dataset up to
// 8-bit quantization.
std::string write_synthetic_corpus(const SyntheticConfig& config,
                                   const std::string& directory);

}  // namespace fewshot
