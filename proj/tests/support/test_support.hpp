#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fewshot/dataset.hpp"
#include "fewshot/rng.hpp"

namespace fewshot::testing {

// Dataset of tiny images whose pixel values encode the sample index, so
// duplicated draws remain distinguishable in audits.
inline Dataset tagged_dataset(const std::vector<int>& labels, int edge = 2) {
  Dataset dataset;
  dataset.name = "tagged";
  dataset.image_shape = {edge, edge, 1};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.label = labels[i];
    s.source = dataset.name;
    s.image = Image(edge, edge, 1);
    s.image.pixels.assign(s.image.pixels.size(),
                          static_cast<float>(i % 97) / 97.0f);
    dataset.samples.push_back(std::move(s));
    dataset.classes.insert(labels[i]);
  }
  return dataset;
}

inline Image random_image(int h, int w, int c, Rng& rng) {
  Image img(h, w, c);
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform());
  return img;
}

// Unique scratch directory under the system temp root, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fewshot_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace fewshot::testing
