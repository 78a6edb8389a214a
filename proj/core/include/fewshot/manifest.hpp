#pragma once

#include <string>

#include "fewshot/dataset.hpp"

namespace fewshot {

struct LoadOptions {
  int target_height = 32;
  int target_width = 32;
  int channels = 1;
  std::string name;  // defaults to the manifest filename stem
};

// Loads a `path,label,split` CSV manifest (header row required, paths
// relative to the manifest file). Images are decoded, converted to the
// configured channel count, bilinear-resized, and normalized to [0, 1].
// Sample order matches manifest order; ids are the manifest path strings.
Dataset load_manifest(const std::string& manifest_path,
                      const LoadOptions& options = {});

// Writes a manifest for an on-disk dataset; paths are stored as given.
void write_manifest(const std::string& manifest_path,
                    const std::vector<std::string>& paths,
                    const std::vector<int>& labels,
                    const std::vector<Split>& splits);

}  // namespace fewshot
