#pragma once

#include <string>

#include "fewshot/image.hpp"

namespace fewshot {

// Decodes an 8- or 16-bit PNG into a [0,1] float raster (palette and alpha
// are expanded/stripped by the decoder). Throws IoError on missing files and
// DataError on malformed content.
Image read_png(const std::string& path);

// Writes an 8-bit grayscale (1 channel) or RGB (3 channel) PNG.
void write_png(const std::string& path, const Image& image);

}  // namespace fewshot
