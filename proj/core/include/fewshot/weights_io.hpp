#pragma once

#include <string>

#include "fewshot/backbone.hpp"

namespace fewshot {

// Weight container: "FSNW" magic, a little-endian uint32 header length, a
// JSON header (format version, backbone config echo, source tag, tensor
// shapes), then raw little-endian float32 tensor data in declaration order.
void export_weights(const Parameters& params, const std::string& path);
Parameters import_weights(const std::string& path);

}  // namespace fewshot
