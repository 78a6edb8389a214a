#include "fewshot/weights_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fewshot/common.hpp"

namespace fewshot {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'N', 'W'};

static_assert(sizeof(float) == 4, "float32 storage assumed");

}  // namespace

void export_weights(const Parameters& params, const std::string& path) {
  nlohmann::json header;
  header["format"] = params.version;
  header["code_version"] = kVersion;
  header["source"] = source_tag(params.source);
  header["backbone"] = nlohmann::json::parse(backbone_to_json(params.config));
  header["tensors"] = nlohmann::json::array();
  const auto shapes = parameter_shapes(params.config);
  if (shapes.size() != params.tensors.size())
    throw ConfigError("parameters do not match their backbone config");
  for (std::size_t i = 0; i < shapes.size(); ++i)
    header["tensors"].push_back(
        {{"name", shapes[i].first}, {"shape", params.tensors[i].shape}});
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weight file: " + path);
  out.write(kMagic, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(header_text.data(), header_text.size());
  for (const Tensor<float>& t : params.tensors)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!out) throw IoError("write failed for weight file: " + path);
}

Parameters import_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a weight file (bad magic): " + path);
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string header_text(len, '\0');
  in.read(header_text.data(), len);
  if (!in) throw DataError("truncated weight header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const std::exception& e) {
    throw DataError("malformed weight header in " + path + ": " + e.what());
  }

  const std::string format = header.at("format").get<std::string>();
  if (format != kWeightFormatVersion)
    throw DataError("incompatible weight format '" + format + "' in " + path +
                    ", expected '" + kWeightFormatVersion + "'");

  Parameters params;
  params.version = format;
  params.config = backbone_from_json(header.at("backbone").dump());
  params.source = parse_source_tag(header.at("source").get<std::string>());

  const auto expected = parameter_shapes(params.config);
  const auto& tensors = header.at("tensors");
  if (tensors.size() != expected.size())
    throw DataError("weight file " + path + " lists " +
                    std::to_string(tensors.size()) + " tensors, config needs " +
                    std::to_string(expected.size()));

  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto shape = tensors[i].at("shape").get<std::vector<int>>();
    if (shape != expected[i].second)
      throw DataError("tensor '" + expected[i].first +
                      "' has unexpected shape in " + path);
    Tensor<float> t(shape);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!in)
      throw DataError("weight file " + path + " is truncated in tensor '" +
                      expected[i].first + "'");
    params.tensors.push_back(std::move(t));
  }
  return params;
}

}  // namespace fewshot
