#include "fewshot/backbone.hpp"

#include <json.hpp>

#include "fewshot/weights_io.hpp"

namespace fewshot {

BackboneConfig default_backbone(ImageShape input) {
  BackboneConfig config;
  config.input_shape = input;
  config.conv_blocks = {{8}, {16}, {32}};
  config.embedding_dim = 64;
  config.normalize = true;
  config.use_bias = true;
  return config;
}

void validate(const BackboneConfig& config) {
  const ImageShape& in = config.input_shape;
  if (in.height <= 0 || in.width <= 0 || in.channels <= 0)
    throw ConfigError("backbone input_shape must be positive");
  if (config.embedding_dim < 2)
    throw ConfigError("embedding_dim must be at least 2");
  for (std::size_t i = 0; i < config.conv_blocks.size(); ++i) {
    const ConvBlockSpec& b = config.conv_blocks[i];
    if (b.filters <= 0)
      throw ConfigError("conv block " + std::to_string(i) +
                        ": filters must be positive");
    if (b.kernel <= 0 || b.kernel % 2 == 0)
      throw ConfigError("conv block " + std::to_string(i) +
                        ": kernel must be a positive odd integer");
    if (b.stride <= 0)
      throw ConfigError("conv block " + std::to_string(i) +
                        ": stride must be positive");
  }
  plan_layers(config);  // checks that every stage keeps positive dims
}

std::vector<LayerPlan> plan_layers(const BackboneConfig& config) {
  std::vector<LayerPlan> layers;
  int h = config.input_shape.height;
  int w = config.input_shape.width;
  int c = config.input_shape.channels;
  int tensor_index = 0;

  for (std::size_t i = 0; i < config.conv_blocks.size(); ++i) {
    const ConvBlockSpec& block = config.conv_blocks[i];
    LayerPlan conv;
    conv.kind = LayerKind::kConv;
    conv.name = "conv" + std::to_string(i);
    conv.in_h = h;
    conv.in_w = w;
    conv.in_c = c;
    conv.kernel = block.kernel;
    conv.stride = block.stride;
    conv.pad = (block.kernel - 1) / 2;
    conv.out_h = (h + 2 * conv.pad - block.kernel) / block.stride + 1;
    conv.out_w = (w + 2 * conv.pad - block.kernel) / block.stride + 1;
    conv.out_c = block.filters;
    if (conv.out_h <= 0 || conv.out_w <= 0)
      throw ConfigError(conv.name + ": output collapses to zero size");
    conv.weight_index = tensor_index++;
    if (config.use_bias) conv.bias_index = tensor_index++;
    layers.push_back(conv);
    h = conv.out_h;
    w = conv.out_w;
    c = conv.out_c;

    LayerPlan relu;
    relu.kind = LayerKind::kRelu;
    relu.name = "relu" + std::to_string(i);
    relu.in_h = relu.out_h = h;
    relu.in_w = relu.out_w = w;
    relu.in_c = relu.out_c = c;
    layers.push_back(relu);

    if (block.pool) {
      if (h < 2 || w < 2)
        throw ConfigError("pool" + std::to_string(i) +
                          ": input too small for 2x2 pooling");
      LayerPlan pool;
      pool.kind = LayerKind::kPool;
      pool.name = "pool" + std::to_string(i);
      pool.in_h = h;
      pool.in_w = w;
      pool.in_c = c;
      pool.out_h = h / 2;
      pool.out_w = w / 2;
      pool.out_c = c;
      layers.push_back(pool);
      h = pool.out_h;
      w = pool.out_w;
    }
  }

  LayerPlan dense;
  dense.kind = LayerKind::kDense;
  dense.name = "dense";
  dense.in_h = h;
  dense.in_w = w;
  dense.in_c = c;
  dense.out_h = 1;
  dense.out_w = 1;
  dense.out_c = config.embedding_dim;
  dense.weight_index = tensor_index++;
  if (config.use_bias) dense.bias_index = tensor_index++;
  layers.push_back(dense);

  if (config.normalize) {
    LayerPlan norm;
    norm.kind = LayerKind::kL2Norm;
    norm.name = "l2norm";
    norm.in_h = norm.out_h = 1;
    norm.in_w = norm.out_w = 1;
    norm.in_c = norm.out_c = config.embedding_dim;
    layers.push_back(norm);
  }
  return layers;
}

std::vector<std::pair<std::string, std::vector<int>>> parameter_shapes(
    const BackboneConfig& config) {
  std::vector<std::pair<std::string, std::vector<int>>> shapes;
  for (const LayerPlan& layer : plan_layers(config)) {
    if (layer.kind == LayerKind::kConv) {
      shapes.emplace_back(layer.name, std::vector<int>{layer.kernel,
                                                       layer.kernel,
                                                       layer.in_c,
                                                       layer.out_c});
      if (layer.bias_index >= 0)
        shapes.emplace_back(layer.name + ".bias",
                            std::vector<int>{layer.out_c});
    } else if (layer.kind == LayerKind::kDense) {
      shapes.emplace_back(
          layer.name,
          std::vector<int>{static_cast<int>(layer.in_len()), layer.out_c});
      if (layer.bias_index >= 0)
        shapes.emplace_back(layer.name + ".bias",
                            std::vector<int>{layer.out_c});
    }
  }
  return shapes;
}

std::size_t parameter_count(const BackboneConfig& config) {
  std::size_t n = 0;
  for (const auto& [name, shape] : parameter_shapes(config))
    n += Tensor<float>::numel_of(shape);
  return n;
}

bool same_architecture(const BackboneConfig& a, const BackboneConfig& b) {
  if (!(a.input_shape == b.input_shape) ||
      a.embedding_dim != b.embedding_dim || a.normalize != b.normalize ||
      a.use_bias != b.use_bias ||
      a.conv_blocks.size() != b.conv_blocks.size())
    return false;
  for (std::size_t i = 0; i < a.conv_blocks.size(); ++i) {
    const ConvBlockSpec& x = a.conv_blocks[i];
    const ConvBlockSpec& y = b.conv_blocks[i];
    if (x.filters != y.filters || x.kernel != y.kernel ||
        x.stride != y.stride || x.pool != y.pool)
      return false;
  }
  return true;
}

std::string backbone_to_json(const BackboneConfig& config) {
  nlohmann::json j;
  j["input_shape"] = {config.input_shape.height, config.input_shape.width,
                      config.input_shape.channels};
  j["conv_blocks"] = nlohmann::json::array();
  for (const ConvBlockSpec& b : config.conv_blocks)
    j["conv_blocks"].push_back({{"filters", b.filters},
                                {"kernel", b.kernel},
                                {"stride", b.stride},
                                {"pool", b.pool}});
  j["embedding_dim"] = config.embedding_dim;
  j["normalize"] = config.normalize;
  j["use_bias"] = config.use_bias;
  return j.dump();
}

BackboneConfig backbone_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  BackboneConfig config;
  const auto& shape = j.at("input_shape");
  config.input_shape = {shape.at(0).get<int>(), shape.at(1).get<int>(),
                        shape.at(2).get<int>()};
  config.conv_blocks.clear();
  for (const auto& b : j.at("conv_blocks"))
    config.conv_blocks.push_back({b.at("filters").get<int>(),
                                  b.at("kernel").get<int>(),
                                  b.at("stride").get<int>(),
                                  b.at("pool").get<bool>()});
  config.embedding_dim = j.at("embedding_dim").get<int>();
  config.normalize = j.at("normalize").get<bool>();
  config.use_bias = j.at("use_bias").get<bool>();
  return config;
}

const char* source_tag(ParamSource source) {
  switch (source) {
    case ParamSource::kScratch: return "scratch";
    case ParamSource::kImported: return "imported";
    case ParamSource::kPretrained: return "pretrained";
  }
  return "scratch";
}

ParamSource parse_source_tag(const std::string& tag) {
  if (tag == "scratch") return ParamSource::kScratch;
  if (tag == "imported") return ParamSource::kImported;
  if (tag == "pretrained") return ParamSource::kPretrained;
  throw ConfigError("unknown parameter source tag '" + tag + "'");
}

Parameters init_parameters(const BackboneConfig& config,
                           const InitStrategy& strategy, std::uint64_t seed) {
  if (strategy.kind == InitStrategy::kImported) {
    Parameters params = import_weights(strategy.path);
    if (!same_architecture(params.config, config)) {
      const auto expected = parameter_shapes(config);
      const auto found = parameter_shapes(params.config);
      std::string detail;
      for (std::size_t i = 0; i < std::max(expected.size(), found.size());
           ++i) {
        auto fmt = [](const std::vector<int>& s) {
          std::string out = "[";
          for (std::size_t k = 0; k < s.size(); ++k)
            out += (k ? "x" : "") + std::to_string(s[k]);
          return out + "]";
        };
        const std::string exp =
            i < expected.size() ? expected[i].first + fmt(expected[i].second)
                                : "<none>";
        const std::string got =
            i < found.size() ? found[i].first + fmt(found[i].second)
                             : "<none>";
        if (exp != got)
          detail += " expected " + exp + ", found " + got + ";";
      }
      throw ConfigError("imported weights do not match backbone:" + detail);
    }
    params.source = ParamSource::kImported;
    return params;
  }
  return init_scratch<float>(config, seed);
}

std::vector<float> forward(const Parameters& params, const Image& image) {
  Network<float> network(params.config);
  return network.embed(params, image);
}

}  // namespace fewshot
