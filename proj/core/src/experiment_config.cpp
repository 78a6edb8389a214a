#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fewshot/common.hpp"
#include "fewshot/experiment.hpp"

namespace fewshot {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown config key '" + path + it.key() + "'");
  }
}

// Paths resolve to absolute form so a run manifest replays from anywhere.
std::string resolve_path(const std::string& path, const std::string& base) {
  std::filesystem::path p(path);
  if (!p.is_absolute())
    p = base.empty() ? std::filesystem::absolute(p)
                     : std::filesystem::path(base) / p;
  return p.lexically_normal().string();
}

ImageShape parse_image(const json& j) {
  check_keys(j, "image.", {"height", "width", "channels"});
  ImageShape shape{32, 32, 1};
  if (j.contains("height")) shape.height = j["height"].get<int>();
  if (j.contains("width")) shape.width = j["width"].get<int>();
  if (j.contains("channels")) shape.channels = j["channels"].get<int>();
  if (shape.height <= 0 || shape.width <= 0 || shape.channels <= 0)
    throw ConfigError("image dimensions must be positive");
  return shape;
}

BackboneConfig parse_backbone(const json& j, ImageShape image) {
  check_keys(j, "backbone.",
             {"conv_blocks", "embedding_dim", "normalize", "use_bias"});
  BackboneConfig config = default_backbone(image);
  if (j.contains("conv_blocks")) {
    config.conv_blocks.clear();
    for (const auto& b : j["conv_blocks"]) {
      check_keys(b, "backbone.conv_blocks[].",
                 {"filters", "kernel", "stride", "pool"});
      ConvBlockSpec spec;
      spec.filters = b.at("filters").get<int>();
      if (b.contains("kernel")) spec.kernel = b["kernel"].get<int>();
      if (b.contains("stride")) spec.stride = b["stride"].get<int>();
      if (b.contains("pool")) spec.pool = b["pool"].get<bool>();
      config.conv_blocks.push_back(spec);
    }
  }
  if (j.contains("embedding_dim"))
    config.embedding_dim = j["embedding_dim"].get<int>();
  if (j.contains("normalize")) config.normalize = j["normalize"].get<bool>();
  if (j.contains("use_bias")) config.use_bias = j["use_bias"].get<bool>();
  validate(config);
  return config;
}

TrainConfig parse_train(const json& j) {
  check_keys(j, "train.",
             {"epochs", "batch_size", "learning_rate", "momentum", "decay",
              "margin"});
  TrainConfig config;
  if (j.contains("epochs")) config.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) config.batch_size = j["batch_size"].get<int>();
  if (j.contains("learning_rate"))
    config.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("momentum")) config.momentum = j["momentum"].get<double>();
  if (j.contains("decay")) config.decay = j["decay"].get<double>();
  if (j.contains("margin")) config.margin = j["margin"].get<double>();
  validate(config);
  return config;
}

TechniqueConfig parse_techniques(const json& j, const std::string& base) {
  check_keys(j, "techniques.",
             {"init", "augment", "pairing", "loss", "classifier"});
  TechniqueConfig t;
  if (j.contains("init")) {
    const json& init = j["init"];
    if (init.is_string()) {
      if (init.get<std::string>() != "scratch")
        throw ConfigError(
            "techniques.init must be \"scratch\", {\"imported\": file}, or "
            "{\"pretrain\": dataset}");
      t.init = InitKind::kScratch;
    } else if (init.is_object() && init.contains("imported")) {
      check_keys(init, "techniques.init.", {"imported"});
      t.init = InitKind::kImported;
      t.init_path = resolve_path(init["imported"].get<std::string>(), base);
    } else if (init.is_object() && init.contains("pretrain")) {
      check_keys(init, "techniques.init.", {"pretrain"});
      t.init = InitKind::kPretrain;
      t.pretrain_source = init["pretrain"].get<std::string>();
    } else {
      throw ConfigError(
          "techniques.init must be \"scratch\", {\"imported\": file}, or "
          "{\"pretrain\": dataset}");
    }
  }
  if (j.contains("augment")) {
    const json& a = j["augment"];
    check_keys(a, "techniques.augment.",
               {"alpha", "enable_shift", "enable_scale", "enable_rotate"});
    if (a.contains("alpha")) t.augment.alpha = a["alpha"].get<double>();
    if (a.contains("enable_shift"))
      t.augment.enable_shift = a["enable_shift"].get<bool>();
    if (a.contains("enable_scale"))
      t.augment.enable_scale = a["enable_scale"].get<bool>();
    if (a.contains("enable_rotate"))
      t.augment.enable_rotate = a["enable_rotate"].get<bool>();
    validate(t.augment);
  }
  if (j.contains("pairing")) {
    const json& p = j["pairing"];
    check_keys(p, "techniques.pairing.",
               {"ratio", "balanced_sampling", "pairs_per_epoch"});
    if (p.contains("ratio"))
      t.pairing = parse_ratio(p["ratio"].get<std::string>(), t.pairing);
    if (p.contains("balanced_sampling"))
      t.pairing.balanced_sampling = p["balanced_sampling"].get<bool>();
    if (p.contains("pairs_per_epoch"))
      t.pairing.pairs_per_epoch = p["pairs_per_epoch"].get<std::size_t>();
    validate(t.pairing);
  }
  if (j.contains("loss")) t.loss = parse_loss_tag(j["loss"].get<std::string>());
  if (j.contains("classifier")) {
    const json& c = j["classifier"];
    check_keys(c, "techniques.classifier.",
               {"kind", "k", "svm_kernel", "svm_cost", "rf_trees"});
    if (c.contains("kind"))
      t.classifier.kind = parse_classifier_tag(c["kind"].get<std::string>());
    if (c.contains("k")) t.classifier.k = c["k"].get<int>();
    if (c.contains("svm_kernel"))
      t.classifier.svm_kernel =
          parse_kernel_tag(c["svm_kernel"].get<std::string>());
    if (c.contains("svm_cost"))
      t.classifier.svm_cost = c["svm_cost"].get<double>();
    if (c.contains("rf_trees")) t.classifier.rf_trees = c["rf_trees"].get<int>();
    validate(t.classifier);
  }
  return t;
}

ExperimentConfig parse_config_json(const json& j, const std::string& base) {
  check_keys(j, "",
             {"datasets", "grid", "imbalance_levels", "majority_counts",
              "folds", "seed", "mode", "output_dir", "image", "backbone",
              "train", "techniques", "pretrain_count", "threads"});

  ExperimentConfig config;
  if (!j.contains("datasets") || !j["datasets"].is_object() ||
      j["datasets"].empty())
    throw ConfigError("config requires a non-empty 'datasets' map");
  for (auto it = j["datasets"].begin(); it != j["datasets"].end(); ++it)
    config.datasets[it.key()] = resolve_path(it->get<std::string>(), base);

  if (!j.contains("grid") || !j["grid"].is_array() || j["grid"].empty())
    throw ConfigError("config requires a non-empty 'grid' of [from, to] pairs");
  for (const auto& cell : j["grid"]) {
    if (!cell.is_array() || cell.size() != 2)
      throw ConfigError("grid entries must be [from, to] pairs");
    const std::string from = cell[0].get<std::string>();
    const std::string to = cell[1].get<std::string>();
    for (const std::string& name : {from, to})
      if (!config.datasets.count(name))
        throw ConfigError("grid references unknown dataset '" + name + "'");
    config.grid.emplace_back(from, to);
  }

  if (!j.contains("imbalance_levels") || !j["imbalance_levels"].is_array() ||
      j["imbalance_levels"].empty())
    throw ConfigError("config requires non-empty 'imbalance_levels'");
  for (const auto& token : j["imbalance_levels"])
    config.levels.push_back(parse_level(token.get<std::string>()));

  if (j.contains("majority_counts")) {
    config.majority_counts = j["majority_counts"].get<std::vector<int>>();
    if (config.majority_counts.empty())
      throw ConfigError("majority_counts must be non-empty");
  }
  if (j.contains("folds")) {
    config.folds = j["folds"].get<int>();
    if (config.folds <= 0) throw ConfigError("folds must be positive");
  }
  if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("mode"))
    config.mode = parse_mode_tag(j["mode"].get<std::string>());
  if (j.contains("output_dir"))
    config.output_dir = j["output_dir"].get<std::string>();
  config.image = j.contains("image") ? parse_image(j["image"]) : ImageShape{32, 32, 1};
  config.backbone = j.contains("backbone")
                        ? parse_backbone(j["backbone"], config.image)
                        : default_backbone(config.image);
  config.train = j.contains("train") ? parse_train(j["train"]) : TrainConfig{};
  config.techniques = j.contains("techniques")
                          ? parse_techniques(j["techniques"], base)
                          : TechniqueConfig{};
  if (j.contains("pretrain_count")) {
    config.pretrain_count = j["pretrain_count"].get<int>();
    if (config.pretrain_count <= 0)
      throw ConfigError("pretrain_count must be positive");
  }
  if (j.contains("threads")) {
    config.threads = j["threads"].get<int>();
    if (config.threads <= 0) throw ConfigError("threads must be positive");
  }

  if (config.techniques.init == InitKind::kPretrain &&
      !config.datasets.count(config.techniques.pretrain_source))
    throw ConfigError("techniques.init.pretrain references unknown dataset '" +
                      config.techniques.pretrain_source + "'");

  // Every level must scale to a whole minority count for every majority.
  for (int majority : config.majority_counts)
    for (ImbalanceLevel level : config.levels)
      level_minority_count(level, majority);

  return config;
}

}  // namespace

const char* mode_tag(RunMode mode) {
  return mode == RunMode::kSingleCnn ? "single_cnn" : "siamese";
}

RunMode parse_mode_tag(const std::string& tag) {
  if (tag == "siamese") return RunMode::kSiamese;
  if (tag == "single_cnn") return RunMode::kSingleCnn;
  throw ConfigError("unknown mode '" + tag +
                    "', expected siamese or single_cnn");
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string base =
      std::filesystem::absolute(path).parent_path().string();
  return parse_config_text(buffer.str(), base);
}

ExperimentConfig parse_config_text(const std::string& json_text,
                                   const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  // A run manifest is a config wrapped with provenance; accept it directly.
  if (j.is_object() && j.contains("config") && j.contains("code_version"))
    return parse_config_json(j["config"], base_dir);
  return parse_config_json(j, base_dir);
}

std::string resolved_config_json(const ExperimentConfig& config) {
  json j;
  j["datasets"] = config.datasets;
  j["grid"] = json::array();
  for (const auto& [from, to] : config.grid)
    j["grid"].push_back({from, to});
  j["imbalance_levels"] = json::array();
  for (ImbalanceLevel level : config.levels)
    j["imbalance_levels"].push_back(std::string(1, level_letter(level)));
  j["majority_counts"] = config.majority_counts;
  j["folds"] = config.folds;
  j["seed"] = config.seed;
  j["mode"] = mode_tag(config.mode);
  j["output_dir"] = config.output_dir;
  j["image"] = {{"height", config.image.height},
                {"width", config.image.width},
                {"channels", config.image.channels}};
  j["backbone"] = json::parse(backbone_to_json(config.backbone));
  j["backbone"].erase("input_shape");  // implied by "image"
  j["train"] = {{"epochs", config.train.epochs},
                {"batch_size", config.train.batch_size},
                {"learning_rate", config.train.learning_rate},
                {"momentum", config.train.momentum},
                {"decay", config.train.decay},
                {"margin", config.train.margin}};
  json init;
  switch (config.techniques.init) {
    case InitKind::kScratch: init = "scratch"; break;
    case InitKind::kImported:
      init = {{"imported", config.techniques.init_path}};
      break;
    case InitKind::kPretrain:
      init = {{"pretrain", config.techniques.pretrain_source}};
      break;
  }
  j["techniques"] = {
      {"init", init},
      {"augment",
       {{"alpha", config.techniques.augment.alpha},
        {"enable_shift", config.techniques.augment.enable_shift},
        {"enable_scale", config.techniques.augment.enable_scale},
        {"enable_rotate", config.techniques.augment.enable_rotate}}},
      {"pairing",
       {{"ratio", config.techniques.pairing.ratio_string()},
        {"balanced_sampling", config.techniques.pairing.balanced_sampling},
        {"pairs_per_epoch", config.techniques.pairing.pairs_per_epoch}}},
      {"loss", loss_tag(config.techniques.loss)},
      {"classifier",
       {{"kind", classifier_tag(config.techniques.classifier.kind)},
        {"k", config.techniques.classifier.k},
        {"svm_kernel", kernel_tag(config.techniques.classifier.svm_kernel)},
        {"svm_cost", config.techniques.classifier.svm_cost},
        {"rf_trees", config.techniques.classifier.rf_trees}}}};
  j["pretrain_count"] = config.pretrain_count;
  j["threads"] = config.threads;
  return j.dump(2);
}

std::string technique_signature(const ExperimentConfig& config) {
  const TechniqueConfig& t = config.techniques;
  std::string init;
  switch (t.init) {
    case InitKind::kScratch: init = "scratch"; break;
    case InitKind::kImported: init = "imported"; break;
    case InitKind::kPretrain: init = "pretrain(" + t.pretrain_source + ")"; break;
  }
  std::string sig = std::string(mode_tag(config.mode)) + "|init=" + init +
                    "|alpha=" + format_fixed(t.augment.alpha, 1);
  if (config.mode == RunMode::kSiamese) {
    sig += "|pair=" + t.pairing.ratio_string() +
           "|bal=" + (t.pairing.balanced_sampling ? "1" : "0") +
           "|loss=" + loss_tag(t.loss) +
           "|clf=" + classifier_tag(t.classifier.kind);
  } else {
    sig += std::string("|bal=") + (t.pairing.balanced_sampling ? "1" : "0") +
           "|loss=" + loss_tag(t.loss) + "|clf=softmax";
  }
  return sig;
}

}  // namespace fewshot
