#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fewshot/common.hpp"
#include "fewshot/experiment.hpp"
#include "fewshot/manifest.hpp"
#include "fewshot/metrics.hpp"
#include "fewshot/weights_io.hpp"

namespace {

using namespace fewshot;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::string> mode;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config (JSON)")
      ->required();
  cmd->add_option("--seed", flags.seed, "Override the config seed");
  cmd->add_option("--output", flags.output, "Override the output directory");
  cmd->add_option("--mode", flags.mode, "siamese | single_cnn")
      ->check(CLI::IsMember({"siamese", "single_cnn"}));
  cmd->add_option("--threads", flags.threads, "Worker threads for grid cells");
}

ExperimentConfig load_config(const CommonFlags& flags) {
  ExperimentConfig config = parse_config(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.output) config.output_dir = *flags.output;
  if (flags.mode) config.mode = parse_mode_tag(*flags.mode);
  if (flags.threads) config.threads = *flags.threads;
  return config;
}

int cmd_prepare(const CommonFlags& flags) {
  const ExperimentConfig config = load_config(flags);
  for (const auto& [name, manifest] : config.datasets) {
    LoadOptions options;
    options.target_height = config.image.height;
    options.target_width = config.image.width;
    options.channels = config.image.channels;
    options.name = name;
    const Dataset dataset = load_manifest(manifest, options);
    const Dataset train = split_subset(dataset, Split::kTrain);
    const Dataset test = split_subset(dataset, Split::kTest);
    std::printf("%s: %zu samples (train %zu / test %zu), shape %dx%dx%d\n",
                name.c_str(), dataset.size(), train.size(), test.size(),
                dataset.image_shape.height, dataset.image_shape.width,
                dataset.image_shape.channels);
    const auto counts = class_counts(dataset);
    for (const auto& [label, count] : counts)
      std::printf("  class %d: %zu\n", label, count);
    std::printf("  MeanIR: %s\n", format_fixed(mean_ir(counts), 2).c_str());
  }
  return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& from_opt,
              const std::string& level_opt, int majority, int fold) {
  const ExperimentConfig config = load_config(flags);
  const std::string from =
      from_opt.empty() ? config.grid.front().first : from_opt;
  const ImbalanceLevel level = level_opt.empty()
                                   ? config.levels.front()
                                   : parse_level(level_opt);
  const int maj = majority > 0 ? majority : config.majority_counts.front();

  const CellTrainResult result =
      train_cell(config, from, level, maj, fold);

  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  const std::string tag = from + "_" + level_letter(level) + "_" +
                          std::to_string(maj) + "_f" + std::to_string(fold);
  const std::string weight_path =
      (fs::path(config.output_dir) / (tag + ".fsnw")).string();
  export_weights(result.params, weight_path);

  const std::string history_path =
      (fs::path(config.output_dir) / (tag + "_history.csv")).string();
  std::ofstream history(history_path);
  history << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < result.history.size(); ++e)
    history << e << ',' << format_fixed(result.history[e], 6) << '\n';

  std::ofstream plan(
      (fs::path(config.output_dir) / (tag + "_folds.json")).string());
  plan << result.plan.to_json();

  std::printf("trained %s: %zu samples, %d epochs -> %s\n", tag.c_str(),
              result.draw.size(), config.train.epochs, weight_path.c_str());
  if (!result.history.empty())
    std::printf("  first epoch loss %s, last %s\n",
                format_fixed(result.history.front(), 6).c_str(),
                format_fixed(result.history.back(), 6).c_str());
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& weights_path,
             const std::string& dataset_name) {
  const ExperimentConfig config = load_config(flags);
  const Parameters params = import_weights(weights_path);
  const std::string name =
      dataset_name.empty() ? config.grid.front().second : dataset_name;
  const EvalResult result = evaluate_dataset(config, params, name);
  std::printf("%s: macro-F1 %s on %zu test samples (classifier %s)\n",
              name.c_str(), format_fixed(result.macro_f1, 4).c_str(),
              result.test_count, result.classifier.c_str());
  for (const auto& [label, score] : result.per_class_f1)
    std::printf("  class %d: F1 %s\n", label, format_fixed(score, 4).c_str());
  return 0;
}

int run_and_report(const ExperimentConfig& config) {
  const ResultTable table = run_experiment(config);
  emit_report(table, config, config.output_dir);
  const std::size_t failures = table.failure_count();
  std::printf("%zu result rows (%zu failed) -> %s\n", table.rows.size(),
              failures, config.output_dir.c_str());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot Siamese metric-learning experiment harness"};
  app.require_subcommand(1);

  CommonFlags prepare_flags, train_flags, eval_flags, experiment_flags,
      scaling_flags;

  CLI::App* prepare =
      app.add_subcommand("prepare", "Validate manifests, print class counts");
  add_common(prepare, prepare_flags);

  CLI::App* train =
      app.add_subcommand("train", "Train one grid cell, emit weights");
  add_common(train, train_flags);
  std::string train_from, train_level;
  int train_majority = 0, train_fold = 0;
  train->add_option("--from", train_from, "Training dataset name");
  train->add_option("--level", train_level, "Imbalance level (H|M|L|N)");
  train->add_option("--majority", train_majority, "Majority draw size");
  train->add_option("--fold", train_fold, "Fold index");

  CLI::App* eval =
      app.add_subcommand("eval", "Score a dataset under trained weights");
  add_common(eval, eval_flags);
  std::string eval_weights, eval_dataset;
  eval->add_option("--weights", eval_weights, "Weight file (.fsnw)")
      ->required();
  eval->add_option("--dataset", eval_dataset, "Dataset name from the config");

  CLI::App* experiment =
      app.add_subcommand("experiment", "Run the full From/To grid");
  add_common(experiment, experiment_flags);

  CLI::App* scaling =
      app.add_subcommand("scaling", "Training-set-size study over majority_counts");
  add_common(scaling, scaling_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return cmd_prepare(prepare_flags);
    if (train->parsed())
      return cmd_train(train_flags, train_from, train_level, train_majority,
                       train_fold);
    if (eval->parsed()) return cmd_eval(eval_flags, eval_weights, eval_dataset);
    if (experiment->parsed())
      return run_and_report(load_config(experiment_flags));
    if (scaling->parsed()) {
      const ExperimentConfig config = load_config(scaling_flags);
      const ResultTable table = run_scaling_study(config);
      emit_report(table, config, config.output_dir);
      const std::size_t failures = table.failure_count();
      std::printf("%zu result rows (%zu failed) -> %s\n", table.rows.size(),
                  failures, config.output_dir.c_str());
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
