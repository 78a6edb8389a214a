#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fewshot/augment.hpp"
#include "fewshot/classifier.hpp"
#include "fewshot/dataset.hpp"
#include "fewshot/pairing.hpp"
#include "fewshot/trainer.hpp"

namespace fewshot {

enum class RunMode { kSiamese, kSingleCnn };

const char* mode_tag(RunMode mode);
RunMode parse_mode_tag(const std::string& tag);

enum class InitKind { kScratch, kImported, kPretrain };

struct TechniqueConfig {
  InitKind init = InitKind::kScratch;
  std::string init_path;        // imported weight file
  std::string pretrain_source;  // dataset name for transfer pre-training
  AugmentConfig augment;        // alpha = 0 disables augmentation
  PairingConfig pairing;
  LossKind loss = LossKind::kPlain;
  ClassifierSpec classifier;
};

struct ExperimentConfig {
  std::map<std::string, std::string> datasets;  // name -> manifest path
  std::vector<std::pair<std::string, std::string>> grid;  // (from, to)
  std::vector<ImbalanceLevel> levels;
  std::vector<int> majority_counts{100};
  TechniqueConfig techniques;
  int folds = 10;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::kSiamese;
  std::string output_dir = "out";
  ImageShape image{32, 32, 1};
  BackboneConfig backbone;  // defaults to default_backbone(image)
  TrainConfig train;
  int pretrain_count = 1700;
  int threads = 1;
};

// Strict JSON config parsing: defaults filled, unknown keys rejected with
// their key paths. Dataset manifest paths resolve relative to base_dir.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& json_text,
                                   const std::string& base_dir);

// Full round-trippable echo of a resolved config.
std::string resolved_config_json(const ExperimentConfig& config);

// Compact technique descriptor used to group result rows.
std::string technique_signature(const ExperimentConfig& config);

struct ResultRow {
  std::string from;
  std::string to;
  ImbalanceLevel level = ImbalanceLevel::kNone;
  int majority = 100;
  int minority = 100;
  int fold = 0;
  std::string technique;
  std::string classifier;  // chosen spec, e.g. "knn(k=3)"
  bool ok = false;
  std::string error;
  double macro_f1 = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::map<std::string, std::string> fold_plans;  // key -> FoldPlan JSON

  std::size_t failure_count() const;
  std::string to_csv() const;  // results_raw.csv content
};

// Per-(from,to,level,majority) aggregate plus inter/intra/global averages.
std::string summarize_csv(const ResultTable& table);

// Runs the configured grid: per (from, level, majority, fold) one training
// draw and one trained model, reused across every evaluation target.
ResultTable run_experiment(const ExperimentConfig& config);

// The training-set-size study: identical grid loop; majority_counts is
// expected to carry the scaled sizes (e.g. 100/200/300).
ResultTable run_scaling_study(const ExperimentConfig& config);

// Single-backbone softmax baseline on the same draws.
ResultTable run_single_cnn(const ExperimentConfig& config);

// Writes results_raw.csv, results_summary.csv, run_manifest.json (config
// echo + code version; feeding it back to `experiment` replays the run), and
// the fold-plan JSON documents.
void emit_report(const ResultTable& table, const ExperimentConfig& config,
                 const std::string& output_dir);

// Deterministic per-cell stream seed; every stage of a grid cell derives its
// randomness from these so cells can run in any order.
std::uint64_t cell_seed(std::uint64_t seed, const std::string& from,
                        ImbalanceLevel level, int majority, int fold,
                        const char* tag);

// One grid cell's training draw and trained weights (the `train` subcommand).
struct CellTrainResult {
  Parameters params;
  std::vector<double> history;
  FoldPlan plan;
  Dataset draw;
};
CellTrainResult train_cell(const ExperimentConfig& config,
                           const std::string& from, ImbalanceLevel level,
                           int majority, int fold);

// Fits the configured classifier on a dataset's training-split codes and
// scores its test split under the given weights (the `eval` subcommand).
struct EvalResult {
  double macro_f1 = 0.0;
  std::map<int, double> per_class_f1;
  std::string classifier;
  std::size_t test_count = 0;
};
EvalResult evaluate_dataset(const ExperimentConfig& config,
                            const Parameters& params,
                            const std::string& dataset_name);

}  // namespace fewshot
