#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "fewshot/common.hpp"
#include "fewshot/experiment.hpp"
#include "fewshot/manifest.hpp"
#include "fewshot/metrics.hpp"
#include "fewshot/weights_io.hpp"

namespace fewshot {

std::uint64_t cell_seed(std::uint64_t seed, const std::string& from,
                        ImbalanceLevel level, int majority, int fold,
                        const char* tag) {
  std::uint64_t s = seed;
  s = Rng::splitmix64(s ^ Rng::fnv1a(from));
  s = Rng::splitmix64(s ^ static_cast<std::uint64_t>(level_letter(level)));
  s = Rng::splitmix64(s ^ static_cast<std::uint64_t>(majority));
  s = Rng::splitmix64(s ^ static_cast<std::uint64_t>(fold + 1));
  s = Rng::splitmix64(s ^ Rng::fnv1a(tag));
  return s;
}

namespace {

std::string plan_key(const std::string& from, ImbalanceLevel level,
                     int majority) {
  return from + "_" + level_letter(level) + "_" + std::to_string(majority);
}

std::string sanitize_csv(const std::string& text) {
  std::string out = text;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

// Stratified 80/20 split of row indices; every class keeps at least one
// fitting row.
struct ValidationSplit {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> val;
};

ValidationSplit split_for_validation(const std::vector<int>& labels, Rng rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);
  ValidationSplit split;
  for (auto& [label, rows] : by_class) {
    rng.shuffle(rows);
    const std::size_t keep = std::max<std::size_t>(1, rows.size() * 4 / 5);
    for (std::size_t i = 0; i < rows.size(); ++i)
      (i < keep ? split.fit : split.val).push_back(rows[i]);
  }
  std::sort(split.fit.begin(), split.fit.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

NeuralCodes select_rows(const NeuralCodes& nc,
                        const std::vector<std::size_t>& rows) {
  NeuralCodes out;
  out.dim = nc.dim;
  out.source_params_version = nc.source_params_version;
  for (std::size_t r : rows) {
    out.data.insert(out.data.end(), nc.row(r), nc.row(r) + nc.dim);
    out.labels.push_back(nc.labels[r]);
  }
  return out;
}

// Grid search over the configured classifier kind on an 80/20 split of the
// training draw; ties keep the earliest candidate.
FittedClassifier select_and_fit(const NeuralCodes& train_nc,
                                const std::set<int>& classes,
                                const ClassifierSpec& base, Rng val_rng) {
  std::vector<ClassifierSpec> candidates = classifier_grid(base);
  if (candidates.size() > 1) {
    const ValidationSplit split =
        split_for_validation(train_nc.labels, val_rng);
    if (!split.val.empty()) {
      const NeuralCodes fit_nc = select_rows(train_nc, split.fit);
      const NeuralCodes val_nc = select_rows(train_nc, split.val);
      double best_score = -1.0;
      std::size_t best = candidates.size();
      for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        try {
          const FittedClassifier fitted =
              fit_classifier(fit_nc, candidates[ci]);
          std::vector<int> predictions;
          predictions.reserve(val_nc.rows());
          for (std::size_t r = 0; r < val_nc.rows(); ++r)
            predictions.push_back(fitted.predict(std::vector<float>(
                val_nc.row(r), val_nc.row(r) + val_nc.dim)));
          const double score =
              macro_f1(confusion(predictions, val_nc.labels, classes));
          if (score > best_score) {
            best_score = score;
            best = ci;
          }
        } catch (const std::exception&) {
          // candidate unusable on this split (e.g. single-class fit part)
        }
      }
      if (best < candidates.size())
        return fit_classifier(train_nc, candidates[best]);
    }
  }
  return fit_classifier(train_nc, candidates.front());
}

struct WorkItem {
  int majority = 100;
  std::string from;
  ImbalanceLevel level = ImbalanceLevel::kNone;
  int fold = 0;
  std::vector<std::pair<std::string, std::size_t>> targets;  // (to, row index)
};

struct RunContext {
  const ExperimentConfig& config;
  std::map<std::string, Dataset> train_splits;
  std::map<std::string, Dataset> test_splits;
  std::map<std::string, std::set<std::string>> test_ids;
  std::map<std::string, FoldPlan> plans;           // by plan_key
  std::map<std::string, std::string> plan_errors;  // by plan_key
  std::optional<Parameters> imported;
  std::map<std::string, Parameters> pretrained;  // by source name
};

// Loads datasets, imported weights, and transfer pre-training once; the
// context is immutable while cells run.
RunContext build_context(const ExperimentConfig& config,
                         const std::set<std::string>& names) {
  RunContext ctx{config};
  std::set<std::string> needed = names;
  if (config.techniques.init == InitKind::kPretrain)
    needed.insert(config.techniques.pretrain_source);

  for (const std::string& name : needed) {
    LoadOptions options;
    options.target_height = config.image.height;
    options.target_width = config.image.width;
    options.channels = config.image.channels;
    options.name = name;
    const Dataset loaded = load_manifest(config.datasets.at(name), options);
    ctx.train_splits[name] = split_subset(loaded, Split::kTrain);
    ctx.test_splits[name] = split_subset(loaded, Split::kTest);
    for (const Sample& s : ctx.test_splits[name].samples)
      ctx.test_ids[name].insert(s.id);
  }

  if (config.techniques.init == InitKind::kImported)
    ctx.imported = init_parameters(
        config.backbone, InitStrategy::imported(config.techniques.init_path),
        config.seed);

  if (config.techniques.init == InitKind::kPretrain) {
    const std::string& source = config.techniques.pretrain_source;
    const Dataset& pool = ctx.train_splits.at(source);
    if (pool.empty())
      throw DataError("pretrain source '" + source + "' has no training split");
    Dataset subset;
    subset.name = pool.name;
    subset.classes = pool.classes;
    subset.image_shape = pool.image_shape;
    if (static_cast<int>(pool.samples.size()) <= config.pretrain_count) {
      subset = pool;
    } else {
      Rng rng(Rng::splitmix64(config.seed ^ Rng::fnv1a("pretrain_" + source)));
      for (std::size_t i : rng.sample_without_replacement(
               pool.samples.size(),
               static_cast<std::size_t>(config.pretrain_count)))
        subset.samples.push_back(pool.samples[i]);
    }
    TrainConfig pretrain_config = config.train;
    pretrain_config.seed =
        Rng::splitmix64(config.seed ^ Rng::fnv1a("pretrain_seed_" + source));
    ctx.pretrained[source] =
        pretrain_classifier(subset, config.backbone, pretrain_config);
  }
  return ctx;
}

Parameters resolve_init(const RunContext& ctx, const std::string& from,
                        ImbalanceLevel level, int majority, int fold) {
  const ExperimentConfig& config = ctx.config;
  switch (config.techniques.init) {
    case InitKind::kImported:
      return *ctx.imported;
    case InitKind::kPretrain:
      return ctx.pretrained.at(config.techniques.pretrain_source);
    case InitKind::kScratch:
      break;
  }
  return init_parameters(
      config.backbone, InitStrategy::scratch(),
      cell_seed(config.seed, from, level, majority, fold, "init"));
}

void audit_draw_purity(const RunContext& ctx, const Dataset& draw,
                       const std::string& to) {
  const auto& ids = ctx.test_ids.at(to);
  for (const Sample& s : draw.samples)
    if (ids.count(s.id))
      throw DataError("training draw leaks test sample '" + s.id + "' of '" +
                      to + "'");
}

void run_item(const RunContext& ctx, const WorkItem& item,
              std::vector<ResultRow>& rows) {
  const ExperimentConfig& config = ctx.config;
  const std::string technique = technique_signature(config);
  const ImbalanceSpec spec = make_imbalance_spec(item.level, item.majority);

  auto fail_all = [&](const std::string& message) {
    for (const auto& [to, row_id] : item.targets) {
      rows[row_id].ok = false;
      rows[row_id].error = message;
    }
  };
  for (const auto& [to, row_id] : item.targets) {
    ResultRow& row = rows[row_id];
    row.from = item.from;
    row.to = to;
    row.level = item.level;
    row.majority = spec.majority_count;
    row.minority = spec.minority_count;
    row.fold = item.fold;
    row.technique = technique;
  }

  const std::string key = plan_key(item.from, item.level, item.majority);
  if (ctx.plan_errors.count(key)) {
    fail_all(ctx.plan_errors.at(key));
    return;
  }

  try {
    const Dataset& pool = ctx.train_splits.at(item.from);
    const Dataset draw = materialize_fold(pool, ctx.plans.at(key), item.fold);

    TrainConfig train_config = config.train;
    train_config.loss = config.techniques.loss;
    train_config.seed = cell_seed(config.seed, item.from, item.level,
                                  item.majority, item.fold, "train");

    if (config.mode == RunMode::kSingleCnn) {
      const Parameters* init = nullptr;
      Parameters init_storage;
      if (config.techniques.init != InitKind::kScratch) {
        init_storage = resolve_init(ctx, item.from, item.level, item.majority,
                                    item.fold);
        init = &init_storage;
      }
      ClassifierTrainOptions options;
      options.augment = config.techniques.augment;
      options.balanced_sampling = config.techniques.pairing.balanced_sampling;
      const ClassifierTrainResult trained = train_classifier(
          draw, config.backbone, train_config, options, init);
      for (const auto& [to, row_id] : item.targets) {
        ResultRow& row = rows[row_id];
        try {
          audit_draw_purity(ctx, draw, to);
          const Dataset& test = ctx.test_splits.at(to);
          std::vector<int> predictions, truth;
          predictions.reserve(test.samples.size());
          for (const Sample& s : test.samples) {
            predictions.push_back(
                predict_class(trained.backbone, trained.head, s.image));
            truth.push_back(s.label);
          }
          row.macro_f1 = macro_f1(confusion(predictions, truth, test.classes));
          row.classifier = "softmax";
          row.ok = true;
        } catch (const std::exception& e) {
          row.ok = false;
          row.error = e.what();
        }
      }
      return;
    }

    const Parameters init =
        resolve_init(ctx, item.from, item.level, item.majority, item.fold);
    const TrainResult trained =
        train_siamese(draw, config.techniques.pairing,
                      config.techniques.augment, train_config, init);

    const NeuralCodes train_nc = embed_dataset(trained.params, draw);
    ClassifierSpec base = config.techniques.classifier;
    base.seed = cell_seed(config.seed, item.from, item.level, item.majority,
                          item.fold, "classifier");
    const FittedClassifier classifier = select_and_fit(
        train_nc, draw.classes, base,
        Rng(cell_seed(config.seed, item.from, item.level, item.majority,
                      item.fold, "val")));

    for (const auto& [to, row_id] : item.targets) {
      ResultRow& row = rows[row_id];
      try {
        audit_draw_purity(ctx, draw, to);
        const Dataset& test = ctx.test_splits.at(to);
        const NeuralCodes test_nc = embed_dataset(trained.params, test);
        std::vector<int> predictions;
        predictions.reserve(test_nc.rows());
        for (std::size_t r = 0; r < test_nc.rows(); ++r)
          predictions.push_back(classifier.predict(
              std::vector<float>(test_nc.row(r), test_nc.row(r) + test_nc.dim)));
        row.macro_f1 =
            macro_f1(confusion(predictions, test_nc.labels, test.classes));
        row.classifier = classifier.spec.describe();
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  } catch (const std::exception& e) {
    fail_all(e.what());
  }
}

}  // namespace

std::size_t ResultTable::failure_count() const {
  std::size_t n = 0;
  for (const ResultRow& row : rows)
    if (!row.ok) ++n;
  return n;
}

std::string ResultTable::to_csv() const {
  std::string out =
      "from,to,level,majority,minority,fold,technique,classifier,status,"
      "macro_f1\n";
  for (const ResultRow& row : rows) {
    out += row.from + ',' + row.to + ',' + level_letter(row.level) + ',' +
           std::to_string(row.majority) + ',' + std::to_string(row.minority) +
           ',' + std::to_string(row.fold) + ',' + row.technique + ',' +
           row.classifier + ',';
    if (row.ok)
      out += "ok," + format_fixed(row.macro_f1, 4);
    else
      out += "error: " + sanitize_csv(row.error) + ",";
    out += '\n';
  }
  return out;
}

ResultTable run_experiment(const ExperimentConfig& config) {
  std::set<std::string> names;
  for (const auto& [from, to] : config.grid) {
    names.insert(from);
    names.insert(to);
  }
  RunContext ctx = build_context(config, names);

  std::set<std::string> froms_seen;
  std::vector<std::string> froms;
  for (const auto& [from, to] : config.grid)
    if (froms_seen.insert(from).second) froms.push_back(from);

  ResultTable table;
  for (int majority : config.majority_counts)
    for (const std::string& from : froms)
      for (ImbalanceLevel level : config.levels) {
        const std::string key = plan_key(from, level, majority);
        try {
          const ImbalanceSpec spec = make_imbalance_spec(level, majority);
          ctx.plans[key] = make_folds(
              ctx.train_splits.at(from), spec, config.folds,
              cell_seed(config.seed, from, level, majority, 0, "folds"));
          table.fold_plans[key] = ctx.plans[key].to_json();
        } catch (const std::exception& e) {
          ctx.plan_errors[key] = e.what();
        }
      }

  // Row layout: majority, then grid order, then level, then fold.
  table.rows.resize(config.majority_counts.size() * config.grid.size() *
                    config.levels.size() *
                    static_cast<std::size_t>(config.folds));

  std::vector<WorkItem> items;
  for (std::size_t mi = 0; mi < config.majority_counts.size(); ++mi)
    for (const std::string& from : froms)
      for (std::size_t li = 0; li < config.levels.size(); ++li)
        for (int fold = 0; fold < config.folds; ++fold) {
          WorkItem item;
          item.majority = config.majority_counts[mi];
          item.from = from;
          item.level = config.levels[li];
          item.fold = fold;
          for (std::size_t gi = 0; gi < config.grid.size(); ++gi) {
            if (config.grid[gi].first != from) continue;
            const std::size_t row_id =
                ((mi * config.grid.size() + gi) * config.levels.size() + li) *
                    config.folds +
                static_cast<std::size_t>(fold);
            item.targets.emplace_back(config.grid[gi].second, row_id);
          }
          if (!item.targets.empty()) items.push_back(std::move(item));
        }

  const int threads =
      std::min<int>(config.threads, static_cast<int>(items.size()));
  if (threads <= 1) {
    for (const WorkItem& item : items) run_item(ctx, item, table.rows);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= items.size()) return;
          run_item(ctx, items[i], table.rows);
        }
      });
    for (std::thread& t : pool) t.join();
  }
  return table;
}

ResultTable run_scaling_study(const ExperimentConfig& config) {
  return run_experiment(config);
}

ResultTable run_single_cnn(const ExperimentConfig& config) {
  ExperimentConfig forced = config;
  forced.mode = RunMode::kSingleCnn;
  return run_experiment(forced);
}

CellTrainResult train_cell(const ExperimentConfig& config,
                           const std::string& from, ImbalanceLevel level,
                           int majority, int fold) {
  if (!config.datasets.count(from))
    throw ConfigError("unknown dataset '" + from + "'");
  if (fold < 0 || fold >= config.folds)
    throw ConfigError("fold " + std::to_string(fold) + " outside [0, " +
                      std::to_string(config.folds) + ")");
  const RunContext ctx = build_context(config, {from});
  const ImbalanceSpec spec = make_imbalance_spec(level, majority);

  CellTrainResult result;
  result.plan =
      make_folds(ctx.train_splits.at(from), spec, config.folds,
                 cell_seed(config.seed, from, level, majority, 0, "folds"));
  result.draw = materialize_fold(ctx.train_splits.at(from), result.plan, fold);

  TrainConfig train_config = config.train;
  train_config.loss = config.techniques.loss;
  train_config.seed =
      cell_seed(config.seed, from, level, majority, fold, "train");

  const Parameters init = resolve_init(ctx, from, level, majority, fold);
  if (config.mode == RunMode::kSingleCnn) {
    ClassifierTrainOptions options;
    options.augment = config.techniques.augment;
    options.balanced_sampling = config.techniques.pairing.balanced_sampling;
    const ClassifierTrainResult trained = train_classifier(
        result.draw, config.backbone, train_config, options,
        config.techniques.init == InitKind::kScratch ? nullptr : &init);
    result.params = trained.backbone;
    result.history = trained.history;
  } else {
    const TrainResult trained =
        train_siamese(result.draw, config.techniques.pairing,
                      config.techniques.augment, train_config, init);
    result.params = trained.params;
    result.history = trained.history;
  }
  return result;
}

EvalResult evaluate_dataset(const ExperimentConfig& config,
                            const Parameters& params,
                            const std::string& dataset_name) {
  if (!config.datasets.count(dataset_name))
    throw ConfigError("unknown dataset '" + dataset_name + "'");
  const RunContext ctx = build_context(config, {dataset_name});
  const Dataset& train = ctx.train_splits.at(dataset_name);
  const Dataset& test = ctx.test_splits.at(dataset_name);
  if (train.empty()) throw DataError("dataset has no training split");
  if (test.empty()) throw DataError("dataset has no test split");

  const NeuralCodes train_nc = embed_dataset(params, train);
  ClassifierSpec base = config.techniques.classifier;
  base.seed = Rng::splitmix64(config.seed ^ Rng::fnv1a("eval_classifier"));
  const FittedClassifier classifier =
      select_and_fit(train_nc, train.classes, base,
                     Rng(Rng::splitmix64(config.seed ^ Rng::fnv1a("eval_val"))));

  const NeuralCodes test_nc = embed_dataset(params, test);
  std::vector<int> predictions;
  predictions.reserve(test_nc.rows());
  for (std::size_t r = 0; r < test_nc.rows(); ++r)
    predictions.push_back(classifier.predict(
        std::vector<float>(test_nc.row(r), test_nc.row(r) + test_nc.dim)));

  const ConfusionCounts counts =
      confusion(predictions, test_nc.labels, test.classes);
  EvalResult result;
  result.macro_f1 = macro_f1(counts);
  for (const auto& [label, cc] : counts.per_class)
    result.per_class_f1[label] = f1(cc);
  result.classifier = classifier.spec.describe();
  result.test_count = test.samples.size();
  return result;
}

std::string summarize_csv(const ResultTable& table) {
  struct Key {
    std::string from, to, technique;
    char level;
    int majority;
    bool operator<(const Key& o) const {
      return std::tie(technique, majority, level, from, to) <
             std::tie(o.technique, o.majority, o.level, o.from, o.to);
    }
  };
  struct Agg {
    std::vector<double> scores;
    std::size_t failures = 0;
  };
  std::map<Key, Agg> cells;
  for (const ResultRow& row : table.rows) {
    Agg& agg = cells[{row.from, row.to, row.technique,
                      level_letter(row.level), row.majority}];
    if (row.ok)
      agg.scores.push_back(row.macro_f1);
    else
      ++agg.failures;
  }

  std::string out =
      "scope,from,to,level,majority,technique,mean_macro_f1,std_macro_f1,"
      "folds_ok,folds_failed\n";
  auto emit = [&](const std::string& scope, const std::string& from,
                  const std::string& to, char level, int majority,
                  const std::string& technique, const Agg& agg) {
    out += scope + ',' + from + ',' + to + ',' + level + ',' +
           std::to_string(majority) + ',' + technique + ',';
    if (!agg.scores.empty()) {
      const FoldResults res = aggregate(agg.scores);
      out += format_fixed(res.mean, 4) + ',' + format_fixed(res.std_dev, 4);
    } else {
      out += ",";
    }
    out += ',' + std::to_string(agg.scores.size()) + ',' +
           std::to_string(agg.failures) + '\n';
  };

  for (const auto& [key, agg] : cells)
    emit("cell", key.from, key.to, key.level, key.majority, key.technique,
         agg);

  // Inter-/intra-domain and global averages of cell means, grouped per
  // (technique, majority, level) as in the result tables' bottom block.
  struct GroupKey {
    std::string technique;
    int majority;
    char level;
    bool operator<(const GroupKey& o) const {
      return std::tie(technique, majority, level) <
             std::tie(o.technique, o.majority, o.level);
    }
  };
  std::map<GroupKey, std::array<Agg, 3>> groups;  // inter, intra, global
  for (const auto& [key, agg] : cells) {
    if (agg.scores.empty()) continue;
    const double mean = aggregate(agg.scores).mean;
    auto& bucket = groups[{key.technique, key.majority, key.level}];
    bucket[key.from == key.to ? 1 : 0].scores.push_back(mean);
    bucket[2].scores.push_back(mean);
  }
  for (const auto& [key, bucket] : groups) {
    const char* names[3] = {"inter_avg", "intra_avg", "global_avg"};
    for (int s = 0; s < 3; ++s)
      if (!bucket[s].scores.empty())
        emit(names[s], "", "", key.level, key.majority, key.technique,
             bucket[s]);
  }
  return out;
}

void emit_report(const ResultTable& table, const ExperimentConfig& config,
                 const std::string& output_dir) {
  if (table.rows.empty()) throw DataError("emit_report: empty result table");
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);

  auto write_file = [](const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
  };

  write_file(fs::path(output_dir) / "results_raw.csv", table.to_csv());
  write_file(fs::path(output_dir) / "results_summary.csv",
             summarize_csv(table));

  if (!table.fold_plans.empty()) {
    fs::create_directories(fs::path(output_dir) / "fold_plans");
    for (const auto& [key, json_text] : table.fold_plans)
      write_file(fs::path(output_dir) / "fold_plans" / (key + ".json"),
                 json_text);
  }

  nlohmann::json manifest;
  manifest["code_version"] = kVersion;
  manifest["config"] = nlohmann::json::parse(resolved_config_json(config));
  write_file(fs::path(output_dir) / "run_manifest.json", manifest.dump(2));
}

}  // namespace fewshot
