#include "fewshot/classifier.hpp"

#include "fewshot/common.hpp"

namespace fewshot {

const char* classifier_tag(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kHistogram: return "histogram";
    case ClassifierKind::kKnn: return "knn";
    case ClassifierKind::kSvm: return "svm";
    case ClassifierKind::kRf: return "rf";
  }
  return "histogram";
}

ClassifierKind parse_classifier_tag(const std::string& tag) {
  if (tag == "histogram" || tag == "nearest") return ClassifierKind::kHistogram;
  if (tag == "knn") return ClassifierKind::kKnn;
  if (tag == "svm") return ClassifierKind::kSvm;
  if (tag == "rf") return ClassifierKind::kRf;
  throw ConfigError("unknown classifier '" + tag +
                    "', expected histogram|knn|svm|rf");
}

std::string ClassifierSpec::describe() const {
  switch (kind) {
    case ClassifierKind::kHistogram: return "histogram";
    case ClassifierKind::kKnn: return "knn(k=" + std::to_string(k) + ")";
    case ClassifierKind::kSvm:
      return std::string("svm(") + kernel_tag(svm_kernel) +
             ",c=" + std::to_string(static_cast<int>(svm_cost)) + ")";
    case ClassifierKind::kRf: return "rf(t=" + std::to_string(rf_trees) + ")";
  }
  return "histogram";
}

void validate(const ClassifierSpec& spec) {
  if (spec.k < 1 || spec.k > 15)
    throw ConfigError("knn k must lie in [1, 15], got " + std::to_string(spec.k));
  if (spec.svm_cost < 1.0 || spec.svm_cost > 9.0)
    throw ConfigError("svm cost must lie in [1, 9]");
  if (spec.rf_trees < 10 || spec.rf_trees > 500)
    throw ConfigError("rf trees must lie in [10, 500]");
}

int FittedClassifier::predict(const std::vector<float>& query) const {
  switch (spec.kind) {
    case ClassifierKind::kHistogram: return histogram_predict(codes, query);
    case ClassifierKind::kKnn: return knn_predict(codes, query, spec.k);
    case ClassifierKind::kSvm: return svm_predict(*svm, query);
    case ClassifierKind::kRf: return forest->predict(query);
  }
  return histogram_predict(codes, query);
}

FittedClassifier fit_classifier(const NeuralCodes& nc,
                                const ClassifierSpec& spec) {
  validate(spec);
  FittedClassifier fitted;
  fitted.spec = spec;
  switch (spec.kind) {
    case ClassifierKind::kHistogram:
      fitted.codes = nc;
      break;
    case ClassifierKind::kKnn: {
      fitted.codes = nc;
      // Small training draws bound the usable k.
      if (static_cast<std::size_t>(fitted.spec.k) > nc.rows())
        fitted.spec.k = static_cast<int>(nc.rows());
      break;
    }
    case ClassifierKind::kSvm:
      fitted.svm = std::make_shared<SvmModel>(
          svm_fit(nc, spec.svm_kernel, spec.svm_cost));
      break;
    case ClassifierKind::kRf:
      fitted.forest = std::make_shared<RandomForest>(
          RandomForest::fit(nc, spec.rf_trees, spec.seed));
      break;
  }
  return fitted;
}

std::vector<ClassifierSpec> classifier_grid(const ClassifierSpec& base) {
  std::vector<ClassifierSpec> grid;
  switch (base.kind) {
    case ClassifierKind::kHistogram:
      grid.push_back(base);
      break;
    case ClassifierKind::kKnn:
      for (int k = 1; k <= 15; ++k) {
        ClassifierSpec s = base;
        s.k = k;
        grid.push_back(s);
      }
      break;
    case ClassifierKind::kSvm:
      for (SvmKernel kernel :
           {SvmKernel::kLinear, SvmKernel::kPolynomial, SvmKernel::kRbf})
        for (int cost = 1; cost <= 9; ++cost) {
          ClassifierSpec s = base;
          s.svm_kernel = kernel;
          s.svm_cost = cost;
          grid.push_back(s);
        }
      break;
    case ClassifierKind::kRf:
      for (int trees : {10, 50, 100, 200, 500}) {
        ClassifierSpec s = base;
        s.rf_trees = trees;
        grid.push_back(s);
      }
      break;
  }
  return grid;
}

}  // namespace fewshot
