#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fewshot/neural_codes.hpp"
#include "fewshot/random_forest.hpp"
#include "fewshot/svm.hpp"

namespace fewshot {

enum class ClassifierKind { kHistogram, kKnn, kSvm, kRf };

const char* classifier_tag(ClassifierKind kind);
ClassifierKind parse_classifier_tag(const std::string& tag);  // "nearest" aliases histogram

// Inference-classifier choice with the paper's searched hyperparameter ranges.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kHistogram;
  int k = 1;                               // [1, 15]
  SvmKernel svm_kernel = SvmKernel::kRbf;  // linear | polynomial | rbf
  double svm_cost = 1.0;                   // [1, 9]
  int rf_trees = 100;                      // [10, 500]
  std::uint64_t seed = 0;

  std::string describe() const;
};

void validate(const ClassifierSpec& spec);

// Classifier fitted on training neural codes; prediction is pure.
struct FittedClassifier {
  ClassifierSpec spec;
  NeuralCodes codes;  // histogram / knn
  std::shared_ptr<const SvmModel> svm;
  std::shared_ptr<const RandomForest> forest;

  int predict(const std::vector<float>& query) const;
};

FittedClassifier fit_classifier(const NeuralCodes& nc,
                                const ClassifierSpec& spec);

// Candidate specs searched by the harness for one configured kind, within
// the stated ranges: k in 1..15, cost 1..9 per kernel, trees in
// {10, 50, 100, 200, 500}.
std::vector<ClassifierSpec> classifier_grid(const ClassifierSpec& base);

}  // namespace fewshot
