#pragma once

#include <string>
#include <vector>

#include "fewshot/neural_codes.hpp"

namespace fewshot {

enum class SvmKernel { kLinear, kPolynomial, kRbf };

const char* kernel_tag(SvmKernel kernel);
SvmKernel parse_kernel_tag(const std::string& tag);

// Soft-margin binary SVM solved in the dual with SMO to KKT tolerance 1e-3.
// Kernels: linear <x,z>, polynomial (<x,z>+1)^3, rbf exp(-|x-z|^2 / N).
struct SvmModel {
  SvmKernel kernel = SvmKernel::kRbf;
  double cost = 1.0;
  double gamma = 0.0;  // rbf only, 1/N
  int dim = 0;
  double bias = 0.0;
  int label_neg = 0;  // mapped to y = -1 (lower class id)
  int label_pos = 1;  // mapped to y = +1

  // Full training set with duals; alpha[i] = 0 rows are not support vectors.
  std::vector<float> points;  // rows * dim
  std::vector<int> y;         // +/-1
  std::vector<double> alpha;

  std::size_t rows() const { return y.size(); }
};

SvmModel svm_fit(const NeuralCodes& nc, SvmKernel kernel, double cost);

double svm_decision(const SvmModel& model, const std::vector<float>& query);
int svm_predict(const SvmModel& model, const std::vector<float>& query);

}  // namespace fewshot
