#include "fewshot/svm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fewshot/common.hpp"

namespace fewshot {

namespace {

constexpr double kKktTolerance = 1e-3;
constexpr double kAlphaEpsilon = 1e-8;

double kernel_value(SvmKernel kernel, double gamma, const float* a,
                    const float* b, int dim) {
  switch (kernel) {
    case SvmKernel::kLinear: {
      double dot = 0.0;
      for (int i = 0; i < dim; ++i) dot += static_cast<double>(a[i]) * b[i];
      return dot;
    }
    case SvmKernel::kPolynomial: {
      double dot = 0.0;
      for (int i = 0; i < dim; ++i) dot += static_cast<double>(a[i]) * b[i];
      const double base = dot + 1.0;
      return base * base * base;
    }
    case SvmKernel::kRbf: {
      double d2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double diff = static_cast<double>(a[i]) - b[i];
        d2 += diff * diff;
      }
      return std::exp(-gamma * d2);
    }
  }
  return 0.0;
}

// Platt-style SMO over a precomputed kernel matrix with an error cache.
class SmoSolver {
 public:
  SmoSolver(SvmModel& model)
      : model_(model), n_(model.rows()), kmat_(n_ * n_), error_(n_) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) {
        const double k = kernel_value(
            model_.kernel, model_.gamma, model_.points.data() + i * model_.dim,
            model_.points.data() + j * model_.dim, model_.dim);
        kmat_[i * n_ + j] = k;
        kmat_[j * n_ + i] = k;
      }
    // alpha = 0, b = 0 start: f(x_i) = 0, so E_i = -y_i.
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -model_.y[i];
  }

  void solve() {
    // Platt's alternation: sweep all points, then only unbound ones until a
    // full sweep leaves every multiplier KKT-consistent within tolerance.
    // The sweep cap is a hard stop for pathological inputs.
    bool examine_all = true;
    std::size_t changed = 0;
    const std::size_t max_sweeps = 1000 + 50 * n_;
    std::size_t sweeps = 0;
    while ((changed > 0 || examine_all) && sweeps++ < max_sweeps) {
      changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (!examine_all && !is_unbound(i)) continue;
        changed += examine(i);
      }
      if (examine_all)
        examine_all = false;
      else if (changed == 0)
        examine_all = true;
    }
  }

 private:
  bool is_unbound(std::size_t i) const {
    return model_.alpha[i] > kAlphaEpsilon &&
           model_.alpha[i] < model_.cost - kAlphaEpsilon;
  }

  std::size_t examine(std::size_t i) {
    const double yi = model_.y[i];
    const double ri = error_[i] * yi;
    const bool violates = (ri < -kKktTolerance && model_.alpha[i] < model_.cost) ||
                          (ri > kKktTolerance && model_.alpha[i] > 0.0);
    if (!violates) return 0;

    // Second-choice heuristic: maximize |E_i - E_j| over unbound points.
    std::size_t best = n_;
    double best_gap = -1.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j == i || !is_unbound(j)) continue;
      const double gap = std::abs(error_[i] - error_[j]);
      if (gap > best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    if (best < n_ && take_step(i, best)) return 1;
    for (std::size_t j = 0; j < n_; ++j)
      if (j != i && is_unbound(j) && take_step(i, j)) return 1;
    for (std::size_t j = 0; j < n_; ++j)
      if (j != i && take_step(i, j)) return 1;
    return 0;
  }

  bool take_step(std::size_t i, std::size_t j) {
    const double yi = model_.y[i], yj = model_.y[j];
    const double ai_old = model_.alpha[i], aj_old = model_.alpha[j];
    const double c = model_.cost;

    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj_old - ai_old);
      hi = std::min(c, c + aj_old - ai_old);
    } else {
      lo = std::max(0.0, ai_old + aj_old - c);
      hi = std::min(c, ai_old + aj_old);
    }
    if (lo >= hi) return false;

    const double kii = kmat_[i * n_ + i];
    const double kjj = kmat_[j * n_ + j];
    const double kij = kmat_[i * n_ + j];
    const double eta = kii + kjj - 2.0 * kij;
    if (eta <= 0.0) return false;  // non-positive curvature, skip pair

    double aj = aj_old + yj * (error_[i] - error_[j]) / eta;
    aj = std::min(hi, std::max(lo, aj));
    if (std::abs(aj - aj_old) < kAlphaEpsilon * (aj + aj_old + kAlphaEpsilon))
      return false;
    const double ai = ai_old + yi * yj * (aj_old - aj);

    const double b1 = model_.bias - error_[i] - yi * (ai - ai_old) * kii -
                      yj * (aj - aj_old) * kij;
    const double b2 = model_.bias - error_[j] - yi * (ai - ai_old) * kij -
                      yj * (aj - aj_old) * kjj;
    double b_new;
    if (ai > kAlphaEpsilon && ai < c - kAlphaEpsilon)
      b_new = b1;
    else if (aj > kAlphaEpsilon && aj < c - kAlphaEpsilon)
      b_new = b2;
    else
      b_new = (b1 + b2) / 2.0;

    const double di = yi * (ai - ai_old);
    const double dj = yj * (aj - aj_old);
    const double db = b_new - model_.bias;
    for (std::size_t t = 0; t < n_; ++t)
      error_[t] += di * kmat_[i * n_ + t] + dj * kmat_[j * n_ + t] + db;

    model_.alpha[i] = ai;
    model_.alpha[j] = aj;
    model_.bias = b_new;
    return true;
  }

  SvmModel& model_;
  std::size_t n_;
  std::vector<double> kmat_;
  std::vector<double> error_;
};

}  // namespace

const char* kernel_tag(SvmKernel kernel) {
  switch (kernel) {
    case SvmKernel::kLinear: return "linear";
    case SvmKernel::kPolynomial: return "polynomial";
    case SvmKernel::kRbf: return "rbf";
  }
  return "rbf";
}

SvmKernel parse_kernel_tag(const std::string& tag) {
  if (tag == "linear") return SvmKernel::kLinear;
  if (tag == "polynomial" || tag == "poly") return SvmKernel::kPolynomial;
  if (tag == "rbf") return SvmKernel::kRbf;
  throw ConfigError("unknown SVM kernel '" + tag +
                    "', expected linear, polynomial, or rbf");
}

SvmModel svm_fit(const NeuralCodes& nc, SvmKernel kernel, double cost) {
  if (cost < 1.0 || cost > 9.0)
    throw ConfigError("svm cost must lie in [1, 9], got " +
                      std::to_string(cost));
  std::set<int> classes(nc.labels.begin(), nc.labels.end());
  if (classes.size() != 2)
    throw DataError("svm_fit: need exactly 2 classes, found " +
                    std::to_string(classes.size()));

  SvmModel model;
  model.kernel = kernel;
  model.cost = cost;
  model.dim = nc.dim;
  model.gamma = 1.0 / static_cast<double>(nc.dim);
  model.label_neg = *classes.begin();
  model.label_pos = *std::next(classes.begin());
  model.points = nc.data;
  model.y.reserve(nc.rows());
  for (int label : nc.labels)
    model.y.push_back(label == model.label_pos ? 1 : -1);
  model.alpha.assign(nc.rows(), 0.0);

  SmoSolver solver(model);
  solver.solve();
  return model;
}

double svm_decision(const SvmModel& model, const std::vector<float>& query) {
  if (static_cast<int>(query.size()) != model.dim)
    throw DataError("svm_decision: query dimension mismatch");
  double sum = model.bias;
  for (std::size_t i = 0; i < model.rows(); ++i) {
    if (model.alpha[i] == 0.0) continue;
    sum += model.alpha[i] * model.y[i] *
           kernel_value(model.kernel, model.gamma,
                        model.points.data() + i * model.dim, query.data(),
                        model.dim);
  }
  return sum;
}

int svm_predict(const SvmModel& model, const std::vector<float>& query) {
  return svm_decision(model, query) >= 0.0 ? model.label_pos : model.label_neg;
}

}  // namespace fewshot
