#pragma once

#include <cstdint>
#include <vector>

#include "fewshot/augment.hpp"
#include "fewshot/backbone.hpp"
#include "fewshot/loss.hpp"
#include "fewshot/pairing.hpp"

namespace fewshot {

enum class LossKind { kPlain, kWeighted };

const char* loss_tag(LossKind kind);
LossKind parse_loss_tag(const std::string& tag);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-2;
  double momentum = 0.9;  // Nesterov
  double decay = 1e-6;    // inverse-time, per update step
  double margin = 1.0;
  LossKind loss = LossKind::kPlain;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

// One training pair as flattened rasters plus its loss weight
// ((lambda_a + lambda_b)/2 under the weighted loss, 1 otherwise).
template <typename T>
struct PairExample {
  std::vector<T> image_a;
  std::vector<T> image_b;
  int y = 0;
  double weight = 1.0;
};

// Exact reverse-mode gradient of the mean batch loss with respect to every
// parameter; both branches of the shared-weight pair contribute. Returns the
// mean loss. `grads` is zeroed first.
template <typename T>
double batch_loss_gradient(const Network<T>& net, const ParametersT<T>& params,
                           const std::vector<PairExample<T>>& batch,
                           double margin, ParametersT<T>& grads) {
  for (auto& t : grads.tensors) t.fill(T(0));
  if (batch.empty()) return 0.0;

  typename Network<T>::Trace trace_a, trace_b;
  std::vector<T> d_ea, d_eb;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const PairExample<T>& ex : batch) {
    const std::vector<T> e_a = net.forward(params, ex.image_a.data(), trace_a);
    const std::vector<T> e_b = net.forward(params, ex.image_b.data(), trace_b);
    total += pair_loss_backward(e_a, e_b, ex.y, margin, ex.weight, d_ea, d_eb);
    for (auto& g : d_ea) g = static_cast<T>(g * inv_n);
    for (auto& g : d_eb) g = static_cast<T>(g * inv_n);
    net.backward(params, trace_a, d_ea, grads);
    net.backward(params, trace_b, d_eb, grads);
  }
  return total * inv_n;
}

template <typename T>
struct SgdState {
  std::vector<Tensor<T>> velocity;
  long long step = 0;

  static SgdState zeros_like(const ParametersT<T>& params) {
    SgdState state;
    for (const auto& t : params.tensors)
      state.velocity.emplace_back(t.shape);
    return state;
  }
};

// Nesterov momentum step with inverse-time decay lr_t = lr0 / (1 + decay*t):
//   v <- mu*v - lr*g,   p <- p + mu*v - lr*g
// momentum = 0 reduces to vanilla SGD.
template <typename T>
void sgd_step(ParametersT<T>& params, const ParametersT<T>& grads,
              const TrainConfig& config, SgdState<T>& state) {
  const double lr = config.learning_rate /
                    (1.0 + config.decay * static_cast<double>(state.step));
  const double mu = config.momentum;
  for (std::size_t ti = 0; ti < params.tensors.size(); ++ti) {
    T* p = params.tensors[ti].data.data();
    const T* g = grads.tensors[ti].data.data();
    T* v = state.velocity[ti].data.data();
    const std::size_t n = params.tensors[ti].numel();
    for (std::size_t i = 0; i < n; ++i) {
      const double vel = mu * v[i] - lr * g[i];
      v[i] = static_cast<T>(vel);
      p[i] = static_cast<T>(p[i] + mu * vel - lr * g[i]);
    }
  }
  ++state.step;
}

struct TrainResult {
  Parameters params;
  std::vector<double> history;  // per-epoch mean loss
};

// Siamese training on pair streams drawn from the (optionally oversampled)
// dataset view. Deterministic under config.seed.
TrainResult train_siamese(const Dataset& dataset, const PairingConfig& pairing,
                          const AugmentConfig& augment,
                          const TrainConfig& config, const Parameters& init);

// Linear softmax head over the embedding, used for classification
// pre-training and the single-backbone baseline.
struct ClassifierHead {
  std::vector<int> classes;  // sorted class ids, logit order
  Tensor<float> weight;      // [embedding_dim, |classes|]
  std::vector<float> bias;
};

struct ClassifierTrainOptions {
  AugmentConfig augment;
  bool balanced_sampling = false;
};

struct ClassifierTrainResult {
  Parameters backbone;
  ClassifierHead head;
  std::vector<double> history;    // per-epoch mean cross-entropy
  double train_accuracy = 0.0;    // final pass over the training view
};

ClassifierTrainResult train_classifier(const Dataset& dataset,
                                       const BackboneConfig& backbone,
                                       const TrainConfig& config,
                                       const ClassifierTrainOptions& options = {},
                                       const Parameters* init = nullptr);

// Cross-entropy pre-training of the backbone; the temporary head is
// discarded and the returned parameters are tagged as pretrained.
Parameters pretrain_classifier(const Dataset& dataset,
                               const BackboneConfig& backbone,
                               const TrainConfig& config);

int predict_class(const Parameters& params, const ClassifierHead& head,
                  const Image& image);

}  // namespace fewshot
