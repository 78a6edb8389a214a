#include "fewshot/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "fewshot/common.hpp"

namespace fewshot {

const char* loss_tag(LossKind kind) {
  return kind == LossKind::kWeighted ? "weighted" : "plain";
}

LossKind parse_loss_tag(const std::string& tag) {
  if (tag == "plain") return LossKind::kPlain;
  if (tag == "weighted") return LossKind::kWeighted;
  throw ConfigError("unknown loss '" + tag + "', expected plain or weighted");
}

void validate(const TrainConfig& config) {
  if (config.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (config.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (config.learning_rate <= 0.0)
    throw ConfigError("learning_rate must be positive");
  if (config.momentum < 0.0 || config.momentum >= 1.0)
    throw ConfigError("momentum must lie in [0, 1)");
  if (config.decay < 0.0) throw ConfigError("decay must be non-negative");
  if (config.margin <= 0.0) throw ConfigError("margin must be positive");
}

namespace {

bool grads_finite(const Parameters& grads) {
  for (const auto& t : grads.tensors)
    if (!detail::all_finite(t.data.data(), t.numel())) return false;
  return true;
}

std::vector<float> flat_pixels(const Image& image) {
  return image.pixels;
}

}  // namespace

TrainResult train_siamese(const Dataset& dataset, const PairingConfig& pairing,
                          const AugmentConfig& augment,
                          const TrainConfig& config, const Parameters& init) {
  validate(pairing);
  validate(augment);
  validate(config);
  if (dataset.samples.size() < 2)
    throw DataError("train_siamese: need at least 2 samples");
  if (dataset.image_shape != init.config.input_shape)
    throw ConfigError("dataset image shape does not match backbone input");

  TrainResult result;
  result.params = init;
  if (config.epochs == 0) return result;

  Network<float> net(init.config);
  Rng root(config.seed);
  Rng balance_rng = root.derive("balance");
  Rng loop_rng = root.derive("loop");

  const DatasetView view = pairing.balanced_sampling
                               ? balance_by_oversampling(dataset, balance_rng)
                               : identity_view(dataset);

  // Loss weights always come from the pre-oversampling class counts, so
  // combining balancing with the weighted loss does not double-correct.
  ClassWeights weights;
  if (config.loss == LossKind::kWeighted) weights = class_weights(dataset);

  Parameters grads = make_gradients<float>(init.config);
  SgdState<float> state = SgdState<float>::zeros_like(result.params);
  const bool augmenting = augment.alpha > 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<Pair> pairs = sample_pairs(view, pairing, loop_rng);
    double epoch_loss = 0.0;
    std::size_t done = 0;
    while (done < pairs.size()) {
      const std::size_t batch_n = std::min(
          static_cast<std::size_t>(config.batch_size), pairs.size() - done);
      std::vector<PairExample<float>> batch;
      batch.reserve(batch_n);
      for (std::size_t i = 0; i < batch_n; ++i) {
        const Pair& pair = pairs[done + i];
        const Sample& sa = view.sample(pair.a);
        const Sample& sb = view.sample(pair.b);
        PairExample<float> ex;
        ex.image_a = augmenting
                         ? random_augment(sa.image, augment, loop_rng).pixels
                         : flat_pixels(sa.image);
        ex.image_b = augmenting
                         ? random_augment(sb.image, augment, loop_rng).pixels
                         : flat_pixels(sb.image);
        ex.y = pair.y;
        ex.weight = config.loss == LossKind::kWeighted
                        ? weights.pair_weight(sa.label, sb.label)
                        : 1.0;
        batch.push_back(std::move(ex));
      }
      double mean_loss = 0.0;
      try {
        mean_loss = batch_loss_gradient(net, result.params, batch,
                                        config.margin, grads);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch at pair " +
                           std::to_string(done) + ": " + e.what());
      }
      if (!std::isfinite(mean_loss) || !grads_finite(grads))
        throw NumericError("non-finite gradient at epoch " +
                           std::to_string(epoch) + ", batch at pair " +
                           std::to_string(done));
      sgd_step(result.params, grads, config, state);
      epoch_loss += mean_loss * static_cast<double>(batch_n);
      done += batch_n;
    }
    result.history.push_back(epoch_loss / static_cast<double>(pairs.size()));
  }
  return result;
}

namespace {

struct HeadGradients {
  Tensor<float> weight;
  std::vector<float> bias;
};

int label_index(const std::vector<int>& classes, int label) {
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label)
    throw DataError("label " + std::to_string(label) +
                    " not present in classifier head");
  return static_cast<int>(it - classes.begin());
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> head_logits(const ClassifierHead& head,
                                const std::vector<float>& embedding) {
  const int n = static_cast<int>(embedding.size());
  const int c = static_cast<int>(head.classes.size());
  std::vector<double> logits(head.bias.begin(), head.bias.end());
  for (int i = 0; i < n; ++i) {
    const float e = embedding[i];
    const float* row = head.weight.data.data() + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < c; ++j) logits[j] += static_cast<double>(e) * row[j];
  }
  return logits;
}

}  // namespace

ClassifierTrainResult train_classifier(const Dataset& dataset,
                                       const BackboneConfig& backbone,
                                       const TrainConfig& config,
                                       const ClassifierTrainOptions& options,
                                       const Parameters* init) {
  validate(config);
  validate(options.augment);
  if (dataset.classes.size() < 2)
    throw DataError("train_classifier: need at least 2 classes");
  if (dataset.image_shape != backbone.input_shape)
    throw ConfigError("dataset image shape does not match backbone input");
  if (init && !same_architecture(init->config, backbone))
    throw ConfigError("initial parameters do not match backbone config");

  Rng root(config.seed);
  Rng head_rng = root.derive("head");
  Rng balance_rng = root.derive("balance");
  Rng loop_rng = root.derive("loop");

  ClassifierTrainResult result;
  result.backbone =
      init ? *init : init_scratch<float>(backbone, config.seed);

  const int n_dim = backbone.embedding_dim;
  result.head.classes.assign(dataset.classes.begin(), dataset.classes.end());
  const int n_classes = static_cast<int>(result.head.classes.size());
  result.head.weight = Tensor<float>({n_dim, n_classes});
  result.head.bias.assign(n_classes, 0.0f);
  {
    const double limit = std::sqrt(6.0 / (n_dim + n_classes));
    for (auto& v : result.head.weight.data)
      v = static_cast<float>(head_rng.uniform(-limit, limit));
  }

  const DatasetView view =
      options.balanced_sampling ? balance_by_oversampling(dataset, balance_rng)
                                : identity_view(dataset);
  ClassWeights weights;
  if (config.loss == LossKind::kWeighted) weights = class_weights(dataset);

  Network<float> net(backbone);
  if (config.epochs == 0) return result;

  Parameters grads = make_gradients<float>(backbone);
  SgdState<float> state = SgdState<float>::zeros_like(result.backbone);
  HeadGradients head_grads{Tensor<float>({n_dim, n_classes}),
                           std::vector<float>(n_classes, 0.0f)};
  Tensor<float> head_velocity({n_dim, n_classes});
  std::vector<float> head_bias_velocity(n_classes, 0.0f);
  const bool augmenting = options.augment.alpha > 0.0;

  std::vector<std::size_t> order(view.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  typename Network<float>::Trace trace;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    loop_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t batch_n = std::min(
          static_cast<std::size_t>(config.batch_size), order.size() - done);
      for (auto& t : grads.tensors) t.fill(0.0f);
      head_grads.weight.fill(0.0f);
      std::fill(head_grads.bias.begin(), head_grads.bias.end(), 0.0f);

      const double inv_n = 1.0 / static_cast<double>(batch_n);
      for (std::size_t i = 0; i < batch_n; ++i) {
        const Sample& sample = view.sample(order[done + i]);
        const std::vector<float> pixels =
            augmenting
                ? random_augment(sample.image, options.augment, loop_rng).pixels
                : sample.image.pixels;
        const std::vector<float> embedding =
            net.forward(result.backbone, pixels.data(), trace);
        const std::vector<double> logits = head_logits(result.head, embedding);
        const std::vector<double> probs = softmax(logits);
        const int truth = label_index(result.head.classes, sample.label);
        const double sample_weight = config.loss == LossKind::kWeighted
                                         ? weights.at(sample.label)
                                         : 1.0;
        epoch_loss += -std::log(std::max(probs[truth], 1e-300)) * sample_weight;

        std::vector<double> dlogits(probs);
        dlogits[truth] -= 1.0;
        for (double& v : dlogits) v *= sample_weight * inv_n;

        for (int r = 0; r < n_dim; ++r) {
          const double e = embedding[r];
          float* row = head_grads.weight.data.data() +
                       static_cast<std::size_t>(r) * n_classes;
          for (int j = 0; j < n_classes; ++j)
            row[j] += static_cast<float>(e * dlogits[j]);
        }
        for (int j = 0; j < n_classes; ++j)
          head_grads.bias[j] += static_cast<float>(dlogits[j]);

        std::vector<float> d_embedding(n_dim, 0.0f);
        for (int r = 0; r < n_dim; ++r) {
          const float* row = result.head.weight.data.data() +
                             static_cast<std::size_t>(r) * n_classes;
          double sum = 0.0;
          for (int j = 0; j < n_classes; ++j) sum += row[j] * dlogits[j];
          d_embedding[r] = static_cast<float>(sum);
        }
        net.backward(result.backbone, trace, d_embedding, grads);
      }

      if (!grads_finite(grads))
        throw NumericError("non-finite gradient at epoch " +
                           std::to_string(epoch) + ", batch at sample " +
                           std::to_string(done));

      const double lr = config.learning_rate /
                        (1.0 + config.decay * static_cast<double>(state.step));
      const double mu = config.momentum;
      sgd_step(result.backbone, grads, config, state);
      // state.step already advanced; head uses the same schedule position.
      auto update = [&](float* p, const float* g, float* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
          const double vel = mu * v[i] - lr * g[i];
          v[i] = static_cast<float>(vel);
          p[i] = static_cast<float>(p[i] + mu * vel - lr * g[i]);
        }
      };
      update(result.head.weight.data.data(), head_grads.weight.data.data(),
             head_velocity.data.data(), head_velocity.numel());
      update(result.head.bias.data(), head_grads.bias.data(),
             head_bias_velocity.data(), head_bias_velocity.size());

      done += batch_n;
    }
    result.history.push_back(epoch_loss / static_cast<double>(order.size()));
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < view.size(); ++i) {
    const Sample& sample = view.sample(i);
    if (predict_class(result.backbone, result.head, sample.image) ==
        sample.label)
      ++correct;
  }
  result.train_accuracy =
      static_cast<double>(correct) / static_cast<double>(view.size());
  return result;
}

Parameters pretrain_classifier(const Dataset& dataset,
                               const BackboneConfig& backbone,
                               const TrainConfig& config) {
  ClassifierTrainResult result =
      train_classifier(dataset, backbone, config);
  result.backbone.source = ParamSource::kPretrained;
  return result.backbone;
}

int predict_class(const Parameters& params, const ClassifierHead& head,
                  const Image& image) {
  const std::vector<float> embedding = forward(params, image);
  const std::vector<double> logits = head_logits(head, embedding);
  const std::size_t best =
      std::max_element(logits.begin(), logits.end()) - logits.begin();
  return head.classes[best];
}

}  // namespace fewshot
