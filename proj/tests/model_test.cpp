#include <gtest/gtest.h>

#include <cmath>

#include "fewshot/common.hpp"
#include "fewshot/loss.hpp"
#include "fewshot/trainer.hpp"
#include "fewshot/weights_io.hpp"
#include "support/test_support.hpp"

namespace fewshot {
namespace {

using testing::TempDir;
using testing::random_image;

BackboneConfig tiny_backbone() {
  BackboneConfig config;
  config.input_shape = {8, 8, 1};
  config.conv_blocks = {{2, 3, 1, true}};
  config.embedding_dim = 4;
  config.normalize = true;
  config.use_bias = true;
  return config;
}

TEST(Distance, KnownValues) {
  EXPECT_EQ(distance(std::vector<float>{1, 2, 3}, std::vector<float>{1, 2, 3}),
            0.0);
  EXPECT_DOUBLE_EQ(
      distance(std::vector<float>{1, 0}, std::vector<float>{-1, 0}), 2.0);
  EXPECT_DOUBLE_EQ(
      distance(std::vector<float>{0, 3}, std::vector<float>{4, 0}), 5.0);
  EXPECT_THROW(distance(std::vector<float>{1}, std::vector<float>{1, 2}),
               ConfigError);
}

TEST(ContrastiveLoss, KnownValuesAndZeroSet) {
  EXPECT_EQ(contrastive_loss(0.0, 0, 1.0), 0.0);
  EXPECT_EQ(contrastive_loss(0.0, 1, 1.0), 1.0);
  EXPECT_EQ(contrastive_loss(1.0, 1, 1.0), 0.0);
  EXPECT_EQ(contrastive_loss(2.5, 1, 1.0), 0.0);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double d = rng.uniform(0.0, 2.0);
    const int y = static_cast<int>(rng.index(2));
    const double m = rng.uniform(0.1, 1.5);
    const double loss = contrastive_loss(d, y, m);
    EXPECT_GE(loss, 0.0);
    const bool zero = (y == 0 && d == 0.0) || (y == 1 && d >= m);
    EXPECT_EQ(loss == 0.0, zero);
  }
}

TEST(ClassWeights, HandValuesAndIdentity) {
  const ClassWeights w = class_weights({{0, 100}, {1, 10}});
  EXPECT_DOUBLE_EQ(w.at(0), 0.55);
  EXPECT_DOUBLE_EQ(w.at(1), 5.5);

  const ClassWeights balanced = class_weights({{0, 50}, {1, 50}});
  EXPECT_DOUBLE_EQ(balanced.at(0), 1.0);
  EXPECT_DOUBLE_EQ(balanced.at(1), 1.0);

  const ClassWeights extreme = class_weights({{0, 100}, {1, 1}});
  EXPECT_DOUBLE_EQ(extreme.at(1), 50.5);

  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t a = 1 + rng.index(1000);
    const std::size_t b = 1 + rng.index(1000);
    const ClassWeights cw = class_weights({{0, a}, {1, b}});
    const double total = cw.at(0) * static_cast<double>(a) +
                         cw.at(1) * static_cast<double>(b);
    EXPECT_NEAR(total, static_cast<double>(a + b), 1e-9);
  }
  EXPECT_THROW(class_weights({{0, 5}, {1, 0}}), DataError);
}

TEST(WeightedLoss, ReducesToPlainAndMatchesHandValue) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const double d = rng.uniform(0.0, 2.0);
    const int y = static_cast<int>(rng.index(2));
    EXPECT_EQ(weighted_contrastive_loss(d, y, 1.0, 1.0, 1.0),
              contrastive_loss(d, y, 1.0));
  }
  // lambda = {0.55, 5.5}, y = 1, D = 0.5, m = 1: 3.025 * 0.25.
  EXPECT_DOUBLE_EQ(weighted_contrastive_loss(0.5, 1, 1.0, 0.55, 5.5), 0.75625);
  EXPECT_EQ(weighted_contrastive_loss(0.0, 0, 1.0, 0.55, 5.5), 0.0);
}

// dL/dD = 2D for y=0 and -2*max(0, m-D) for y=1; probe with 1-D embeddings
// where the distance direction is the unit vector.
TEST(PairLossBackward, AnalyticDistanceDerivative) {
  std::vector<double> d_ea, d_eb;
  auto grad = [&](double d, int y) {
    pair_loss_backward(std::vector<double>{d}, std::vector<double>{0.0}, y,
                       1.0, 1.0, d_ea, d_eb);
    return d_ea[0];
  };
  EXPECT_DOUBLE_EQ(grad(0.25, 0), 0.5);
  EXPECT_DOUBLE_EQ(grad(1.5, 0), 3.0);
  EXPECT_DOUBLE_EQ(grad(0.25, 1), -1.5);
  EXPECT_DOUBLE_EQ(grad(1.5, 1), 0.0);
}

TEST(SgdStep, FixedPointAndVanillaDegeneration) {
  BackboneConfig config = tiny_backbone();
  TrainConfig train;
  train.momentum = 0.9;
  ParametersT<float> params = init_scratch<float>(config, 5);
  const ParametersT<float> before = params;
  ParametersT<float> grads = make_gradients<float>(config);
  SgdState<float> state = SgdState<float>::zeros_like(params);
  sgd_step(params, grads, train, state);
  for (std::size_t t = 0; t < params.tensors.size(); ++t)
    EXPECT_EQ(params.tensors[t].data, before.tensors[t].data);

  // momentum = 0: p <- p - lr * g.
  train.momentum = 0.0;
  train.learning_rate = 0.5;
  train.decay = 0.0;
  for (auto& tensor : grads.tensors) tensor.fill(2.0f);
  params = before;
  state = SgdState<float>::zeros_like(params);
  sgd_step(params, grads, train, state);
  for (std::size_t t = 0; t < params.tensors.size(); ++t)
    for (std::size_t i = 0; i < params.tensors[t].numel(); ++i)
      EXPECT_FLOAT_EQ(params.tensors[t].data[i],
                      before.tensors[t].data[i] - 1.0f);
}

// Scalar oracle: simulate the same Nesterov recurrence on f(x) = x^2 in
// plain doubles and require convergence.
TEST(SgdStep, QuadraticConvergesAndMatchesScalarOracle) {
  TrainConfig train;
  train.learning_rate = 0.1;
  train.momentum = 0.9;
  train.decay = 0.0;

  double x = 1.0, v = 0.0;
  for (int step = 0; step < 100; ++step) {
    const double g = 2.0 * x;
    const double vel = 0.9 * v - 0.1 * g;
    x = x + 0.9 * vel - 0.1 * g;
    v = vel;
  }
  EXPECT_LT(std::abs(x), 1e-3);

  BackboneConfig config;
  config.input_shape = {1, 1, 1};
  config.conv_blocks = {};
  config.embedding_dim = 2;
  config.normalize = false;
  config.use_bias = false;
  ParametersT<double> params = make_gradients<double>(config);  // zeros
  params.tensors[0].data = {1.0, 1.0};  // dense weight [1 x 2]
  ParametersT<double> grads = make_gradients<double>(config);
  SgdState<double> state = SgdState<double>::zeros_like(params);
  for (int step = 0; step < 100; ++step) {
    for (std::size_t i = 0; i < 2; ++i)
      grads.tensors[0].data[i] = 2.0 * params.tensors[0].data[i];
    sgd_step(params, grads, train, state);
  }
  for (double value : params.tensors[0].data) {
    EXPECT_LT(std::abs(value), 1e-3);
    EXPECT_NEAR(value, x, 1e-12);
  }
}

TEST(InitParameters, DeterministicScratchAndImportRoundTrip) {
  const BackboneConfig config = tiny_backbone();
  const Parameters a = init_parameters(config, InitStrategy::scratch(), 42);
  const Parameters b = init_parameters(config, InitStrategy::scratch(), 42);
  ASSERT_EQ(a.tensors.size(), b.tensors.size());
  for (std::size_t t = 0; t < a.tensors.size(); ++t)
    EXPECT_EQ(a.tensors[t].data, b.tensors[t].data);
  EXPECT_GT(parameter_count(config), 0u);
  EXPECT_EQ(a.count(), parameter_count(config));

  TempDir dir("weights");
  export_weights(a, dir.str("w.fsnw"));
  const Parameters back =
      init_parameters(config, InitStrategy::imported(dir.str("w.fsnw")), 0);
  EXPECT_EQ(back.source, ParamSource::kImported);
  for (std::size_t t = 0; t < a.tensors.size(); ++t)
    EXPECT_EQ(back.tensors[t].data, a.tensors[t].data);
}

TEST(InitParameters, TruncatedTensorNamesTheLayer) {
  const BackboneConfig config = tiny_backbone();
  const Parameters params = init_parameters(config, InitStrategy::scratch(), 1);
  TempDir dir("weights_trunc");
  export_weights(params, dir.str("w.fsnw"));
  // Drop the last 128 bytes, cutting into the dense tensor.
  const std::string path = dir.str("w.fsnw");
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 128);
  try {
    import_weights(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("dense"), std::string::npos);
  }
}

TEST(InitParameters, ArchitectureMismatchListsShapes) {
  const Parameters params =
      init_parameters(tiny_backbone(), InitStrategy::scratch(), 1);
  TempDir dir("weights_shape");
  export_weights(params, dir.str("w.fsnw"));
  BackboneConfig other = tiny_backbone();
  other.embedding_dim = 8;
  try {
    init_parameters(other, InitStrategy::imported(dir.str("w.fsnw")), 0);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("dense"), std::string::npos);
    EXPECT_NE(what.find("expected"), std::string::npos);
  }
}

TEST(InitParameters, FormatVersionMismatchIsRejected) {
  const Parameters params =
      init_parameters(tiny_backbone(), InitStrategy::scratch(), 1);
  TempDir dir("weights_ver");
  Parameters tagged = params;
  tagged.version = "fsnw-0";
  EXPECT_THROW(export_weights(tagged, dir.str("w.fsnw"));, std::exception);
  // export validates via parameter_shapes only; emulate an old file by
  // rewriting the format field.
  export_weights(params, dir.str("w.fsnw"));
  std::ifstream in(dir.str("w.fsnw"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();
  const auto pos = bytes.find("fsnw-1");
  ASSERT_NE(pos, std::string::npos);
  bytes.replace(pos, 6, "fsnw-9");
  std::ofstream out(dir.str("w9.fsnw"), std::ios::binary);
  out << bytes;
  out.close();
  try {
    import_weights(dir.str("w9.fsnw"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("incompatible"), std::string::npos);
  }
}

TEST(Forward, NormalizedEmbeddingsAreUnitNorm) {
  const BackboneConfig config = tiny_backbone();
  const Parameters params = init_parameters(config, InitStrategy::scratch(), 9);
  Rng rng(10);
  for (int i = 0; i < 10; ++i) {
    const Image img = random_image(8, 8, 1, rng);
    const std::vector<float> e = forward(params, img);
    double norm = 0.0;
    for (float v : e) norm += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-5);
  }
}

TEST(Forward, DeterministicForIdenticalImages) {
  const Parameters params =
      init_parameters(tiny_backbone(), InitStrategy::scratch(), 11);
  Rng rng(12);
  const Image img = random_image(8, 8, 1, rng);
  EXPECT_EQ(forward(params, img), forward(params, img));
}

TEST(Forward, ZeroImageThroughBiasFreeNetIsZero) {
  BackboneConfig config = tiny_backbone();
  config.use_bias = false;
  config.normalize = false;
  const Parameters params = init_parameters(config, InitStrategy::scratch(), 13);
  const Image zero(8, 8, 1);
  for (float v : forward(params, zero)) EXPECT_EQ(v, 0.0f);
}

TEST(Forward, NonFiniteParametersRaiseNumericFault) {
  Parameters params = init_parameters(tiny_backbone(), InitStrategy::scratch(), 14);
  params.tensors[0].data[0] = std::numeric_limits<float>::infinity();
  Rng rng(15);
  const Image img = random_image(8, 8, 1, rng);
  try {
    forward(params, img);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("conv0"), std::string::npos);
  }
}

// Central finite differences on a small double-precision backbone; the full
// 20-network suite runs in the acceptance binary.
TEST(BatchLossGradient, MatchesFiniteDifferences) {
  BackboneConfig config;
  config.input_shape = {6, 6, 1};
  config.conv_blocks = {{2, 3, 1, true}};
  config.embedding_dim = 3;
  config.normalize = true;
  config.use_bias = true;

  Network<double> net(config);
  ParametersT<double> params = init_scratch<double>(config, 21);
  Rng rng(22);
  std::vector<PairExample<double>> batch;
  for (int i = 0; i < 3; ++i) {
    PairExample<double> ex;
    ex.image_a.resize(36);
    ex.image_b.resize(36);
    for (auto& v : ex.image_a) v = rng.uniform();
    for (auto& v : ex.image_b) v = rng.uniform();
    ex.y = i % 2;
    ex.weight = 0.5 + rng.uniform();
    batch.push_back(std::move(ex));
  }

  ParametersT<double> grads = make_gradients<double>(config);
  batch_loss_gradient(net, params, batch, 1.0, grads);

  const double h = 1e-4;
  double max_rel = 0.0;
  for (std::size_t t = 0; t < params.tensors.size(); ++t)
    for (std::size_t i = 0; i < params.tensors[t].numel(); ++i) {
      const double saved = params.tensors[t].data[i];
      ParametersT<double> probe = make_gradients<double>(config);
      params.tensors[t].data[i] = saved + h;
      const double up = batch_loss_gradient(net, params, batch, 1.0, probe);
      params.tensors[t].data[i] = saved - h;
      const double down = batch_loss_gradient(net, params, batch, 1.0, probe);
      params.tensors[t].data[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads.tensors[t].data[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-3});
      max_rel = std::max(max_rel, rel);
    }
  EXPECT_LT(max_rel, 1e-4);
}

TEST(BatchLossGradient, ZeroLossBatchHasZeroGradient) {
  BackboneConfig config = tiny_backbone();
  Network<float> net(config);
  const ParametersT<float> params = init_scratch<float>(config, 30);
  // A satisfied different-class pair: distance of identical images is 0 for
  // y=0... instead use y=1 with far-apart embeddings via margin 0 is not
  // allowed, so craft y=0 with identical images: loss = 0, gradient = 0.
  PairExample<float> ex;
  Rng rng(31);
  ex.image_a.resize(64);
  for (auto& v : ex.image_a) v = static_cast<float>(rng.uniform());
  ex.image_b = ex.image_a;
  ex.y = 0;
  ParametersT<float> grads = make_gradients<float>(config);
  const double loss = batch_loss_gradient(net, params, {ex}, 1.0, grads);
  EXPECT_EQ(loss, 0.0);
  for (const auto& tensor : grads.tensors)
    for (float v : tensor.data) EXPECT_EQ(v, 0.0f);
}

TEST(BatchLossGradient, SymmetricUnderPairSwap) {
  BackboneConfig config = tiny_backbone();
  Network<float> net(config);
  const ParametersT<float> params = init_scratch<float>(config, 32);
  Rng rng(33);
  PairExample<float> ex;
  ex.image_a.resize(64);
  ex.image_b.resize(64);
  for (auto& v : ex.image_a) v = static_cast<float>(rng.uniform());
  for (auto& v : ex.image_b) v = static_cast<float>(rng.uniform());
  ex.y = 1;
  PairExample<float> swapped = ex;
  std::swap(swapped.image_a, swapped.image_b);

  ParametersT<float> ga = make_gradients<float>(config);
  ParametersT<float> gb = make_gradients<float>(config);
  const double la = batch_loss_gradient(net, params, {ex}, 1.0, ga);
  const double lb = batch_loss_gradient(net, params, {swapped}, 1.0, gb);
  EXPECT_EQ(la, lb);
  for (std::size_t t = 0; t < ga.tensors.size(); ++t)
    EXPECT_EQ(ga.tensors[t].data, gb.tensors[t].data);
}

Dataset blob_dataset(int per_class, std::uint64_t seed) {
  Dataset ds;
  ds.name = "blobs";
  ds.classes = {0, 1};
  ds.image_shape = {8, 8, 1};
  Rng rng(seed);
  for (int label = 0; label < 2; ++label)
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.id = "b" + std::to_string(label) + "_" + std::to_string(i);
      s.label = label;
      s.image = Image(8, 8, 1);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const bool lit = label == 0 ? (x < 4) : (x >= 4);
          s.image.at(y, x, 0) = static_cast<float>(
              (lit ? 0.8 : 0.2) + rng.uniform(-0.05, 0.05));
        }
      ds.samples.push_back(std::move(s));
    }
  return ds;
}

TEST(TrainSiamese, ZeroEpochsIsANoOp) {
  const Dataset ds = blob_dataset(6, 40);
  const BackboneConfig config = tiny_backbone();
  const Parameters init = init_parameters(config, InitStrategy::scratch(), 41);
  TrainConfig train;
  train.epochs = 0;
  const TrainResult result =
      train_siamese(ds, PairingConfig{}, AugmentConfig{}, train, init);
  EXPECT_TRUE(result.history.empty());
  for (std::size_t t = 0; t < init.tensors.size(); ++t)
    EXPECT_EQ(result.params.tensors[t].data, init.tensors[t].data);
}

TEST(TrainSiamese, DeterministicUnderSeed) {
  const Dataset ds = blob_dataset(6, 42);
  const BackboneConfig config = tiny_backbone();
  const Parameters init = init_parameters(config, InitStrategy::scratch(), 43);
  TrainConfig train;
  train.epochs = 2;
  train.seed = 7;
  const TrainResult a =
      train_siamese(ds, PairingConfig{}, AugmentConfig{}, train, init);
  const TrainResult b =
      train_siamese(ds, PairingConfig{}, AugmentConfig{}, train, init);
  EXPECT_EQ(a.history, b.history);
  for (std::size_t t = 0; t < a.params.tensors.size(); ++t)
    EXPECT_EQ(a.params.tensors[t].data, b.params.tensors[t].data);
}

TEST(TrainSiamese, LossDecreasesOnSeparableBlobs) {
  const Dataset ds = blob_dataset(10, 44);
  const BackboneConfig config = tiny_backbone();
  const Parameters init = init_parameters(config, InitStrategy::scratch(), 45);
  TrainConfig train;
  train.epochs = 5;
  train.seed = 8;
  const TrainResult result =
      train_siamese(ds, PairingConfig{}, AugmentConfig{}, train, init);
  ASSERT_EQ(result.history.size(), 5u);
  EXPECT_LT(result.history.back(), result.history.front());
}

TEST(TrainClassifier, PretrainReachesHighTrainingAccuracy) {
  const Dataset ds = blob_dataset(15, 46);
  const BackboneConfig config = tiny_backbone();
  TrainConfig train;
  train.epochs = 15;
  train.seed = 9;
  const ClassifierTrainResult result =
      train_classifier(ds, config, train);
  EXPECT_GT(result.train_accuracy, 0.9);

  const Parameters pretrained = pretrain_classifier(ds, config, train);
  EXPECT_EQ(pretrained.source, ParamSource::kPretrained);

  TempDir dir("pretrain");
  export_weights(pretrained, dir.str("p.fsnw"));
  const Parameters back = import_weights(dir.str("p.fsnw"));
  for (std::size_t t = 0; t < pretrained.tensors.size(); ++t)
    EXPECT_EQ(back.tensors[t].data, pretrained.tensors[t].data);
}

TEST(TrainClassifier, ZeroEpochsReturnsInitialization) {
  const Dataset ds = blob_dataset(5, 47);
  const BackboneConfig config = tiny_backbone();
  const Parameters init = init_parameters(config, InitStrategy::scratch(), 48);
  TrainConfig train;
  train.epochs = 0;
  const ClassifierTrainResult result =
      train_classifier(ds, config, train, {}, &init);
  EXPECT_TRUE(result.history.empty());
  for (std::size_t t = 0; t < init.tensors.size(); ++t)
    EXPECT_EQ(result.backbone.tensors[t].data, init.tensors[t].data);
}

}  // namespace
}  // namespace fewshot
