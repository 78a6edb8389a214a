#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fewshot/common.hpp"
#include "fewshot/image.hpp"
#include "fewshot/rng.hpp"
#include "fewshot/tensor.hpp"

namespace fewshot {

inline constexpr const char* kWeightFormatVersion = "fsnw-1";

struct ConvBlockSpec {
  int filters = 8;
  int kernel = 3;  // odd
  int stride = 1;
  bool pool = true;  // 2x2 max-pool after the activation
};

struct BackboneConfig {
  ImageShape input_shape{32, 32, 1};
  std::vector<ConvBlockSpec> conv_blocks{{8}, {16}, {32}};
  int embedding_dim = 64;
  bool normalize = true;
  bool use_bias = true;
};

BackboneConfig default_backbone(ImageShape input);
void validate(const BackboneConfig& config);
std::size_t parameter_count(const BackboneConfig& config);
bool same_architecture(const BackboneConfig& a, const BackboneConfig& b);

std::string backbone_to_json(const BackboneConfig& config);
BackboneConfig backbone_from_json(const std::string& text);

enum class ParamSource { kScratch, kImported, kPretrained };
const char* source_tag(ParamSource source);
ParamSource parse_source_tag(const std::string& tag);

// Weight and bias tensors in declaration order: per conv block the kernel
// tensor [k,k,in_c,filters] then (if biased) [filters]; finally the dense
// projection [flat,embedding_dim] and its bias.
template <typename T>
struct ParametersT {
  BackboneConfig config;
  std::vector<Tensor<T>> tensors;
  std::string version = kWeightFormatVersion;
  ParamSource source = ParamSource::kScratch;

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.numel();
    return n;
  }

  template <typename U>
  ParametersT<U> cast() const {
    ParametersT<U> out;
    out.config = config;
    out.version = version;
    out.source = source;
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
    return out;
  }
};

using Parameters = ParametersT<float>;

enum class LayerKind { kConv, kRelu, kPool, kDense, kL2Norm };

struct LayerPlan {
  LayerKind kind;
  std::string name;
  int in_h = 0, in_w = 0, in_c = 0;
  int out_h = 0, out_w = 0, out_c = 0;
  int kernel = 0, stride = 1, pad = 0;
  int weight_index = -1;
  int bias_index = -1;

  std::size_t in_len() const {
    return static_cast<std::size_t>(in_h) * in_w * in_c;
  }
  std::size_t out_len() const {
    return static_cast<std::size_t>(out_h) * out_w * out_c;
  }
};

// Layer geometry implied by a config; shared by the network, initializers,
// and the weight-file reader.
std::vector<LayerPlan> plan_layers(const BackboneConfig& config);

// Expected parameter tensor shapes in declaration order, with layer names.
std::vector<std::pair<std::string, std::vector<int>>> parameter_shapes(
    const BackboneConfig& config);

// Variance-scaled uniform initialization (Glorot), deterministic under seed.
template <typename T>
ParametersT<T> init_scratch(const BackboneConfig& config, std::uint64_t seed) {
  validate(config);
  ParametersT<T> params;
  params.config = config;
  params.source = ParamSource::kScratch;
  Rng rng = Rng(seed).derive("init");
  for (const auto& [name, shape] : parameter_shapes(config)) {
    Tensor<T> t(shape);
    const bool is_bias = shape.size() == 1;
    if (!is_bias) {
      double fan_in = 1.0, fan_out = 1.0;
      if (shape.size() == 4) {  // conv [k,k,in_c,f]
        fan_in = static_cast<double>(shape[0]) * shape[1] * shape[2];
        fan_out = static_cast<double>(shape[0]) * shape[1] * shape[3];
      } else {  // dense [in,out]
        fan_in = shape[0];
        fan_out = shape[1];
      }
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : t.data)
        v = static_cast<T>(rng.uniform(-limit, limit));
    }
    params.tensors.push_back(std::move(t));
  }
  return params;
}

// Zero-filled gradient container matching a config's parameter shapes.
template <typename T>
ParametersT<T> make_gradients(const BackboneConfig& config) {
  ParametersT<T> grads;
  grads.config = config;
  for (const auto& [name, shape] : parameter_shapes(config))
    grads.tensors.emplace_back(shape);
  return grads;
}

struct InitStrategy {
  enum Kind { kScratchRandom, kImported } kind = kScratchRandom;
  std::string path;

  static InitStrategy scratch() { return {}; }
  static InitStrategy imported(std::string file) {
    return {kImported, std::move(file)};
  }
};

// Scratch initialization or bit-exact import from a weight file; imported
// weights must match the config's layer shapes.
Parameters init_parameters(const BackboneConfig& config,
                           const InitStrategy& strategy, std::uint64_t seed);

namespace detail {

template <typename T>
void im2col(const T* in, int h, int w, int c, int k, int s, int p, int oh,
            int ow, T* cols) {
  std::size_t col = 0;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int ky = 0; ky < k; ++ky) {
        const int sy = oy * s - p + ky;
        for (int kx = 0; kx < k; ++kx) {
          const int sx = ox * s - p + kx;
          if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
            const T* src = in + (static_cast<std::size_t>(sy) * w + sx) * c;
            for (int ch = 0; ch < c; ++ch) cols[col++] = src[ch];
          } else {
            for (int ch = 0; ch < c; ++ch) cols[col++] = T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, int h, int w, int c, int k, int s, int p,
                int oh, int ow, T* din) {
  std::size_t col = 0;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int ky = 0; ky < k; ++ky) {
        const int sy = oy * s - p + ky;
        for (int kx = 0; kx < k; ++kx) {
          const int sx = ox * s - p + kx;
          if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
            T* dst = din + (static_cast<std::size_t>(sy) * w + sx) * c;
            for (int ch = 0; ch < c; ++ch) dst[ch] += cols[col++];
          } else {
            col += c;
          }
        }
      }
    }
  }
}

template <typename T>
bool all_finite(const T* data, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(data[i]);
  return std::isfinite(sum);
}

}  // namespace detail

inline constexpr double kNormEpsilon = 1e-12;

// Embedding network h_w: conv blocks, a dense projection, and optional final
// l2 normalization. Stateless; activations live in a caller-owned Trace so
// forward passes on frozen parameters can run in parallel.
template <typename T>
class Network {
 public:
  explicit Network(const BackboneConfig& config)
      : config_(config), layers_(plan_layers(config)) {}

  const BackboneConfig& config() const { return config_; }
  const std::vector<LayerPlan>& layers() const { return layers_; }
  int embedding_dim() const { return config_.embedding_dim; }

  struct Trace {
    std::vector<T> input;
    std::vector<std::vector<T>> outputs;  // per layer
    std::vector<std::vector<T>> cols;     // per conv layer, else empty
    std::vector<std::vector<int>> argmax; // per pool layer, else empty
  };

  const std::vector<T>& forward(const ParametersT<T>& params, const T* image,
                                Trace& trace) const {
    check_params(params);
    const std::size_t n_layers = layers_.size();
    trace.outputs.resize(n_layers);
    trace.cols.resize(n_layers);
    trace.argmax.resize(n_layers);
    trace.input.assign(image, image + layers_.front().in_len());

    const T* in = trace.input.data();
    for (std::size_t li = 0; li < n_layers; ++li) {
      const LayerPlan& layer = layers_[li];
      std::vector<T>& out = trace.outputs[li];
      out.assign(layer.out_len(), T(0));
      switch (layer.kind) {
        case LayerKind::kConv: {
          const int P = layer.out_h * layer.out_w;
          const int Q = layer.kernel * layer.kernel * layer.in_c;
          trace.cols[li].resize(static_cast<std::size_t>(P) * Q);
          detail::im2col(in, layer.in_h, layer.in_w, layer.in_c, layer.kernel,
                         layer.stride, layer.pad, layer.out_h, layer.out_w,
                         trace.cols[li].data());
          gemm_nn(trace.cols[li].data(),
                  params.tensors[layer.weight_index].data.data(), out.data(),
                  P, Q, layer.out_c);
          if (layer.bias_index >= 0) {
            const T* bias = params.tensors[layer.bias_index].data.data();
            for (int pnt = 0; pnt < P; ++pnt)
              for (int f = 0; f < layer.out_c; ++f)
                out[static_cast<std::size_t>(pnt) * layer.out_c + f] += bias[f];
          }
          break;
        }
        case LayerKind::kRelu: {
          for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = in[i] > T(0) ? in[i] : T(0);
          break;
        }
        case LayerKind::kPool: {
          trace.argmax[li].resize(layer.out_len());
          pool_forward(layer, in, out.data(), trace.argmax[li].data());
          break;
        }
        case LayerKind::kDense: {
          const T* w = params.tensors[layer.weight_index].data.data();
          const int in_len = static_cast<int>(layer.in_len());
          gemm_nn(in, w, out.data(), 1, in_len, layer.out_c);
          if (layer.bias_index >= 0) {
            const T* bias = params.tensors[layer.bias_index].data.data();
            for (int j = 0; j < layer.out_c; ++j) out[j] += bias[j];
          }
          break;
        }
        case LayerKind::kL2Norm: {
          double norm2 = 0.0;
          for (std::size_t i = 0; i < layer.in_len(); ++i)
            norm2 += static_cast<double>(in[i]) * in[i];
          const T inv =
              static_cast<T>(1.0 / std::max(std::sqrt(norm2), kNormEpsilon));
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * inv;
          break;
        }
      }
      if (!detail::all_finite(out.data(), out.size()))
        throw NumericError("non-finite activation in layer " +
                           std::to_string(li) + " (" + layer.name + ")");
      in = out.data();
    }
    return trace.outputs.back();
  }

  std::vector<T> embed(const ParametersT<T>& params, const Image& image) const {
    if (image.shape() != config_.input_shape)
      throw DataError("input image shape does not match backbone input_shape");
    std::vector<T> pixels(image.pixels.begin(), image.pixels.end());
    Trace trace;
    return forward(params, pixels.data(), trace);
  }

  // Accumulates d(loss)/d(parameters) for one traced forward pass.
  void backward(const ParametersT<T>& params, const Trace& trace,
                const std::vector<T>& d_embedding,
                ParametersT<T>& grads) const {
    std::vector<T> dout(d_embedding);
    std::vector<T> din;
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const LayerPlan& layer = layers_[li];
      const T* in =
          li == 0 ? trace.input.data() : trace.outputs[li - 1].data();
      din.assign(layer.in_len(), T(0));
      switch (layer.kind) {
        case LayerKind::kConv: {
          const int P = layer.out_h * layer.out_w;
          const int Q = layer.kernel * layer.kernel * layer.in_c;
          const int F = layer.out_c;
          // dW(Q x F) += cols^T(Q x P) * dOut(P x F)
          gemm_tn(trace.cols[li].data(), dout.data(),
                  grads.tensors[layer.weight_index].data.data(), Q, P, F);
          if (layer.bias_index >= 0) {
            T* db = grads.tensors[layer.bias_index].data.data();
            for (int pnt = 0; pnt < P; ++pnt)
              for (int f = 0; f < F; ++f)
                db[f] += dout[static_cast<std::size_t>(pnt) * F + f];
          }
          // dcols(P x Q) = dOut(P x F) * W^T(F x Q), then scatter to input.
          const Tensor<T>& w = params.tensors[layer.weight_index];
          std::vector<T> wt(w.numel());
          transpose(w.data.data(), wt.data(), Q, F);
          std::vector<T> dcols(static_cast<std::size_t>(P) * Q, T(0));
          gemm_nn(dout.data(), wt.data(), dcols.data(), P, F, Q);
          detail::col2im_add(dcols.data(), layer.in_h, layer.in_w, layer.in_c,
                             layer.kernel, layer.stride, layer.pad,
                             layer.out_h, layer.out_w, din.data());
          break;
        }
        case LayerKind::kRelu: {
          for (std::size_t i = 0; i < din.size(); ++i)
            din[i] = in[i] > T(0) ? dout[i] : T(0);
          break;
        }
        case LayerKind::kPool: {
          const std::vector<int>& argmax = trace.argmax[li];
          for (std::size_t i = 0; i < dout.size(); ++i)
            din[argmax[i]] += dout[i];
          break;
        }
        case LayerKind::kDense: {
          const int in_len = static_cast<int>(layer.in_len());
          const int out_len = layer.out_c;
          // dW(I x O) += x^T(I x 1) * dOut(1 x O)
          gemm_tn(in, dout.data(),
                  grads.tensors[layer.weight_index].data.data(), in_len, 1,
                  out_len);
          if (layer.bias_index >= 0) {
            T* db = grads.tensors[layer.bias_index].data.data();
            for (int j = 0; j < out_len; ++j) db[j] += dout[j];
          }
          // dx(1 x I) = dOut(1 x O) * W(I x O)^T
          gemm_nt(dout.data(), params.tensors[layer.weight_index].data.data(),
                  din.data(), 1, out_len, in_len);
          break;
        }
        case LayerKind::kL2Norm: {
          double norm2 = 0.0;
          for (std::size_t i = 0; i < layer.in_len(); ++i)
            norm2 += static_cast<double>(in[i]) * in[i];
          const double norm = std::max(std::sqrt(norm2), kNormEpsilon);
          const std::vector<T>& e = trace.outputs[li];
          double dot = 0.0;
          for (std::size_t i = 0; i < e.size(); ++i)
            dot += static_cast<double>(e[i]) * dout[i];
          for (std::size_t i = 0; i < din.size(); ++i)
            din[i] = static_cast<T>(
                (static_cast<double>(dout[i]) - dot * e[i]) / norm);
          break;
        }
      }
      dout.swap(din);
    }
  }

 private:
  void check_params(const ParametersT<T>& params) const {
    if (!same_architecture(params.config, config_))
      throw ConfigError("parameters were built for a different backbone");
  }

  static void pool_forward(const LayerPlan& layer, const T* in, T* out,
                           int* argmax) {
    const int c = layer.in_c;
    for (int oy = 0; oy < layer.out_h; ++oy)
      for (int ox = 0; ox < layer.out_w; ++ox)
        for (int ch = 0; ch < c; ++ch) {
          T best = T(0);
          int best_idx = -1;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int sy = oy * 2 + dy;
              const int sx = ox * 2 + dx;
              const int idx = (sy * layer.in_w + sx) * c + ch;
              if (best_idx < 0 || in[idx] > best) {
                best = in[idx];
                best_idx = idx;
              }
            }
          const std::size_t o =
              (static_cast<std::size_t>(oy) * layer.out_w + ox) * c + ch;
          out[o] = best;
          argmax[o] = best_idx;
        }
  }

  BackboneConfig config_;
  std::vector<LayerPlan> layers_;
};

// Embedding of one image under frozen parameters.
std::vector<float> forward(const Parameters& params, const Image& image);

}  // namespace fewshot
