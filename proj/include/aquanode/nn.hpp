// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aquanode/dsp.hpp"
#include "aquanode/errors.hpp"
#include "aquanode/parallel.hpp"
#include "aquanode/rng.hpp"

namespace aquanode::nn {

template <typename S>
struct TensorT {
  std::vector<int> shape;
  std::vector<S> data;

  static TensorT zeros(std::vector<int> shp) {
    TensorT t;
    std::size_t n = 1;
    for (int d : shp) n *= static_cast<std::size_t>(d);
    t.shape = std::move(shp);
    t.data.assign(n, S(0));
    return t;
  }
  std::size_t numel() const { return data.size(); }
};

using Tensor = TensorT<float>;

// conv 8x(3x3), stride 2, valid padding -> ReLU -> flatten -> dense -> softmax
struct ModelConfig {
  int n = 16;
  int num_classes = 4;
  int num_filters = 8;

  static constexpr int kKernel = 3;
  static constexpr int kStride = 2;

  int conv_out() const { return (n - kKernel) / kStride + 1; }
  std::int64_t flatten_len() const {
    return static_cast<std::int64_t>(conv_out()) * conv_out() * num_filters;
  }
  std::int64_t param_count() const {
    return static_cast<std::int64_t>(num_filters) * (kKernel * kKernel + 1) +
           flatten_len() * num_classes + num_classes;
  }
  void validate() const;
};

// The scalar type is a template parameter so the gradient checker can run the
// exact same arithmetic in double while the product path stays float.
template <typename S>
struct ModelT {
  ModelConfig config;
  TensorT<S> conv_weights;   // {F, 3, 3}
  TensorT<S> conv_bias;      // {F}
  TensorT<S> dense_weights;  // {flatten, C}, row-major
  TensorT<S> dense_bias;     // {C}

  std::vector<S*> param_views() {
    return {conv_weights.data.data(), conv_bias.data.data(),
            dense_weights.data.data(), dense_bias.data.data()};
  }
  std::vector<std::size_t> param_sizes() const {
    return {conv_weights.numel(), conv_bias.numel(),
            dense_weights.numel(), dense_bias.numel()};
  }
};

using Model = ModelT<float>;
using ModelF64 = ModelT<double>;

struct InferenceResult {
  std::vector<double> probabilities;
  int predicted_class = 0;
};

template <typename S>
struct GradientsT {
  TensorT<S> conv_weights, conv_bias, dense_weights, dense_bias;
};

namespace detail {

template <typename S>
struct Activations {
  std::vector<S> conv_pre;  // (r*out + c)*F + f, pre-ReLU
  std::vector<S> conv_act;  // post-ReLU; flatten order is (row, col, filter)
  std::vector<S> logits;
  std::vector<S> probs;
};

template <typename S>
void check_model_plane(const ModelT<S>& m, const dsp::InputPlane& p) {
  m.config.validate();
  if (p.n != m.config.n)
    throw InvalidInput("forward: input plane is " + std::to_string(p.n) + "x" +
                       std::to_string(p.n) + " but the model expects " +
                       std::to_string(m.config.n));
  if (m.conv_weights.numel() !=
          static_cast<std::size_t>(m.config.num_filters) * 9 ||
      m.dense_weights.numel() !=
          static_cast<std::size_t>(m.config.flatten_len()) * m.config.num_classes)
    throw InvalidInput("forward: weight tensor sizes do not match the model config");
}

template <typename S>
void run_forward(const ModelT<S>& m, const dsp::InputPlane& p, Activations<S>& a) {
  const int out = m.config.conv_out();
  const int F = m.config.num_filters;
  const int C = m.config.num_classes;
  constexpr int K = ModelConfig::kKernel;
  constexpr int St = ModelConfig::kStride;

  a.conv_pre.assign(static_cast<std::size_t>(out) * out * F, S(0));
  a.conv_act.assign(a.conv_pre.size(), S(0));
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < out; ++c) {
      for (int f = 0; f < F; ++f) {
        S acc = m.conv_bias.data[f];
        for (int u = 0; u < K; ++u) {
          for (int v = 0; v < K; ++v) {
            acc += m.conv_weights.data[(f * K + u) * K + v] *
                   S(p.at(r * St + u, c * St + v));
          }
        }
        const std::size_t idx = (static_cast<std::size_t>(r) * out + c) * F + f;
        a.conv_pre[idx] = acc;
        a.conv_act[idx] = acc > S(0) ? acc : S(0);
      }
    }
  }

  const std::size_t flat = a.conv_act.size();
  a.logits.assign(C, S(0));
  for (int j = 0; j < C; ++j) a.logits[j] = m.dense_bias.data[j];
  for (std::size_t i = 0; i < flat; ++i) {
    const S x = a.conv_act[i];
    if (x == S(0)) continue;
    for (int j = 0; j < C; ++j) a.logits[j] += x * m.dense_weights.data[i * C + j];
  }

  S mx = a.logits[0];
  for (int j = 1; j < C; ++j) mx = a.logits[j] > mx ? a.logits[j] : mx;
  a.probs.assign(C, S(0));
  S sum = S(0);
  for (int j = 0; j < C; ++j) {
    a.probs[j] = std::exp(a.logits[j] - mx);
    sum += a.probs[j];
  }
  for (int j = 0; j < C; ++j) a.probs[j] /= sum;
}

}  // namespace detail

template <typename S>
InferenceResult forward(const ModelT<S>& m, const dsp::InputPlane& p) {
  detail::check_model_plane(m, p);
  detail::Activations<S> a;
  detail::run_forward(m, p, a);
  InferenceResult r;
  r.probabilities.assign(a.probs.begin(), a.probs.end());
  r.predicted_class = 0;
  for (int j = 1; j < m.config.num_classes; ++j)
    if (a.probs[j] > a.probs[r.predicted_class]) r.predicted_class = j;  // ties keep lowest
  return r;
}

template <typename S>
std::vector<InferenceResult> forward_batch(const ModelT<S>& m,
                                           const std::vector<dsp::InputPlane>& planes,
                                           Exec exec = Exec::parallel) {
  std::vector<InferenceResult> out(planes.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(planes.size()); ++i)
      out[i] = forward(m, planes[i]);
  } else {
    for (std::size_t i = 0; i < planes.size(); ++i) out[i] = forward(m, planes[i]);
  }
  return out;
}

// Cross-entropy against a one-hot label, clamped away from log(0).
template <typename S>
double loss(const ModelT<S>& m, const dsp::InputPlane& p, int label) {
  detail::check_model_plane(m, p);
  if (label < 0 || label >= m.config.num_classes)
    throw InvalidInput("loss: label " + std::to_string(label) + " out of range");
  detail::Activations<S> a;
  detail::run_forward(m, p, a);
  const double q = static_cast<double>(a.probs[label]);
  return -std::log(q > 1e-12 ? q : 1e-12);
}

template <typename S>
GradientsT<S> backward(const ModelT<S>& m, const dsp::InputPlane& p, int label) {
  detail::check_model_plane(m, p);
  if (label < 0 || label >= m.config.num_classes)
    throw InvalidInput("backward: label " + std::to_string(label) + " out of range");
  detail::Activations<S> a;
  detail::run_forward(m, p, a);

  const int out = m.config.conv_out();
  const int F = m.config.num_filters;
  const int C = m.config.num_classes;
  constexpr int K = ModelConfig::kKernel;
  constexpr int St = ModelConfig::kStride;

  GradientsT<S> g;
  g.conv_weights = TensorT<S>::zeros({F, K, K});
  g.conv_bias = TensorT<S>::zeros({F});
  g.dense_weights = TensorT<S>::zeros({static_cast<int>(m.config.flatten_len()), C});
  g.dense_bias = TensorT<S>::zeros({C});

  // d(loss)/d(logit_j) = p_j - [j == label]
  std::vector<S> dlogit(C);
  for (int j = 0; j < C; ++j) dlogit[j] = a.probs[j] - S(j == label ? 1 : 0);
  for (int j = 0; j < C; ++j) g.dense_bias.data[j] = dlogit[j];

  const std::size_t flat = a.conv_act.size();
  std::vector<S> dact(flat, S(0));
  for (std::size_t i = 0; i < flat; ++i) {
    const S x = a.conv_act[i];
    S acc = S(0);
    for (int j = 0; j < C; ++j) {
      g.dense_weights.data[i * C + j] = x * dlogit[j];
      acc += m.dense_weights.data[i * C + j] * dlogit[j];
    }
    dact[i] = acc;
  }

  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < out; ++c) {
      for (int f = 0; f < F; ++f) {
        const std::size_t idx = (static_cast<std::size_t>(r) * out + c) * F + f;
        if (a.conv_pre[idx] <= S(0)) continue;  // ReLU gate
        const S d = dact[idx];
        g.conv_bias.data[f] += d;
        for (int u = 0; u < K; ++u)
          for (int v = 0; v < K; ++v)
            g.conv_weights.data[(f * K + u) * K + v] +=
                d * S(p.at(r * St + u, c * St + v));
      }
    }
  }
  return g;
}

struct TrainOptions {
  int epochs = 40;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
  bool shuffle = true;
};

// Plain per-sample SGD. Same options and data -> bitwise identical model.
template <typename S>
ModelT<S> train(ModelT<S> model,
                const std::vector<std::pair<dsp::InputPlane, int>>& dataset,
                const TrainOptions& opt) {
  model.config.validate();
  if (dataset.empty()) throw InvalidInput("train: empty dataset");
  if (opt.epochs < 0) throw InvalidInput("train: negative epoch count");
  if (!(opt.learning_rate >= 0.0)) throw InvalidInput("train: negative learning rate");

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng::Stream sh(rng::derive(opt.seed, 0x5475));

  const S lr = S(opt.learning_rate);
  for (int e = 0; e < opt.epochs; ++e) {
    if (opt.shuffle) sh.shuffle(order);
    for (std::size_t k : order) {
      const auto& [plane, label] = dataset[k];
      GradientsT<S> g = backward(model, plane, label);
      auto views = model.param_views();
      const std::vector<const S*> gviews = {
          g.conv_weights.data.data(), g.conv_bias.data.data(),
          g.dense_weights.data.data(), g.dense_bias.data.data()};
      const auto sizes = model.param_sizes();
      for (std::size_t t = 0; t < views.size(); ++t)
        for (std::size_t i = 0; i < sizes[t]; ++i) views[t][i] -= lr * gviews[t][i];
    }
  }
  return model;
}

// Glorot-uniform weights, zero biases.
template <typename S>
ModelT<S> init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelT<S> m;
  m.config = cfg;
  constexpr int K = ModelConfig::kKernel;
  m.conv_weights = TensorT<S>::zeros({cfg.num_filters, K, K});
  m.conv_bias = TensorT<S>::zeros({cfg.num_filters});
  m.dense_weights = TensorT<S>::zeros({static_cast<int>(cfg.flatten_len()), cfg.num_classes});
  m.dense_bias = TensorT<S>::zeros({cfg.num_classes});

  rng::Stream rs(rng::derive(seed, 0x494e));
  const double conv_lim = std::sqrt(6.0 / (K * K + K * K * cfg.num_filters));
  for (auto& w : m.conv_weights.data) w = S(rs.uniform(-conv_lim, conv_lim));
  const double dense_lim =
      std::sqrt(6.0 / (static_cast<double>(cfg.flatten_len()) + cfg.num_classes));
  for (auto& w : m.dense_weights.data) w = S(rs.uniform(-dense_lim, dense_lim));
  return m;
}

inline Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  return init_model<float>(cfg, seed);
}

// On-disk container, little-endian:
//   magic "AQNN" | version u16 | flags u16 (bit0: int16 payload)
//   n u16 | num_classes u16 | num_filters u16
//   then per tensor (conv_w, conv_b, dense_w, dense_b):
//     float32 values, or (float32 scale, int16 values) when quantized
std::vector<std::uint8_t> save_model(const Model& m);
Model load_model(const std::vector<std::uint8_t>& bytes);
void save_model_file(const Model& m, const std::string& path);
Model load_model_file(const std::string& path);

inline constexpr std::uint16_t kWeightsVersion = 1;
inline constexpr std::uint16_t kFlagQuantized = 0x0001;

}  // namespace aquanode::nn
