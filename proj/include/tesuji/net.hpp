// Copyright 2026 The tesuji Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tesuji/encoder.hpp"
#include "tesuji/symmetry.hpp"
#include "tesuji/tensor.hpp"

namespace tesuji {

enum class Activation : std::uint8_t { Relu, Tanh };

inline const char* activation_name(Activation a) {
  return a == Activation::Relu ? "relu" : "tanh";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

/// Softmax restricted to masked-in entries. Masked-out entries are exactly
/// zero; masked-in entries are max-subtracted before exponentiation and
/// sum to one.
template <typename Scalar>
std::vector<Scalar> masked_softmax(std::span<const Scalar> logits,
                                   std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) {
    throw ShapeError("masked_softmax: logits/mask size mismatch");
  }
  Scalar max_logit = 0;
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    if (!any || logits[i] > max_logit) max_logit = logits[i];
    any = true;
  }
  if (!any) throw Error("masked_softmax: no legal entries in mask");
  std::vector<Scalar> probs(logits.size(), Scalar(0));
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    double e = std::exp(static_cast<double>(logits[i] - max_logit));
    probs[i] = static_cast<Scalar>(e);
    total += e;
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) probs[i] = static_cast<Scalar>(probs[i] / total);
  }
  return probs;
}

/// Stride-1 convolution whose spatial weights are constant on symmetry
/// orbits, so the layer commutes with every board reflection. Weights are
/// expanded from the per-orbit free parameters into a dense kernel cache.
template <typename Scalar>
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int pad = 0;          // (kernel - 1) / 2
  bool edge_pad = false;  // first layer: pad ring carries the edge channel
  OrbitMap orbits;      // spatial offsets, shared across channel pairs
  std::vector<Scalar> params;   // [out][in][orbit]
  std::vector<Scalar> bias;     // [out]
  std::vector<Scalar> weights;  // expanded [out][in][kernel*kernel]

  static ConvLayer make(int in_channels, int out_channels, int kernel,
                        bool tied) {
    if (kernel < 1 || kernel % 2 == 0) {
      throw ConfigError("convolution kernels must be odd, got " +
                        std::to_string(kernel));
    }
    ConvLayer layer;
    layer.in_channels = in_channels;
    layer.out_channels = out_channels;
    layer.kernel = kernel;
    layer.pad = (kernel - 1) / 2;
    layer.orbits = tied ? build_orbit_map_conv(kernel)
                        : trivial_orbit_map(static_cast<std::size_t>(kernel) *
                                            kernel);
    layer.params.assign(static_cast<std::size_t>(in_channels) * out_channels *
                            layer.orbits.orbit_count(),
                        Scalar(0));
    layer.bias.assign(out_channels, Scalar(0));
    layer.weights.assign(static_cast<std::size_t>(in_channels) *
                             out_channels * kernel * kernel,
                         Scalar(0));
    return layer;
  }

  std::size_t param_count() const { return params.size() + bias.size(); }
  std::size_t raw_weight_count() const { return weights.size(); }

  void expand_weights() {
    const int kk = kernel * kernel;
    const int orbit_count = orbits.orbit_count();
    for (int o = 0; o < out_channels; ++o) {
      for (int i = 0; i < in_channels; ++i) {
        const Scalar* p =
            params.data() +
            (static_cast<std::size_t>(o) * in_channels + i) * orbit_count;
        Scalar* w = weights.data() +
                    (static_cast<std::size_t>(o) * in_channels + i) * kk;
        for (int u = 0; u < kk; ++u) w[u] = p[orbits.orbit_of[u]];
      }
    }
  }
};

/// Fully connected top layer from C x n x n activations to an n x n grid
/// of logits, with weights tied over (output position, input position)
/// orbits and biases tied over output-position orbits.
template <typename Scalar>
struct DenseLayer {
  int in_channels = 0;
  int board = 0;  // n; input is C x n x n, output n*n
  OrbitMap pair_orbits;
  OrbitMap bias_orbits;
  std::vector<Scalar> params;       // [in_channel][pair orbit]
  std::vector<Scalar> bias_params;  // [bias orbit]
  std::vector<Scalar> weights;      // expanded [p][in_channel][q]
  std::vector<Scalar> bias;         // expanded [p]

  static DenseLayer make(int in_channels, int board, bool tied) {
    DenseLayer layer;
    layer.in_channels = in_channels;
    layer.board = board;
    const std::size_t nn = static_cast<std::size_t>(board) * board;
    if (tied) {
      DenseOrbitMaps maps = build_orbit_map_dense(board, board, board, board);
      layer.pair_orbits = std::move(maps.pairs);
      layer.bias_orbits = std::move(maps.bias);
    } else {
      layer.pair_orbits = trivial_orbit_map(nn * nn);
      layer.bias_orbits = trivial_orbit_map(nn);
    }
    layer.params.assign(
        static_cast<std::size_t>(in_channels) * layer.pair_orbits.orbit_count(),
        Scalar(0));
    layer.bias_params.assign(layer.bias_orbits.orbit_count(), Scalar(0));
    layer.weights.assign(nn * in_channels * nn, Scalar(0));
    layer.bias.assign(nn, Scalar(0));
    return layer;
  }

  std::size_t param_count() const {
    return params.size() + bias_params.size();
  }
  std::size_t raw_weight_count() const { return weights.size(); }

  void expand_weights() {
    const std::size_t nn = static_cast<std::size_t>(board) * board;
    const std::size_t orbit_count = pair_orbits.orbit_count();
    for (std::size_t p = 0; p < nn; ++p) {
      for (int c = 0; c < in_channels; ++c) {
        const Scalar* src = params.data() + c * orbit_count;
        Scalar* dst = weights.data() + (p * in_channels + c) * nn;
        const std::int32_t* orbit_row = pair_orbits.orbit_of.data() + p * nn;
        for (std::size_t q = 0; q < nn; ++q) dst[q] = src[orbit_row[q]];
      }
    }
    for (std::size_t p = 0; p < nn; ++p) {
      bias[p] = bias_params[bias_orbits.orbit_of[p]];
    }
  }
};

/// Per-example scratch space reused across forward/backward calls.
template <typename Scalar>
struct ForwardContext {
  std::vector<Tensor<Scalar>> padded;    // per conv layer: padded input
  std::vector<Tensor<Scalar>> preacts;   // per conv layer
  std::vector<Tensor<Scalar>> activations;  // per conv layer
  std::vector<Scalar> logits;
};

/// Raw (expanded-weight) gradient accumulators mirroring the network
/// parameters. Orbit-parameter gradients are obtained by summing raw
/// gradients over each orbit's members.
template <typename Scalar>
struct GradientBuffer {
  struct ConvGrads {
    std::vector<Scalar> weights;  // raw [out][in][k*k]
    std::vector<Scalar> bias;     // [out]
  };
  std::vector<ConvGrads> conv;
  std::vector<Scalar> dense_weights;  // raw [p][c][q]
  std::vector<Scalar> dense_bias;     // raw [p]

  void zero() {
    for (auto& g : conv) {
      std::fill(g.weights.begin(), g.weights.end(), Scalar(0));
      std::fill(g.bias.begin(), g.bias.end(), Scalar(0));
    }
    std::fill(dense_weights.begin(), dense_weights.end(), Scalar(0));
    std::fill(dense_bias.begin(), dense_bias.end(), Scalar(0));
  }

  void add(const GradientBuffer& o) {
    for (std::size_t l = 0; l < conv.size(); ++l) {
      for (std::size_t i = 0; i < conv[l].weights.size(); ++i) {
        conv[l].weights[i] += o.conv[l].weights[i];
      }
      for (std::size_t i = 0; i < conv[l].bias.size(); ++i) {
        conv[l].bias[i] += o.conv[l].bias[i];
      }
    }
    for (std::size_t i = 0; i < dense_weights.size(); ++i) {
      dense_weights[i] += o.dense_weights[i];
    }
    for (std::size_t i = 0; i < dense_bias.size(); ++i) {
      dense_bias[i] += o.dense_bias[i];
    }
  }
};

/// Gradients projected onto the free (per-orbit) parameters, one vector
/// per conv layer plus the dense layer, in network parameter order.
template <typename Scalar>
struct OrbitGradients {
  struct LayerGrads {
    std::vector<Scalar> params;
    std::vector<Scalar> bias;
  };
  std::vector<LayerGrads> conv;
  LayerGrads dense;
};

/// Stacked padded convolutions with a fully connected top layer producing
/// one logit per grid point. With tying enabled every layer commutes with
/// the 8 reflections of the board, so the whole network does.
template <typename Scalar>
class Network {
 public:
  int board_size = kBoardSize;
  EncodingConfig encoding;
  bool tied = true;
  bool masked_training = true;
  Activation activation = Activation::Relu;
  std::vector<ConvLayer<Scalar>> conv_layers;
  DenseLayer<Scalar> dense;

  struct ConvSpec {
    int filters = 0;
    int kernel = 0;
  };

  static Network make(int board_size, const EncodingConfig& encoding,
                      std::span<const ConvSpec> convs, bool tied,
                      bool masked_training, Activation activation) {
    if (board_size < 2) {
      throw ConfigError("network board size must be >= 2");
    }
    Network net;
    net.board_size = board_size;
    net.encoding = encoding;
    net.tied = tied;
    net.masked_training = masked_training;
    net.activation = activation;
    int channels = encoding.channels();
    for (std::size_t i = 0; i < convs.size(); ++i) {
      if (convs[i].filters < 1) {
        throw ConfigError("conv layer needs at least one filter");
      }
      auto layer = ConvLayer<Scalar>::make(channels, convs[i].filters,
                                           convs[i].kernel, tied);
      layer.edge_pad = (i == 0 && encoding.use_edge_channel);
      net.conv_layers.push_back(std::move(layer));
      channels = convs[i].filters;
    }
    net.dense = DenseLayer<Scalar>::make(channels, board_size, tied);
    net.expand_all();
    return net;
  }

  int points() const { return board_size * board_size; }

  /// Free parameters (orbit weights + biases) across all layers.
  std::size_t param_count() const {
    std::size_t n = dense.param_count();
    for (const auto& l : conv_layers) n += l.param_count();
    return n;
  }

  /// Parameters an untied network of the same architecture would have.
  std::size_t raw_param_count() const {
    std::size_t n = dense.raw_weight_count() + dense.bias.size();
    for (const auto& l : conv_layers) {
      n += l.raw_weight_count() + l.bias.size();
    }
    return n;
  }

  void expand_all() {
    for (auto& l : conv_layers) l.expand_weights();
    dense.expand_weights();
  }

  /// Probability distribution over grid points, masked softmax over the
  /// mask's legal entries.
  std::vector<Scalar> forward(const Tensor<Scalar>& input,
                              std::span<const std::uint8_t> mask) const {
    ForwardContext<Scalar> ctx;
    forward_logits(input, ctx);
    return masked_softmax<Scalar>(ctx.logits, mask);
  }

  std::vector<Scalar> forward(const Tensor<Scalar>& input,
                              std::span<const std::uint8_t> mask,
                              ForwardContext<Scalar>& ctx) const {
    forward_logits(input, ctx);
    return masked_softmax<Scalar>(ctx.logits, mask);
  }

  /// Runs the layer stack up to the logits (no softmax).
  void forward_logits(const Tensor<Scalar>& input,
                      ForwardContext<Scalar>& ctx) const {
    if (input.channels != encoding.channels()) {
      throw ShapeError("input has " + std::to_string(input.channels) +
                       " channels, network expects " +
                       std::to_string(encoding.channels()));
    }
    ctx.padded.resize(conv_layers.size());
    ctx.preacts.resize(conv_layers.size());
    ctx.activations.resize(conv_layers.size());

    const Tensor<Scalar>* cur = &input;
    for (std::size_t l = 0; l < conv_layers.size(); ++l) {
      const auto& layer = conv_layers[l];
      if (cur->height != board_size || cur->width != board_size) {
        throw ShapeError("conv layer " + std::to_string(l) +
                         ": unexpected spatial size " +
                         std::to_string(cur->height));
      }
      if (layer.edge_pad) {
        ctx.padded[l] = pad_for_first_layer(*cur, layer.pad, encoding);
      } else {
        pad_zero(*cur, layer.pad, ctx.padded[l]);
      }
      conv_forward(layer, ctx.padded[l], ctx.preacts[l]);
      apply_activation(ctx.preacts[l], ctx.activations[l]);
      cur = &ctx.activations[l];
    }

    if (cur->channels != dense.in_channels || cur->height != board_size ||
        cur->width != board_size) {
      throw ShapeError("dense layer input shape mismatch");
    }
    dense_forward(*cur, ctx.logits);
  }

  /// Accumulates raw-weight gradients of -log p(target) into `grads`.
  /// Returns the loss. Gradient flows only through masked-in logits.
  Scalar backward(const Tensor<Scalar>& input,
                  std::span<const std::uint8_t> mask, int target,
                  GradientBuffer<Scalar>& grads,
                  ForwardContext<Scalar>& ctx) const {
    if (target < 0 || target >= points() || !mask[target]) {
      throw Error("backward: target is not masked-in");
    }
    forward_logits(input, ctx);
    std::vector<Scalar> probs = masked_softmax<Scalar>(ctx.logits, mask);
    Scalar loss = -std::log(std::max(
        probs[target], std::numeric_limits<Scalar>::denorm_min()));

    // d loss / d logit, exactly zero outside the mask.
    std::vector<Scalar> dlogits(probs.size(), Scalar(0));
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (mask[i]) dlogits[i] = probs[i];
    }
    dlogits[target] -= Scalar(1);

    const Tensor<Scalar>& dense_in =
        conv_layers.empty() ? input : ctx.activations.back();
    Tensor<Scalar> dcur(dense_in.channels, board_size, board_size);
    dense_backward(dense_in, dlogits, grads, dcur);

    for (int l = static_cast<int>(conv_layers.size()) - 1; l >= 0; --l) {
      const auto& layer = conv_layers[l];
      // Through the activation.
      Tensor<Scalar>& pre = ctx.preacts[l];
      for (std::size_t i = 0; i < dcur.data.size(); ++i) {
        dcur.data[i] *= activation_grad(pre.data[i]);
      }
      bool need_dx = l > 0;
      Tensor<Scalar> dprev;
      conv_backward(layer, ctx.padded[l], dcur, grads.conv[l],
                    need_dx ? &dprev : nullptr);
      if (need_dx) dcur = std::move(dprev);
    }
    return loss;
  }

  GradientBuffer<Scalar> make_gradient_buffer() const {
    GradientBuffer<Scalar> g;
    g.conv.resize(conv_layers.size());
    for (std::size_t l = 0; l < conv_layers.size(); ++l) {
      g.conv[l].weights.assign(conv_layers[l].weights.size(), Scalar(0));
      g.conv[l].bias.assign(conv_layers[l].bias.size(), Scalar(0));
    }
    g.dense_weights.assign(dense.weights.size(), Scalar(0));
    g.dense_bias.assign(dense.bias.size(), Scalar(0));
    return g;
  }

  /// Sums raw-weight gradients over each orbit's members: the exact
  /// derivative with respect to the shared parameters.
  OrbitGradients<Scalar> reduce_to_orbits(
      const GradientBuffer<Scalar>& grads) const {
    OrbitGradients<Scalar> out;
    out.conv.resize(conv_layers.size());
    for (std::size_t l = 0; l < conv_layers.size(); ++l) {
      const auto& layer = conv_layers[l];
      const int kk = layer.kernel * layer.kernel;
      const int orbit_count = layer.orbits.orbit_count();
      auto& dst = out.conv[l];
      dst.params.assign(layer.params.size(), Scalar(0));
      dst.bias = grads.conv[l].bias;
      for (int o = 0; o < layer.out_channels; ++o) {
        for (int i = 0; i < layer.in_channels; ++i) {
          const Scalar* g =
              grads.conv[l].weights.data() +
              (static_cast<std::size_t>(o) * layer.in_channels + i) * kk;
          Scalar* d = dst.params.data() +
                      (static_cast<std::size_t>(o) * layer.in_channels + i) *
                          orbit_count;
          for (int u = 0; u < kk; ++u) d[layer.orbits.orbit_of[u]] += g[u];
        }
      }
    }
    const std::size_t nn = static_cast<std::size_t>(board_size) * board_size;
    const std::size_t orbit_count = dense.pair_orbits.orbit_count();
    out.dense.params.assign(dense.params.size(), Scalar(0));
    out.dense.bias.assign(dense.bias_params.size(), Scalar(0));
    for (std::size_t p = 0; p < nn; ++p) {
      const std::int32_t* orbit_row =
          dense.pair_orbits.orbit_of.data() + p * nn;
      for (int c = 0; c < dense.in_channels; ++c) {
        const Scalar* g =
            grads.dense_weights.data() + (p * dense.in_channels + c) * nn;
        Scalar* d = out.dense.params.data() + c * orbit_count;
        for (std::size_t q = 0; q < nn; ++q) d[orbit_row[q]] += g[q];
      }
      out.dense.bias[dense.bias_orbits.orbit_of[p]] += grads.dense_bias[p];
    }
    return out;
  }

  /// params -= scale * orbit-reduced(raw grads); weight caches refreshed.
  void apply_gradients(const GradientBuffer<Scalar>& grads, Scalar scale) {
    OrbitGradients<Scalar> og = reduce_to_orbits(grads);
    for (std::size_t l = 0; l < conv_layers.size(); ++l) {
      auto& layer = conv_layers[l];
      for (std::size_t i = 0; i < layer.params.size(); ++i) {
        layer.params[i] -= scale * og.conv[l].params[i];
      }
      for (std::size_t i = 0; i < layer.bias.size(); ++i) {
        layer.bias[i] -= scale * og.conv[l].bias[i];
      }
    }
    for (std::size_t i = 0; i < dense.params.size(); ++i) {
      dense.params[i] -= scale * og.dense.params[i];
    }
    for (std::size_t i = 0; i < dense.bias_params.size(); ++i) {
      dense.bias_params[i] -= scale * og.dense.bias[i];
    }
    expand_all();
  }

  /// Flattened view of the free parameters, in the order used throughout:
  /// conv layers (params then bias) then dense (params then bias).
  std::vector<Scalar*> param_views() {
    std::vector<Scalar*> views;
    for (auto& l : conv_layers) {
      views.push_back(l.params.data());
      views.push_back(l.bias.data());
    }
    views.push_back(dense.params.data());
    views.push_back(dense.bias_params.data());
    return views;
  }

  std::vector<const Scalar*> param_views() const {
    std::vector<const Scalar*> views;
    for (const auto& l : conv_layers) {
      views.push_back(l.params.data());
      views.push_back(l.bias.data());
    }
    views.push_back(dense.params.data());
    views.push_back(dense.bias_params.data());
    return views;
  }

  std::vector<std::size_t> param_sizes() const {
    std::vector<std::size_t> sizes;
    for (const auto& l : conv_layers) {
      sizes.push_back(l.params.size());
      sizes.push_back(l.bias.size());
    }
    sizes.push_back(dense.params.size());
    sizes.push_back(dense.bias_params.size());
    return sizes;
  }

 private:
  Scalar activation_grad(Scalar pre) const {
    if (activation == Activation::Relu) {
      return pre > Scalar(0) ? Scalar(1) : Scalar(0);
    }
    Scalar t = std::tanh(pre);
    return Scalar(1) - t * t;
  }

  void apply_activation(const Tensor<Scalar>& pre,
                        Tensor<Scalar>& out) const {
    out.channels = pre.channels;
    out.height = pre.height;
    out.width = pre.width;
    out.data.resize(pre.data.size());
    if (activation == Activation::Relu) {
      for (std::size_t i = 0; i < pre.data.size(); ++i) {
        out.data[i] = std::max(Scalar(0), pre.data[i]);
      }
    } else {
      for (std::size_t i = 0; i < pre.data.size(); ++i) {
        out.data[i] = std::tanh(pre.data[i]);
      }
    }
  }

  static void pad_zero(const Tensor<Scalar>& t, int pad,
                       Tensor<Scalar>& out) {
    out.channels = t.channels;
    out.height = t.height + 2 * pad;
    out.width = t.width + 2 * pad;
    out.data.assign(static_cast<std::size_t>(out.channels) * out.height *
                        out.width,
                    Scalar(0));
    for (int c = 0; c < t.channels; ++c) {
      for (int y = 0; y < t.height; ++y) {
        const Scalar* src = t.channel(c) + static_cast<std::size_t>(y) * t.width;
        Scalar* dst = out.channel(c) +
                      (static_cast<std::size_t>(y + pad)) * out.width + pad;
        std::copy(src, src + t.width, dst);
      }
    }
  }

  // out[o][y][x] = bias[o] + sum_i sum_u K[o][i][u] * padded[i][y+dy][x+dx]
  void conv_forward(const ConvLayer<Scalar>& layer,
                    const Tensor<Scalar>& padded,
                    Tensor<Scalar>& out) const {
    const int n = board_size;
    const int k = layer.kernel;
    const int pw = padded.width;
    if (padded.channels != layer.in_channels ||
        padded.height != n + 2 * layer.pad || pw != n + 2 * layer.pad) {
      throw ShapeError("conv_forward: padded input shape mismatch");
    }
    out.channels = layer.out_channels;
    out.height = n;
    out.width = n;
    out.data.assign(static_cast<std::size_t>(layer.out_channels) * n * n,
                    Scalar(0));
    for (int o = 0; o < layer.out_channels; ++o) {
      Scalar* dst = out.channel(o);
      const Scalar b = layer.bias[o];
      for (int i = 0; i < n * n; ++i) dst[i] = b;
      for (int ic = 0; ic < layer.in_channels; ++ic) {
        const Scalar* w =
            layer.weights.data() +
            (static_cast<std::size_t>(o) * layer.in_channels + ic) * k * k;
        const Scalar* src = padded.channel(ic);
        for (int dy = 0; dy < k; ++dy) {
          for (int dx = 0; dx < k; ++dx) {
            const Scalar wv = w[dy * k + dx];
            if (wv == Scalar(0)) continue;
            for (int y = 0; y < n; ++y) {
              const Scalar* row = src + (y + dy) * pw + dx;
              Scalar* orow = dst + y * n;
              for (int x = 0; x < n; ++x) orow[x] += wv * row[x];
            }
          }
        }
      }
    }
  }

  // Accumulates dK and db; optionally produces dX (unpadded).
  void conv_backward(const ConvLayer<Scalar>& layer,
                     const Tensor<Scalar>& padded, const Tensor<Scalar>& dout,
                     typename GradientBuffer<Scalar>::ConvGrads& grads,
                     Tensor<Scalar>* dinput) const {
    const int n = board_size;
    const int k = layer.kernel;
    const int pw = padded.width;

    for (int o = 0; o < layer.out_channels; ++o) {
      const Scalar* dY = dout.channel(o);
      double db = 0;
      for (int i = 0; i < n * n; ++i) db += dY[i];
      grads.bias[o] += static_cast<Scalar>(db);
      for (int ic = 0; ic < layer.in_channels; ++ic) {
        Scalar* dW =
            grads.weights.data() +
            (static_cast<std::size_t>(o) * layer.in_channels + ic) * k * k;
        const Scalar* src = padded.channel(ic);
        for (int dy = 0; dy < k; ++dy) {
          for (int dx = 0; dx < k; ++dx) {
            double acc = 0;
            for (int y = 0; y < n; ++y) {
              const Scalar* row = src + (y + dy) * pw + dx;
              const Scalar* drow = dY + y * n;
              for (int x = 0; x < n; ++x) acc += drow[x] * row[x];
            }
            dW[dy * k + dx] += static_cast<Scalar>(acc);
          }
        }
      }
    }

    if (dinput) {
      // Accumulate into a padded buffer, then crop.
      Tensor<Scalar> dpad(layer.in_channels, n + 2 * layer.pad,
                          n + 2 * layer.pad);
      for (int o = 0; o < layer.out_channels; ++o) {
        const Scalar* dY = dout.channel(o);
        for (int ic = 0; ic < layer.in_channels; ++ic) {
          const Scalar* w =
              layer.weights.data() +
              (static_cast<std::size_t>(o) * layer.in_channels + ic) * k * k;
          Scalar* dst = dpad.channel(ic);
          for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) {
              const Scalar wv = w[dy * k + dx];
              if (wv == Scalar(0)) continue;
              for (int y = 0; y < n; ++y) {
                Scalar* row = dst + (y + dy) * pw + dx;
                const Scalar* drow = dY + y * n;
                for (int x = 0; x < n; ++x) row[x] += wv * drow[x];
              }
            }
          }
        }
      }
      dinput->channels = layer.in_channels;
      dinput->height = n;
      dinput->width = n;
      dinput->data.assign(static_cast<std::size_t>(layer.in_channels) * n * n,
                          Scalar(0));
      for (int ic = 0; ic < layer.in_channels; ++ic) {
        for (int y = 0; y < n; ++y) {
          const Scalar* src =
              dpad.channel(ic) + (static_cast<std::size_t>(y + layer.pad)) * pw +
              layer.pad;
          Scalar* dst = dinput->channel(ic) + static_cast<std::size_t>(y) * n;
          std::copy(src, src + n, dst);
        }
      }
    }
  }

  void dense_forward(const Tensor<Scalar>& in,
                     std::vector<Scalar>& logits) const {
    const std::size_t nn = static_cast<std::size_t>(board_size) * board_size;
    const std::size_t in_len = static_cast<std::size_t>(dense.in_channels) * nn;
    logits.assign(nn, Scalar(0));
    // in.data is [c][q] contiguous; weight rows are [c][q] per output p.
    for (std::size_t p = 0; p < nn; ++p) {
      const Scalar* w = dense.weights.data() + p * in_len;
      double acc = dense.bias[p];
      for (std::size_t i = 0; i < in_len; ++i) {
        acc += static_cast<double>(w[i]) * in.data[i];
      }
      logits[p] = static_cast<Scalar>(acc);
    }
  }

  void dense_backward(const Tensor<Scalar>& in,
                      const std::vector<Scalar>& dlogits,
                      GradientBuffer<Scalar>& grads,
                      Tensor<Scalar>& dinput) const {
    const std::size_t nn = static_cast<std::size_t>(board_size) * board_size;
    const std::size_t in_len = static_cast<std::size_t>(dense.in_channels) * nn;
    std::fill(dinput.data.begin(), dinput.data.end(), Scalar(0));
    for (std::size_t p = 0; p < nn; ++p) {
      const Scalar d = dlogits[p];
      grads.dense_bias[p] += d;
      if (d == Scalar(0)) continue;
      const Scalar* w = dense.weights.data() + p * in_len;
      Scalar* dW = grads.dense_weights.data() + p * in_len;
      for (std::size_t i = 0; i < in_len; ++i) {
        dW[i] += d * in.data[i];
        dinput.data[i] += d * w[i];
      }
    }
  }
};

/// Layer weights expanded then re-averaged over each orbit: the identity
/// on weights that already satisfy the tying constraints.
template <typename Scalar>
std::vector<Scalar> project_to_orbits(const OrbitMap& map,
                                      std::span<const Scalar> raw) {
  std::vector<Scalar> out(map.orbit_count(), Scalar(0));
  for (int o = 0; o < map.orbit_count(); ++o) {
    Scalar sum = 0;
    for (std::int32_t idx : map.orbit_members[o]) sum += raw[idx];
    out[o] = sum / static_cast<Scalar>(map.orbit_members[o].size());
  }
  return out;
}

}  // namespace tesuji
