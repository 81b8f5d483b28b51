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

#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "tesuji/net.hpp"
#include "test_util.hpp"

using namespace tesuji;
using namespace tesuji::testutil;

namespace {

Network<float> small_net(const EncodingConfig& cfg, bool tied,
                         std::uint64_t seed,
                         Activation act = Activation::Relu) {
  std::vector<Network<float>::ConvSpec> convs = {{4, 3}, {4, 3}};
  auto net = Network<float>::make(19, cfg, convs, tied, true, act);
  randomize_params(net, seed, 0.1);
  return net;
}

}  // namespace

TEST_CASE("masked softmax frozen examples") {
  SECTION("uniform over two legal entries") {
    std::vector<float> logits = {0.0f, 0.0f};
    std::vector<std::uint8_t> mask = {1, 1};
    auto p = masked_softmax<float>(logits, mask);
    CHECK(p[0] == Catch::Approx(0.5));
    CHECK(p[1] == Catch::Approx(0.5));
  }
  SECTION("single legal entry takes all mass regardless of logits") {
    std::vector<float> logits = {-100.0f, 3.5f};
    std::vector<std::uint8_t> mask = {1, 0};
    auto p = masked_softmax<float>(logits, mask);
    CHECK(p[0] == 1.0f);
    CHECK(p[1] == 0.0f);
  }
  SECTION("log-odds example") {
    std::vector<float> logits = {std::log(1.0f), std::log(3.0f)};
    std::vector<std::uint8_t> mask = {1, 1};
    auto p = masked_softmax<float>(logits, mask);
    CHECK(p[0] == Catch::Approx(0.25).margin(1e-6));
    CHECK(p[1] == Catch::Approx(0.75).margin(1e-6));
  }
  SECTION("empty mask is an error") {
    std::vector<float> logits = {1.0f, 2.0f};
    std::vector<std::uint8_t> mask = {0, 0};
    CHECK_THROWS_AS(masked_softmax<float>(logits, mask), Error);
  }
}

TEST_CASE("masked softmax fuzz: exact zeros, unit mass, shift invariance") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(uniform_below(rng, 400));
    std::vector<float> logits(n);
    std::vector<std::uint8_t> mask(n, 0);
    for (auto& l : logits) {
      l = static_cast<float>((static_cast<double>(rng() >> 11) /
                                  9007199254740992.0 -
                              0.5) *
                             40.0);
    }
    int legal = 0;
    for (auto& m : mask) legal += (m = uniform_below(rng, 2));
    if (legal == 0) mask[uniform_below(rng, n)] = 1;

    auto p = masked_softmax<float>(logits, mask);
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      if (!mask[i]) {
        REQUIRE(p[i] == 0.0f);  // exact zero, not just small
      } else {
        REQUIRE(p[i] >= 0.0f);
        sum += p[i];
      }
    }
    REQUIRE(std::abs(sum - 1.0) < 1e-6);

    const float shift = 7.25f;
    std::vector<float> shifted = logits;
    for (auto& l : shifted) l += shift;
    auto q = masked_softmax<float>(shifted, mask);
    for (int i = 0; i < n; ++i) {
      REQUIRE(std::abs(static_cast<double>(q[i]) - p[i]) < 1e-6);
    }
  }
}

TEST_CASE("masked softmax is stable under extreme logits") {
  std::vector<float> logits = {1e4f, -1e4f, 0.0f};
  std::vector<std::uint8_t> mask = {1, 1, 1};
  auto p = masked_softmax<float>(logits, mask);
  CHECK(p[0] == Catch::Approx(1.0));
  CHECK(std::isfinite(p[1]));
  CHECK(std::isfinite(p[2]));
}

TEST_CASE("conv layer: 1x1 unit filter passes the channel sum through") {
  EncodingConfig cfg{false, false, false};  // 2 channels
  std::vector<Network<float>::ConvSpec> convs = {{1, 1}};
  auto net = Network<float>::make(19, cfg, convs, true, true,
                                  Activation::Relu);
  // One output channel, two inputs, kernel 1x1, single orbit each.
  REQUIRE(net.conv_layers[0].params.size() == 2);
  net.conv_layers[0].params = {1.0f, 1.0f};
  net.expand_all();

  Board b = random_board(19, 30, 5);
  Tensor<float> x = encode<float>(b, cfg);
  ForwardContext<float> ctx;
  net.forward_logits(x, ctx);
  const Tensor<float>& act = ctx.activations[0];
  for (int idx = 0; idx < 361; ++idx) {
    float expected = x.channel(0)[idx] + x.channel(1)[idx];
    CHECK(act.channel(0)[idx] == Catch::Approx(expected));
  }
}

TEST_CASE("conv layer: zero weights produce bias-only pre-activations") {
  EncodingConfig cfg{false, false, false};
  std::vector<Network<float>::ConvSpec> convs = {{3, 5}};
  auto net = Network<float>::make(19, cfg, convs, true, true,
                                  Activation::Relu);
  net.conv_layers[0].bias = {0.25f, -1.0f, 0.0f};
  net.expand_all();
  Board b = random_board(19, 40, 6);
  ForwardContext<float> ctx;
  net.forward_logits(encode<float>(b, cfg), ctx);
  for (int o = 0; o < 3; ++o) {
    for (int idx = 0; idx < 361; ++idx) {
      CHECK(ctx.preacts[0].channel(o)[idx] == net.conv_layers[0].bias[o]);
    }
  }
}

TEST_CASE("tied conv layers are reflection-equivariant") {
  EncodingConfig cfg{true, true, false};
  std::vector<Network<float>::ConvSpec> convs = {{5, 5}};
  auto net = Network<float>::make(19, cfg, convs, true, true,
                                  Activation::Relu);
  randomize_params(net, 21, 0.1);

  Board b = random_board(19, 55, 22);
  Tensor<float> x = encode<float>(b, cfg);
  ForwardContext<float> ctx;
  net.forward_logits(x, ctx);
  Tensor<float> base = ctx.activations[0];

  for (Transform g : all_transforms()) {
    ForwardContext<float> gctx;
    net.forward_logits(reflect_tensor(x, g), gctx);
    Tensor<float> expected = reflect_tensor(base, g);
    double dev = 0;
    for (std::size_t i = 0; i < expected.data.size(); ++i) {
      dev = std::max<double>(dev, std::abs(gctx.activations[0].data[i] -
                                           expected.data[i]));
    }
    CHECK(dev <= 1e-5);
  }
}

TEST_CASE("tied networks are equivariant end to end") {
  for (const auto& cfg :
       {EncodingConfig{true, true, true}, EncodingConfig{false, true, false},
        EncodingConfig{true, true, false}}) {
    for (Activation act : {Activation::Relu, Activation::Tanh}) {
      auto net = small_net(cfg, true, 31 + cfg.channels(), act);
      double worst = 0;
      for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Board b = random_board(19, 20 + 10 * (seed % 5), 800 + seed);
        worst = std::max(worst, equivariance_deviation(net, b));
      }
      CAPTURE(cfg.channels(), activation_name(act));
      CHECK(worst <= 1e-4);
    }
  }
}

TEST_CASE("untied networks break equivariance") {
  auto net = small_net(EncodingConfig{true, true, true}, false, 91);
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Board b = random_board(19, 40, 900 + seed);
    worst = std::max(worst, equivariance_deviation(net, b));
  }
  CHECK(worst > 1e-3);
}

TEST_CASE("forward contract: single legal point and uniform logits") {
  auto net = small_net(EncodingConfig{true, true, true}, true, 13);
  Board b = random_board(19, 25, 14);
  Tensor<float> x = encode<float>(b, net.encoding);

  std::vector<std::uint8_t> one(361, 0);
  one[42] = 1;
  auto p = net.forward(x, one);
  CHECK(p[42] == 1.0f);
  for (int i = 0; i < 361; ++i) {
    if (i != 42) CHECK(p[i] == 0.0f);
  }

  // Zero parameters -> uniform logits -> 1/361 over a full mask.
  auto zero_net = Network<float>::make(
      19, net.encoding, std::vector<Network<float>::ConvSpec>{{4, 3}}, true,
      true, Activation::Relu);
  std::vector<std::uint8_t> all(361, 1);
  auto q = zero_net.forward(x, all);
  for (int i = 0; i < 361; ++i) {
    CHECK(q[i] == Catch::Approx(1.0 / 361).epsilon(1e-6));
  }

  std::vector<std::uint8_t> none(361, 0);
  CHECK_THROWS_AS(net.forward(x, none), Error);
}

TEST_CASE("forward rejects mismatched channel counts") {
  auto net = small_net(EncodingConfig{true, true, true}, true, 15);
  Tensor<float> bad(3, 19, 19);
  std::vector<std::uint8_t> mask(361, 1);
  CHECK_THROWS_AS(net.forward(bad, mask), ShapeError);
}

TEST_CASE("backward: perfect prediction gives zero loss and zero gradient") {
  auto net = small_net(EncodingConfig{true, true, true}, true, 16);
  Board b = random_board(19, 20, 17);
  Tensor<float> x = encode<float>(b, net.encoding);
  std::vector<std::uint8_t> mask(361, 0);
  mask[100] = 1;  // single legal point: probability 1 exactly

  auto grads = net.make_gradient_buffer();
  ForwardContext<float> ctx;
  float loss = net.backward(x, mask, 100, grads, ctx);
  CHECK(loss == 0.0f);
  auto orbit = net.reduce_to_orbits(grads);
  for (const auto& layer : orbit.conv) {
    for (float g : layer.params) CHECK(g == 0.0f);
    for (float g : layer.bias) CHECK(g == 0.0f);
  }
  for (float g : orbit.dense.params) CHECK(g == 0.0f);
  for (float g : orbit.dense.bias) CHECK(g == 0.0f);
}

TEST_CASE("backward: no gradient flows through masked-out logits") {
  auto net = small_net(EncodingConfig{true, true, true}, true, 18);
  Board b = random_board(19, 30, 19);
  Tensor<float> x = encode<float>(b, net.encoding);
  std::vector<std::uint8_t> mask(361, 0);
  for (int i = 0; i < 361; i += 3) mask[i] = 1;

  auto grads = net.make_gradient_buffer();
  ForwardContext<float> ctx;
  net.backward(x, mask, 0, grads, ctx);
  // d loss / d logit_p lands in the raw dense bias gradient untouched;
  // masked-out entries must be exactly zero.
  for (int p = 0; p < 361; ++p) {
    if (!mask[p]) CHECK(grads.dense_bias[p] == 0.0f);
  }

  CHECK_THROWS_AS(net.backward(x, mask, 1, grads, ctx), Error);  // masked out
}

TEST_CASE("tying flag controls the parameter layout") {
  EncodingConfig cfg{true, true, true};
  std::vector<Network<float>::ConvSpec> convs = {{8, 7}};
  auto tied = Network<float>::make(19, cfg, convs, true, true,
                                   Activation::Relu);
  auto untied = Network<float>::make(19, cfg, convs, false, true,
                                     Activation::Relu);

  // 7x7 filters: 10 free spatial parameters per channel pair when tied,
  // 49 untied.
  CHECK(tied.conv_layers[0].orbits.orbit_count() == 10);
  CHECK(untied.conv_layers[0].orbits.orbit_count() == 49);
  CHECK(tied.conv_layers[0].params.size() == 8u * cfg.channels() * 10);
  CHECK(untied.conv_layers[0].params.size() == 8u * cfg.channels() * 49);

  CHECK(untied.param_count() == tied.raw_param_count());
  CHECK(tied.param_count() * 7 <= untied.param_count());
}

TEST_CASE("expanding then re-projecting tied parameters is the identity") {
  auto net = small_net(EncodingConfig{true, true, false}, true, 23);
  for (const auto& layer : net.conv_layers) {
    const int kk = layer.kernel * layer.kernel;
    for (int o = 0; o < layer.out_channels; ++o) {
      for (int i = 0; i < layer.in_channels; ++i) {
        std::span<const float> raw(
            layer.weights.data() +
                (static_cast<std::size_t>(o) * layer.in_channels + i) * kk,
            kk);
        auto projected = project_to_orbits(layer.orbits, raw);
        std::span<const float> params(
            layer.params.data() + (static_cast<std::size_t>(o) *
                                   layer.in_channels + i) *
                                      layer.orbits.orbit_count(),
            layer.orbits.orbit_count());
        for (int u = 0; u < layer.orbits.orbit_count(); ++u) {
          CHECK(projected[u] == params[u]);  // exact: orbit sizes are 1,2,4,8
        }
      }
    }
  }

  // Expanded weights satisfy the tying constraint F[g.u] = F[u].
  const auto& layer = net.conv_layers[0];
  const int k = layer.kernel;
  for (Transform g : all_transforms()) {
    for (int u = 0; u < k * k; ++u) {
      int gu = apply_transform_index(g, u, k);
      CHECK(layer.weights[u] == layer.weights[gu]);
    }
  }
}

TEST_CASE("expanded dense weights satisfy the diagonal tying constraint") {
  auto net = Network<float>::make(
      5, EncodingConfig{false, false, false},
      std::vector<Network<float>::ConvSpec>{}, true, true, Activation::Relu);
  randomize_params(net, 29, 0.2);
  const int nn = 25;
  for (Transform g : all_transforms()) {
    for (int p = 0; p < nn; ++p) {
      int gp = apply_transform_index(g, p, 5);
      CHECK(net.dense.bias[p] == net.dense.bias[gp]);
      for (int c = 0; c < net.dense.in_channels; ++c) {
        for (int q = 0; q < nn; ++q) {
          int gq = apply_transform_index(g, q, 5);
          float w = net.dense.weights[(static_cast<std::size_t>(p) *
                                       net.dense.in_channels + c) * nn + q];
          float gw = net.dense.weights[(static_cast<std::size_t>(gp) *
                                        net.dense.in_channels + c) * nn + gq];
          CHECK(w == gw);
        }
      }
    }
  }
}
