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

// Central finite differences in double precision against the analytic
// orbit-parameter gradients, on toy nets over a 5x5 board.

#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "tesuji/net.hpp"
#include "test_util.hpp"

using namespace tesuji;
using namespace tesuji::testutil;

namespace {

double loss_of(const Network<double>& net, const Tensor<double>& x,
               const std::vector<std::uint8_t>& mask, int target) {
  auto probs = net.forward(x, mask);
  return -std::log(probs[target]);
}

struct GradReport {
  double max_rel_err = 0;
  int checked = 0;
};

// Flattens analytic orbit gradients in param_views order.
std::vector<std::vector<double>> analytic_gradients(
    Network<double>& net, const Tensor<double>& x,
    const std::vector<std::uint8_t>& mask, int target) {
  auto grads = net.make_gradient_buffer();
  ForwardContext<double> ctx;
  net.backward(x, mask, target, grads, ctx);
  auto orbit = net.reduce_to_orbits(grads);
  std::vector<std::vector<double>> flat;
  for (auto& l : orbit.conv) {
    flat.push_back(l.params);
    flat.push_back(l.bias);
  }
  flat.push_back(orbit.dense.params);
  flat.push_back(orbit.dense.bias);
  return flat;
}

GradReport check_gradients(Network<double>& net, const Tensor<double>& x,
                           const std::vector<std::uint8_t>& mask, int target,
                           double h = 1e-6) {
  auto analytic = analytic_gradients(net, x, mask, target);
  auto views = net.param_views();
  auto sizes = net.param_sizes();
  REQUIRE(analytic.size() == views.size());

  GradReport report;
  for (std::size_t v = 0; v < views.size(); ++v) {
    REQUIRE(analytic[v].size() == sizes[v]);
    for (std::size_t i = 0; i < sizes[v]; ++i) {
      const double saved = views[v][i];
      views[v][i] = saved + h;
      net.expand_all();
      double plus = loss_of(net, x, mask, target);
      views[v][i] = saved - h;
      net.expand_all();
      double minus = loss_of(net, x, mask, target);
      views[v][i] = saved;
      net.expand_all();

      double numeric = (plus - minus) / (2 * h);
      double a = analytic[v][i];
      double rel = std::abs(a - numeric) /
                   std::max({std::abs(a), std::abs(numeric), 1e-8});
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.checked;
    }
  }
  return report;
}

Network<double> toy_net(bool tied, Activation act, bool edge_channel,
                        std::uint64_t seed) {
  EncodingConfig cfg{false, false, edge_channel};
  std::vector<Network<double>::ConvSpec> convs = {{3, 3}};
  auto net = Network<double>::make(5, cfg, convs, tied, true, act);
  randomize_params(net, seed, 0.05);
  return net;
}

// ReLU is only differentiable away from zero pre-activations; keep the
// check honest by verifying the chosen seed stays clear of the kinks.
double min_abs_preactivation(const Network<double>& net,
                             const Tensor<double>& x) {
  ForwardContext<double> ctx;
  net.forward_logits(x, ctx);
  double lowest = 1e9;
  for (const auto& pre : ctx.preacts) {
    for (double v : pre.data) lowest = std::min(lowest, std::abs(v));
  }
  return lowest;
}

}  // namespace

TEST_CASE("gradients match finite differences on the tied toy net") {
  for (std::uint64_t seed : {101ULL, 102ULL}) {
    auto net = toy_net(true, Activation::Relu, false, seed);
    auto ex = synthetic_example(net, seed * 7 + 1);
    REQUIRE(min_abs_preactivation(net, ex.input) > 1e-4);
    auto report = check_gradients(net, ex.input, ex.mask, ex.target);
    CAPTURE(seed, report.checked);
    CHECK(report.checked >= 300);
    CHECK(report.max_rel_err <= 1e-5);
  }
}

TEST_CASE("gradients match finite differences with tanh") {
  auto net = toy_net(true, Activation::Tanh, false, 201);
  auto ex = synthetic_example(net, 202);
  auto report = check_gradients(net, ex.input, ex.mask, ex.target);
  CHECK(report.max_rel_err <= 1e-5);
}

TEST_CASE("gradients match finite differences on the untied toy net") {
  auto net = toy_net(false, Activation::Relu, false, 301);
  auto ex = synthetic_example(net, 302);
  REQUIRE(min_abs_preactivation(net, ex.input) > 1e-4);
  auto report = check_gradients(net, ex.input, ex.mask, ex.target);
  CHECK(report.max_rel_err <= 1e-5);
}

TEST_CASE("gradients match finite differences with the edge channel") {
  auto net = toy_net(true, Activation::Relu, true, 401);
  auto ex = synthetic_example(net, 402);
  REQUIRE(min_abs_preactivation(net, ex.input) > 1e-4);
  auto report = check_gradients(net, ex.input, ex.mask, ex.target);
  CHECK(report.max_rel_err <= 1e-5);
}

TEST_CASE("gradients match finite differences under a full mask") {
  auto net = toy_net(true, Activation::Relu, false, 501);
  auto ex = synthetic_example(net, 502, /*full_mask=*/true);
  REQUIRE(min_abs_preactivation(net, ex.input) > 1e-4);
  auto report = check_gradients(net, ex.input, ex.mask, ex.target);
  CHECK(report.max_rel_err <= 1e-5);
}

TEST_CASE("gradients match on a deeper tied stack") {
  EncodingConfig cfg{false, false, true};
  std::vector<Network<double>::ConvSpec> convs = {{3, 3}, {2, 5}};
  auto net = Network<double>::make(5, cfg, convs, true, true,
                                   Activation::Tanh);
  randomize_params(net, 601, 0.05);
  auto ex = synthetic_example(net, 602);
  auto report = check_gradients(net, ex.input, ex.mask, ex.target);
  CHECK(report.max_rel_err <= 1e-5);
}
