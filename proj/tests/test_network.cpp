// Copyright 2026 The mpelu-kernels Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include "mpelu/analysis.hpp"
#include "mpelu/errors.hpp"
#include "mpelu/init.hpp"
#include "mpelu/layers.hpp"
#include "mpelu/models.hpp"
#include "oracles.hpp"

using namespace mpelu;

namespace {

NetworkGraph residual_toy() {
  NetworkGraph net;
  const int in = NetworkGraph::kGraphInput;
  const int c1 = net.add("c1", std::make_unique<Conv2d>(2, 2, 3, 1, 1, true), in);
  const int a1 = net.add("a1", std::make_unique<ActivationLayer>(ActivationKind::mpelu(), 2), c1);
  const int s = net.add_sum("sum", a1, in);
  net.add("pool", std::make_unique<GlobalAvgPool>(), s);
  return net;
}

}  // namespace

TEST_CASE("graph construction errors") {
  NetworkGraph net;
  CHECK_THROWS_AS(net.add("x", nullptr, NetworkGraph::kGraphInput), InvalidArgument);
  CHECK_THROWS_AS(net.add("x", std::make_unique<GlobalAvgPool>(), 3), InvalidArgument);
  net.add("x", std::make_unique<GlobalAvgPool>(), NetworkGraph::kGraphInput);
  CHECK_THROWS_AS(net.add("x", std::make_unique<GlobalAvgPool>(), 0), InvalidArgument);
  CHECK_THROWS_AS(net.add_sum("s", 0, 5), InvalidArgument);
  CHECK(net.find("x") == 0);
  CHECK(net.find("nope") == -1);
}

TEST_CASE("sum of mismatched shapes is rejected") {
  NetworkGraph net;
  const int c = net.add("c", std::make_unique<Conv2d>(2, 3, 1, 1, 0, false),
                        NetworkGraph::kGraphInput);
  net.add_sum("s", c, NetworkGraph::kGraphInput);
  CHECK_THROWS_AS(net.forward(Tensor({1, 2, 2, 2}), Phase::Train), InvalidArgument);
  CHECK_THROWS_AS(net.infer_shapes({1, 2, 2, 2}), InvalidArgument);
}

TEST_CASE("shortcut gradients accumulate") {
  NetworkGraph net = residual_toy();
  Rng rng(1);
  init_network(net, TaylorInit{}, rng);
  Tensor x = oracle::random({2, 2, 4, 4}, 2);
  oracle::clear_band(x);
  GradCheckOptions o;
  o.seed = 3;
  const auto r = grad_check(net, x, o);
  INFO(r.table());
  CHECK(r.max_rel_error() < 1e-6);
  CHECK(net.consumers(NetworkGraph::kGraphInput) == std::vector<int>{0, 2});
}

TEST_CASE("describe and shapes") {
  NetworkGraph net = residual_toy();
  const auto lines = net.describe();
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].find("c1") != std::string::npos);
  const auto shapes = net.infer_shapes({5, 2, 4, 4});
  CHECK(shapes.back() == Shape{5, 2});
  CHECK(net.param_count() == 2 * 2 * 9 + 2 + 4);
  int calls = 0;
  net.forward(Tensor({1, 2, 4, 4}), Phase::Train, [&](int, const Tensor&) { ++calls; });
  CHECK(calls == 4);
  NetworkGraph empty;
  CHECK(empty.forward(Tensor::from({2.0}), Phase::Train) == Tensor::from({2.0}));
  NetworkGraph fresh = residual_toy();
  CHECK_THROWS_AS(fresh.backward(Tensor({1, 2})), StateError);
}

TEST_CASE("every block variant passes a finite-difference check") {
  for (BlockVariant v : kAllBlockVariants)
    for (std::size_t stride : {1, 2}) {
      CAPTURE(to_string(v));
      CAPTURE(stride);
      const std::size_t width = 3;
      const std::size_t out = is_bottleneck(v) ? 4 * width : width;
      const std::size_t in = stride == 1 ? out : 2;
      ModelOptions o;
      o.alpha0 = 0.8;
      o.beta0 = 1.3;
      NetworkGraph net;
      append_block(net, "b", NetworkGraph::kGraphInput, in, width, stride, v, o);
      Rng rng(4);
      init_network(net, TaylorInit{}, rng);
      Tensor x = oracle::random({3, in, 5, 5}, 5);
      oracle::clear_band(x);
      GradCheckOptions g;
      g.seed = 6;
      const auto r = grad_check(net, x, g);
      INFO(r.table());
      CHECK(r.max_rel_error() < 1e-5);
    }
}
