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

#include <cmath>

#include "mpelu/errors.hpp"
#include "mpelu/init.hpp"
#include "mpelu/layers.hpp"
#include "mpelu/models.hpp"
#include "oracles.hpp"

using namespace mpelu;

namespace {

FanInfo fan3x64() { return FanInfo{3, 64, 64, FanMode::FanIn}; }

double sample_std(const Tensor& t) { return std::sqrt(moments(t).variance); }

Conv2d& conv_at(NetworkGraph& net, int i) {
  return dynamic_cast<Conv2d&>(*net.node(i).layer);
}

}  // namespace

TEST_CASE("fan modes") {
  FanInfo f{3, 16, 32, FanMode::FanIn};
  CHECK(f.fan() == 144.0);
  f.mode = FanMode::FanOut;
  CHECK(f.fan() == 288.0);
  f.mode = FanMode::Average;
  CHECK(f.fan() == 216.0);
  CHECK(parse_fan_mode("fan_out") == FanMode::FanOut);
  CHECK_THROWS_AS(parse_fan_mode("sideways"), InvalidArgument);
  CHECK_THROWS_AS((FanInfo{0, 1, 1}.validate()), InvalidArgument);
}

TEST_CASE("taylor std closed forms") {
  CHECK(taylor_std(fan3x64(), 0.0, 1.0) == doctest::Approx(std::sqrt(2.0 / 576.0)).epsilon(1e-15));
  CHECK(std::abs(taylor_std(fan3x64(), 1.0, 1.0) - 1.0 / 24.0) < 1e-12);
  CHECK(taylor_std(fan3x64(), 0.25, 1.0) ==
        doctest::Approx(std::sqrt(2.0 / (576.0 * 1.0625))).epsilon(1e-15));
  CHECK(taylor_std(fan3x64(), 0.25, 1.0) == doctest::Approx(0.057166).epsilon(1e-5));
  CHECK_THROWS_AS(taylor_std(fan3x64(), -1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(taylor_std(fan3x64(), 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(taylor_std(FanInfo{3, 0, 1}, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("taylor collapses onto msra") {
  for (double beta : {1e-3, 0.5, 1.0, 7.0})
    CHECK(taylor_std(fan3x64(), 0.0, beta) == msra_std(fan3x64(), 0.0));
  // The negative-side slope at the origin is alpha * beta, so the Taylor
  // rule is MSRA with that slope.
  for (double a : {0.1, 0.25, 1.0, 3.0})
    for (double beta : {1e-4, 0.01, 0.5, 2.0})
      CHECK(taylor_std(fan3x64(), a, beta) ==
            doctest::Approx(msra_std(fan3x64(), a * beta)).epsilon(1e-14));
  CHECK(xavier_std(FanInfo{3, 16, 32}) == doctest::Approx(std::sqrt(1.0 / 216.0)));
}

TEST_CASE("init method parsing") {
  CHECK(init_name(parse_init("gaussian")) == "gaussian:0.01");
  CHECK(std::get<GaussianInit>(parse_init("gaussian:0.5")).std == 0.5);
  CHECK(std::get<MsraInit>(parse_init("msra:0.25")).slope == 0.25);
  CHECK(std::holds_alternative<TaylorInit>(parse_init("taylor")));
  CHECK(std::holds_alternative<XavierInit>(parse_init("xavier")));
  CHECK(std::get<LsuvInit>(parse_init("lsuv:0.05")).tol == 0.05);
  CHECK_THROWS_AS(parse_init("lsuv:0"), InvalidArgument);
  CHECK_THROWS_AS(parse_init("zeros"), InvalidArgument);
}

TEST_CASE("init_network hits target stds") {
  PlainOptions po;
  po.alpha0 = 1.0;
  po.classes = 10;
  NetworkGraph net = build_plain_stack(4, 64, ActivationKind::mpelu(), po);
  Rng rng(1);
  const auto recs = init_network(net, TaylorInit{}, rng);
  REQUIRE(recs.size() == 5);
  for (const auto& r : recs) {
    auto* conv = dynamic_cast<Conv2d*>(net.node(r.node).layer.get());
    if (!conv || conv->weight().value.numel() < 10000) continue;
    CHECK(sample_std(conv->weight().value) == doctest::Approx(r.std).epsilon(0.02));
    CHECK(r.std == doctest::Approx(taylor_std(fan_of(net, r.node, FanMode::FanIn),
                                              1.0, 1.0)));
  }
  // The classifier feeds no activation and is treated as linear.
  CHECK(recs.back().alpha0 == 0.0);

  NetworkGraph g = build_plain_stack(3, 64, ActivationKind::relu());
  Rng r2(2);
  init_network(g, GaussianInit{0.01}, r2);
  for (int i = 0; i < static_cast<int>(g.size()); ++i)
    if (auto* c = dynamic_cast<Conv2d*>(g.node(i).layer.get()))
      if (c->weight().value.numel() >= 10000)
        CHECK(sample_std(c->weight().value) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("init is deterministic and resets the other layers") {
  NetworkGraph a = build_resnet(20, BlockVariant::MpeluNonBottleneck);
  NetworkGraph b = build_resnet(20, BlockVariant::MpeluNonBottleneck);
  Rng ra(5), rb(5);
  init_network(a, MsraInit{0.0}, ra);
  auto pa = a.params();
  pa[3].param->value.fill(9.0);
  ra = Rng(5);
  init_network(a, MsraInit{0.0}, ra);
  init_network(b, MsraInit{0.0}, rb);
  auto pb = b.params();
  pa = a.params();
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i].param->value == pb[i].param->value);
}

TEST_CASE("taylor reads the consuming activation through bn and sums") {
  ModelOptions o;
  o.alpha0 = 0.5;
  o.beta0 = 2.0;
  NetworkGraph net = build_resnet(20, BlockVariant::MpeluNonBottleneck, o);
  const int stem = net.find("stem.conv");
  REQUIRE(stem >= 0);
  const auto [a, b] = consuming_activation_params(net, stem);
  CHECK(a == 0.5);
  CHECK(b == 2.0);
  const int fc = net.find("head.fc");
  CHECK(consuming_activation_params(net, fc).first == 0.0);
}

TEST_CASE("lsuv") {
  PlainOptions po;
  po.alpha0 = 1.0;
  NetworkGraph net = build_plain_stack(10, 16, ActivationKind::mpelu(), po);
  Rng rng(7);
  init_network(net, GaussianInit{0.01}, rng);
  const Tensor probe = oracle::random({32, 3, 8, 8}, 8);
  const auto rep = lsuv_init(net, probe, 0.1, 10, true, &rng);
  REQUIRE(rep.layers.size() == 10);
  for (const auto& l : rep.layers) {
    CHECK(l.converged);
    CHECK(std::abs(l.variance - 1.0) <= 0.1);
  }

  // A single layer whose output already has unit variance needs no rescale.
  NetworkGraph one;
  one.add("conv", std::make_unique<Conv2d>(1, 1, 1, 1, 0, false), NetworkGraph::kGraphInput);
  conv_at(one, 0).weight().value.fill(1.0);
  const Tensor unit = oracle::random({64, 1, 16, 16}, 9);
  const double v0 = moments(unit).variance;
  conv_at(one, 0).weight().value.fill(1.0 / std::sqrt(v0));
  CHECK(lsuv_init(one, unit, 0.1, 10).layers[0].iterations == 0);
  // Output variance 4 is fixed by one rescale by 1/2.
  conv_at(one, 0).weight().value.fill(2.0 / std::sqrt(v0));
  const auto r4 = lsuv_init(one, unit, 0.1, 10);
  CHECK(r4.layers[0].iterations == 1);
  CHECK(conv_at(one, 0).weight().value[0] == doctest::Approx(1.0 / std::sqrt(v0)));

  conv_at(one, 0).weight().value.fill(0.0);
  CHECK_THROWS_AS(lsuv_init(one, unit, 0.1, 10), SingularInitError);
}

TEST_CASE("orthonormal fill gives orthonormal rows") {
  Tensor w({8, 4, 3, 3});
  Rng rng(3);
  orthonormal_fill(w, rng);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 36; ++k) s += w[i * 36 + k] * w[j * 36 + k];
      CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
    }
}
