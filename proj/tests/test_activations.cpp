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

#include "mpelu/activations.hpp"
#include "mpelu/analysis.hpp"
#include "mpelu/errors.hpp"
#include "oracles.hpp"

using namespace mpelu;

namespace {

ActivationLayerState mpelu_state(std::size_t channels, ParamMode mode,
                                 double alpha, double beta) {
  return ActivationLayerState::make(ActivationType::MPELU, mode, channels,
                                    alpha, beta);
}

const double kInvE = std::exp(-1.0);

}  // namespace

TEST_CASE("mpelu forward values") {
  CHECK(mpelu_value(0.0, 1, 1) == 0.0);
  CHECK(mpelu_value(2.0, 1, 1) == 2.0);
  CHECK(mpelu_value(-1.0, 1, 1) == doctest::Approx(-0.6321205588285577).epsilon(1e-15));
  CHECK(mpelu_value(-1.0, 25.6302, 0.01) == doctest::Approx(-0.2550).epsilon(1e-3));
  auto s = mpelu_state(1, ParamMode::ChannelShared, 1, 1);
  const Tensor out = mpelu_forward(Tensor({1, 1, 1, 3}, {-1.0, 0.0, 2.0}), s);
  CHECK(out[0] == mpelu_value(-1.0, 1, 1));
  CHECK(out[2] == 2.0);
  CHECK(s.has_saved_output);
}

TEST_CASE("mpelu backward closed forms") {
  auto s = mpelu_state(1, ParamMode::ChannelShared, 1, 1);
  const Tensor y({1, 1, 1, 1}, {-1.0});
  mpelu_forward(y, s);
  const auto g = mpelu_backward(s, y, Tensor({1, 1, 1, 1}, {1.0}));
  CHECK(g.d_alpha[0] == doctest::Approx(kInvE - 1.0).epsilon(1e-14));
  CHECK(g.d_beta[0] == doctest::Approx(-kInvE).epsilon(1e-14));
  CHECK(g.grad_in[0] == doctest::Approx(kInvE).epsilon(1e-14));

  const Tensor pos({1, 1, 1, 1}, {3.0});
  auto s2 = mpelu_state(1, ParamMode::ChannelShared, 0.7, 2.0);
  mpelu_forward(pos, s2);
  const auto g2 = mpelu_backward(s2, pos, Tensor({1, 1, 1, 1}, {1.0}));
  CHECK(g2.grad_in[0] == 1.0);
  CHECK(g2.d_alpha[0] == 0.0);
  CHECK(g2.d_beta[0] == 0.0);

  const Tensor two({1, 2, 1, 1}, {-1.0, -1.0});
  auto s3 = mpelu_state(2, ParamMode::ChannelShared, 1, 1);
  mpelu_forward(two, s3);
  const auto g3 = mpelu_backward(s3, two, Tensor({1, 2, 1, 1}, {1.0, 1.0}));
  CHECK(g3.d_alpha[0] == doctest::Approx(2.0 * (kInvE - 1.0)).epsilon(1e-14));
}

TEST_CASE("mpelu errors") {
  auto s = mpelu_state(3, ParamMode::ChannelWise, 1, 1);
  CHECK_THROWS_AS(mpelu_backward(s, Tensor({1, 3, 1, 1}), Tensor({1, 3, 1, 1})),
                  StateError);
  CHECK_THROWS_AS(mpelu_forward(Tensor({1, 2, 1, 1}), s), InvalidArgument);
  mpelu_forward(Tensor({1, 3, 1, 1}), s);
  CHECK_THROWS_AS(mpelu_backward(s, Tensor({1, 3, 1, 1}), Tensor({1, 3, 2, 1})),
                  InvalidArgument);
  s.beta.value[1] = 0.0;
  CHECK_THROWS_AS(mpelu_forward(Tensor({1, 3, 1, 1}), s), InvalidArgument);
}

TEST_CASE("generic activations") {
  ActivationLayerState none;
  const Tensor y({1, 1, 1, 2}, {-5.0, -2.0});
  CHECK(activation_forward(ActivationKind::relu(), y, none)[0] == 0.0);
  const auto g = activation_backward(ActivationKind::relu(), none, y,
                                     Tensor({1, 1, 1, 2}, 1.0));
  CHECK(g.grad_in[0] == 0.0);
  CHECK(activation_forward(ActivationKind::lrelu(0.25), y, none)[1] == -0.5);
  const Tensor m1({1, 1, 1, 1}, {-1.0});
  CHECK(activation_forward(ActivationKind::elu(1.0), m1, none)[0] ==
        mpelu_value(-1.0, 1, 1));
}

TEST_CASE("special cases of mpelu are exact") {
  const Tensor x = oracle::random({4, 3, 5, 5}, 11, 2.0);
  auto zero = mpelu_state(3, ParamMode::ChannelWise, 0.0, 1.7);
  ActivationLayerState none;
  const Tensor relu = activation_forward(ActivationKind::relu(), x, none);
  const Tensor m0 = mpelu_forward(x, zero);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(m0[i] == relu[i]);
  auto one = mpelu_state(3, ParamMode::ChannelWise, 1.0, 1.0);
  const Tensor elu = activation_forward(ActivationKind::elu(1.0), x, none);
  CHECK(mpelu_forward(x, one) == elu);
}

TEST_CASE("decomposition matches forward") {
  CHECK(decompose_check(Tensor::from({1.0}), 1, 1)[0] == 1.0);
  CHECK(decompose_check(Tensor::from({-2.0}), 2, 0.5)[0] ==
        doctest::Approx(2.0 * (kInvE - 1.0)).epsilon(1e-15));
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = 0.1 + 3.0 * rng.uniform(), b = 0.05 + 3.0 * rng.uniform();
    const Tensor x = oracle::random({1, 1, 1, 2000}, 100 + trial, 3.0);
    auto s = mpelu_state(1, ParamMode::ChannelShared, a, b);
    const Tensor f = mpelu_forward(x, s);
    const Tensor d = decompose_check(x, a, b);
    for (std::size_t i = 0; i < x.numel(); ++i)
      CHECK(std::abs(f[i] - d[i]) <=
            std::abs(f[i]) * std::numeric_limits<double>::epsilon());
  }
  CHECK_THROWS_AS(decompose_check(Tensor::from({1.0}), 1, 0), InvalidArgument);
}

TEST_CASE("continuity at the origin") {
  for (double a : {0.25, 1.0, 25.6302})
    for (double b : {0.01, 1.0, 3.0}) {
      const double eps = 1e-12;
      CHECK(std::abs(mpelu_value(-eps, a, b) - mpelu_value(eps, a, b)) <
            1e-10 * (1 + a * b));
    }
}

TEST_CASE("prelu approximation stays within 0.006") {
  double worst = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double x = -static_cast<double>(i) / 100000.0;
    worst = std::max(worst, std::abs(mpelu_value(x, 25.6302, 0.01) - 0.25 * x));
  }
  CHECK(worst <= 0.006);
  CHECK(worst == doctest::Approx(0.00503).epsilon(0.01));
}

TEST_CASE("channel-shared gradient is the sum of channel-wise gradients") {
  const Tensor y = oracle::random({3, 4, 2, 2}, 21);
  const Tensor go = oracle::random({3, 4, 2, 2}, 22);
  auto wise = mpelu_state(4, ParamMode::ChannelWise, 0.8, 1.3);
  auto shared = mpelu_state(4, ParamMode::ChannelShared, 0.8, 1.3);
  mpelu_forward(y, wise);
  mpelu_forward(y, shared);
  const auto gw = mpelu_backward(wise, y, go);
  const auto gs = mpelu_backward(shared, y, go);
  double sa = 0.0, sb = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    sa += gw.d_alpha[c];
    sb += gw.d_beta[c];
  }
  CHECK(gs.d_alpha[0] == doctest::Approx(sa).epsilon(1e-12));
  CHECK(gs.d_beta[0] == doctest::Approx(sb).epsilon(1e-12));
  CHECK(gs.grad_in == gw.grad_in);
}

TEST_CASE("activation layers pass finite-difference checks") {
  const ActivationKind kinds[] = {ActivationKind::relu(),
                                  ActivationKind::lrelu(0.25),
                                  ActivationKind::prelu(),
                                  ActivationKind::elu(1.0),
                                  ActivationKind::mpelu()};
  for (const auto& kind : kinds)
    for (ParamMode mode : {ParamMode::ChannelShared, ParamMode::ChannelWise}) {
      CAPTURE(kind.name());
      ActivationLayer layer(kind, 3, mode, 0.6, 1.4);
      Tensor x = oracle::random({2, 3, 3, 3}, 31);
      oracle::clear_band(x);
      GradCheckOptions o;
      o.seed = 7;
      const auto r = grad_check(layer, x, o);
      CHECK(r.max_rel_error() < 1e-6);
      CHECK(r.checked() > 0);
    }
}

TEST_CASE("kind names parse back") {
  for (const char* s : {"relu", "lrelu=0.25", "prelu", "elu=1", "mpelu"})
    CHECK(ActivationKind::parse(s).name() == s);
  CHECK_THROWS_AS(ActivationKind::parse("swish"), InvalidArgument);
  CHECK_THROWS_AS(ActivationKind::parse("elu=x"), InvalidArgument);
}

TEST_CASE("layer parameters carry optimizer multipliers") {
  ActivationLayer layer(ActivationKind::mpelu(), 4);
  const auto ps = layer.params();
  REQUIRE(ps.size() == 2);
  CHECK(ps[0]->lr_mult == 5.0);
  CHECK(ps[1]->lr_mult == 5.0);
  CHECK(ps[1]->positive);
  CHECK(ps[0]->value.numel() == 4);
  ActivationLayer shared(ActivationKind::mpelu(), 4, ParamMode::ChannelShared);
  CHECK(shared.params()[0]->value.numel() == 1);
  CHECK(ActivationLayer(ActivationKind::relu(), 4).params().empty());
}
