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
#include <limits>
#include <sstream>

#include "mpelu/analysis.hpp"
#include "mpelu/errors.hpp"
#include "mpelu/init.hpp"
#include "mpelu/layers.hpp"
#include "mpelu/models.hpp"
#include "oracles.hpp"

using namespace mpelu;

TEST_CASE("residual closed forms") {
  CHECK(residual_exact(0.0, 1, 1) == 0.0);
  const double r = residual_exact(-0.1414, 1, 1);
  CHECK(r == doctest::Approx(std::exp(-0.1414) - 1 + 0.1414).epsilon(1e-12));
  CHECK(r < 0.01);
  CHECK(residual_exact(-1.0, 1, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(residual_exact(-1.0, 1, 1) < 0.5);
  CHECK_THROWS_AS(residual_exact(0.5, 1, 1), InvalidArgument);
}

TEST_CASE("lagrange bound and alpha scaling") {
  Rng rng(1);
  for (int i = 0; i < 20000; ++i) {
    const double y = -5.0 * rng.uniform();
    const double a = 0.1 + 3 * rng.uniform(), b = 0.1 + 2 * rng.uniform();
    const double e = residual_exact(y, a, b);
    CHECK(e >= 0.0);
    CHECK(e <= residual_bound(y, a, b) * (1 + 1e-12));
  }
  const Tensor x = oracle::random({50000}, 2);
  const std::vector<double> th{0.01, 0.1, 0.5};
  const auto h3 = residual_histogram(x, 3.0, 0.7, {0.03, 0.3, 1.5});
  const auto h1 = residual_histogram(x, 1.0, 0.7, th);
  for (std::size_t i = 0; i < th.size(); ++i)
    CHECK(h3.histogram[i].fraction == doctest::Approx(h1.histogram[i].fraction).epsilon(1e-3));
}

TEST_CASE("residual histogram on standard normal samples") {
  Rng rng(3);
  const double a = 1.0, b = 1.0;
  const std::vector<double> th{0.01, 0.5 * a * b * b, 2 * a * b * b, 4.5 * a * b * b};
  const auto rep = residual_histogram(standard_normal_sampler(), 1000000, rng, a, b, th);
  CHECK(rep.samples == 1000000);
  CHECK(std::abs(rep.histogram[0].fraction - 0.5557) <= 0.005);
  CHECK(rep.histogram[1].fraction >= 0.84135);
  CHECK(rep.histogram[2].fraction >= 0.97725);
  CHECK(rep.histogram[3].fraction >= 0.99865);
  for (std::size_t i = 1; i < th.size(); ++i)
    CHECK(rep.histogram[i].fraction >= rep.histogram[i - 1].fraction);

  const auto pos = residual_histogram(Tensor::from({0.5, 2.0, 3.0}), 7.0, 1.0, {1e-9, 1.0});
  CHECK(pos.histogram[0].fraction == 1.0);
  CHECK_THROWS_AS(residual_histogram(Tensor(), 1, 1, {0.1}), InvalidArgument);
  CHECK_THROWS_AS(residual_histogram(Tensor::from({1.0}), 1, 1, {0.5, 0.1}), InvalidArgument);
}

TEST_CASE("signal stats") {
  NetworkGraph relu;
  relu.add("act", std::make_unique<ActivationLayer>(ActivationKind::relu(), 1),
           NetworkGraph::kGraphInput);
  const Tensor x = oracle::random({1000, 1, 1000, 1}, 4);
  const auto rep = signal_stats(relu, x);
  REQUIRE(rep.layers.size() == 1);
  const double pi = std::acos(-1.0);
  CHECK(rep.layers[0].mean == doctest::Approx(1.0 / std::sqrt(2 * pi)).epsilon(0.01));
  CHECK(rep.layers[0].variance == doctest::Approx(0.5 - 1.0 / (2 * pi)).epsilon(0.01));

  NetworkGraph ident;
  ident.add("pool", std::make_unique<Pool2d>(PoolMode::Max, 1, 1), NetworkGraph::kGraphInput);
  ident.add("pool2", std::make_unique<Pool2d>(PoolMode::Max, 1, 1), 0);
  const Tensor small = oracle::random({4, 2, 3, 3}, 5);
  const auto all = signal_stats(ident, small, StatsTarget::All);
  const Moments m = moments(small);
  REQUIRE(all.layers.size() == 2);
  for (const auto& l : all.layers) {
    CHECK(l.mean == m.mean);
    CHECK(l.variance == m.variance);
  }

  NetworkGraph blow;
  blow.add("fc", std::make_unique<Dense>(1, 1, false), NetworkGraph::kGraphInput);
  dynamic_cast<Dense&>(*blow.node(0).layer).weight().value.fill(1e308);
  CHECK_THROWS_WITH_AS(signal_stats(blow, Tensor({1, 1}, {1e10}), StatsTarget::All),
                       doctest::Contains("fc"), OverflowError);

  std::ostringstream csv;
  write_stats_csv(csv, rep);
  CHECK(csv.str().find("act") != std::string::npos);
}

TEST_CASE("grad check reports") {
  Dense d(4, 3, true);
  d.weight().value = oracle::random({3, 4}, 6);
  GradCheckOptions o;
  o.head = LossHead::Quadratic;
  const auto r = grad_check(d, oracle::random({2, 4}, 7), o);
  CHECK(r.max_rel_error() < 1e-9);
  CHECK(r.records.size() == 3);
  CHECK(r.table().find("weight") != std::string::npos);
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.0, 0.0) == 0.0);
  o.only = "missing";
  CHECK_THROWS_AS(grad_check(d, oracle::random({2, 4}, 7), o), InvalidArgument);

  // Coordinates whose probes flip a kink are skipped, not scored.
  ActivationLayer relu(ActivationKind::relu(), 1);
  GradCheckOptions k;
  k.eps = 1e-3;
  const auto kr = grad_check(relu, Tensor({1, 1, 1, 2}, {1e-4, -2.0}), k);
  CHECK(kr.records[0].skipped == 1);
  CHECK(kr.max_rel_error() == 0.0);

  ActivationLayer mp(ActivationKind::mpelu(), 2, ParamMode::ChannelWise, 0.9, 1.1);
  Tensor x = oracle::random({2, 2, 3, 3}, 8);
  for (double& v : x.values())
    if (std::abs(v) < 1e-3) v = v < 0 ? -1e-3 : 1e-3;
  CHECK(grad_check(mp, x).max_rel_error() < 1e-6);

  NetworkGraph net;
  append_block(net, "b", NetworkGraph::kGraphInput, 4, 4, 1,
               BlockVariant::MpeluNonBottleneck, ModelOptions{});
  Rng rng(9);
  init_network(net, TaylorInit{}, rng);
  CHECK(grad_check(net, oracle::random({4, 4, 4, 4}, 10)).max_rel_error() < 1e-5);

  Dense huge(1, 1, false);
  huge.weight().value.fill(std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(grad_check(huge, Tensor({1, 1}, {1.0})), OverflowError);
}
