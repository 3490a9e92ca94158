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

#include "mpelu/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mpelu/activations.hpp"
#include "mpelu/errors.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

namespace {

bool selected(const Node& nd, StatsTarget target) {
  switch (target) {
    case StatsTarget::All: return true;
    case StatsTarget::Activations:
      return dynamic_cast<const ActivationLayer*>(nd.layer.get()) != nullptr;
    case StatsTarget::WeightLayers:
      return dynamic_cast<const Conv2d*>(nd.layer.get()) ||
             dynamic_cast<const Dense*>(nd.layer.get());
  }
  return false;
}

void check_params(double alpha, double beta) {
  if (!(alpha >= 0.0)) throw InvalidArgument("residual: alpha must be >= 0");
  if (!(beta > 0.0)) throw InvalidArgument("residual: beta must be > 0");
}

}  // namespace

StatsReport signal_stats(NetworkGraph& net, const Tensor& probe,
                         StatsTarget target, Phase phase) {
  if (!all_finite(probe))
    throw InvalidArgument("signal_stats: probe holds NaN or Inf");
  StatsReport report;
  net.forward(probe, phase, [&](int i, const Tensor& out) {
    const Node& nd = net.node(i);
    if (!all_finite(out))
      throw OverflowError("signal_stats: non-finite output at node " +
                          std::to_string(i) + " (" + nd.name + ")");
    if (!selected(nd, target)) return;
    const Moments m = moments(out);
    report.layers.push_back({i, nd.name, m.mean, m.variance, out.numel()});
  });
  return report;
}

double residual_exact(double y, double alpha, double beta) {
  if (y > 0.0)
    throw InvalidArgument("residual_exact: defined for y <= 0 only, got " +
                          std::to_string(y));
  check_params(alpha, beta);
  return alpha * (std::expm1(beta * y) - beta * y);
}

double residual_bound(double y, double alpha, double beta) {
  return 0.5 * alpha * beta * beta * y * y;
}

StatsReport residual_histogram(std::span<const double> source, double alpha,
                               double beta,
                               const std::vector<double>& thresholds) {
  if (source.empty())
    throw InvalidArgument("residual_histogram: empty source");
  check_params(alpha, beta);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0))
      throw InvalidArgument("residual_histogram: thresholds must be > 0");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw InvalidArgument("residual_histogram: thresholds must be sorted");
  }
  std::vector<std::size_t> below(thresholds.size(), 0);
  for (double y : source) {
    const double r = y > 0.0 ? 0.0 : residual_exact(y, alpha, beta);
    // Bins are nested, so count only from the first threshold exceeding r.
    auto it = std::upper_bound(thresholds.begin(), thresholds.end(), r);
    if (it != thresholds.end()) ++below[static_cast<std::size_t>(it - thresholds.begin())];
  }
  StatsReport report;
  report.samples = source.size();
  std::size_t running = 0;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    running += below[i];
    report.histogram.push_back(
        {thresholds[i],
         static_cast<double>(running) / static_cast<double>(source.size())});
  }
  return report;
}

StatsReport residual_histogram(const Tensor& source, double alpha, double beta,
                               const std::vector<double>& thresholds) {
  return residual_histogram(source.values(), alpha, beta, thresholds);
}

Sampler standard_normal_sampler() {
  return [](std::size_t n, Rng& rng) {
    Tensor t({n});
    return gaussian_fill(t, 0.0, 1.0, rng);
  };
}

StatsReport residual_histogram(const Sampler& sampler, std::size_t n, Rng& rng,
                               double alpha, double beta,
                               const std::vector<double>& thresholds) {
  return residual_histogram(sampler(n, rng), alpha, beta, thresholds);
}

void write_stats_csv(std::ostream& out, const StatsReport& report) {
  const auto old = out.precision(17);
  out << "layer_index,layer_name,mean,variance\n";
  for (const auto& l : report.layers)
    out << l.index << ',' << l.name << ',' << l.mean << ',' << l.variance
        << '\n';
  if (!report.histogram.empty()) {
    out << "\nthreshold,fraction\n";
    for (const auto& b : report.histogram)
      out << b.threshold << ',' << b.fraction << '\n';
  }
  out.precision(old);
}

}  // namespace mpelu
