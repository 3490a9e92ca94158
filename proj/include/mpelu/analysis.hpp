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

#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mpelu/network.hpp"
#include "mpelu/tensor.hpp"

namespace mpelu {

struct LayerStats {
  int index = -1;
  std::string name;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

struct HistogramBin {
  double threshold = 0.0;  // bin is (0, threshold)
  double fraction = 0.0;
};

struct StatsReport {
  std::vector<LayerStats> layers;
  std::vector<HistogramBin> histogram;
  std::size_t samples = 0;  // histogram population
};

enum class StatsTarget {
  Activations,  // outputs of activation layers
  WeightLayers, // outputs of conv and dense layers
  All,          // every node
};

/// Forward-propagates `probe` and records the moments of selected node
/// outputs in order. Throws OverflowError naming the first node whose output
/// holds NaN or Inf.
StatsReport signal_stats(NetworkGraph& net, const Tensor& probe,
                         StatsTarget target = StatsTarget::Activations,
                         Phase phase = Phase::Inference);

/// alpha * (exp(beta y) - 1) - alpha beta y for y <= 0.
double residual_exact(double y, double alpha, double beta);
/// 0.5 alpha beta^2 y^2, the Lagrange bound on residual_exact.
double residual_bound(double y, double alpha, double beta);

/// For each threshold r, the fraction of all inputs whose residual is < r.
/// Positive inputs have residual 0.
StatsReport residual_histogram(std::span<const double> source, double alpha,
                               double beta,
                               const std::vector<double>& thresholds);
StatsReport residual_histogram(const Tensor& source, double alpha, double beta,
                               const std::vector<double>& thresholds);

using Sampler = std::function<Tensor(std::size_t n, Rng& rng)>;
Sampler standard_normal_sampler();
StatsReport residual_histogram(const Sampler& sampler, std::size_t n, Rng& rng,
                               double alpha, double beta,
                               const std::vector<double>& thresholds);

/// "layer_index,layer_name,mean,variance" rows, then a blank line and
/// "threshold,fraction" rows when a histogram is present.
void write_stats_csv(std::ostream& out, const StatsReport& report);

// Finite-difference gradient checking.

enum class LossHead {
  Projection,  // sum(out * R), R fixed N(0,1)
  Quadratic,   // 0.5 * sum(out^2)
  SoftmaxCE,   // mean cross-entropy on [N, K] outputs
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates per tensor; larger tensors are subsampled to this many.
  std::size_t max_coords = 100;
  std::uint64_t seed = 0;
  LossHead head = LossHead::Projection;
  Phase phase = Phase::Train;
  bool check_input = true;
  /// Only parameters whose name starts with this prefix are checked.
  std::string only;
  std::vector<int> labels;  // SoftmaxCE; drawn from `seed` when empty
};

struct GradCheckRecord {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t argmax = 0;
  double analytic = 0.0;  // at argmax
  double numeric = 0.0;   // at argmax
  double eps = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // probes that changed a piecewise regime
};

struct GradCheckReport {
  std::vector<GradCheckRecord> records;
  double max_rel_error() const;
  std::size_t checked() const;
  /// Plain-text table, one row per tensor.
  std::string table() const;
};

/// |a - n| / max(|a|, |n|, 1e-12)
double relative_error(double analytic, double numeric);

GradCheckReport grad_check(NetworkGraph& net, const Tensor& input,
                           const GradCheckOptions& options = {});
GradCheckReport grad_check(Layer& layer, const Tensor& input,
                           const GradCheckOptions& options = {});

}  // namespace mpelu
