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

#include <Eigen/Dense>
#include <cmath>

#include "mpelu/errors.hpp"
#include "mpelu/init.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

void orthonormal_fill(Tensor& weight, Rng& rng) {
  if (weight.rank() < 2)
    throw InvalidArgument("orthonormal_fill: need a matrix-like tensor, got " +
                          shape_str(weight.shape()));
  const auto rows = static_cast<Eigen::Index>(weight.dim(0));
  const auto cols = static_cast<Eigen::Index>(weight.numel() / weight.dim(0));
  // Draw the tall orientation so the thin Q has orthonormal columns.
  const bool wide = rows < cols;
  const Eigen::Index m = wide ? cols : rows;
  const Eigen::Index n = wide ? rows : cols;
  Eigen::MatrixXd g(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
  // Sign convention from diag(R) makes the draw uniform over the group.
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  double* w = weight.data();
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      w[i * cols + j] = wide ? q(j, i) : q(i, j);
}

LsuvReport lsuv_init(NetworkGraph& net, const Tensor& probe, double tol,
                     int max_iter, bool orthonormal, Rng* rng) {
  if (!(tol > 0.0)) throw InvalidArgument("lsuv: tol must be > 0");
  if (max_iter < 0) throw InvalidArgument("lsuv: max_iter must be >= 0");
  if (orthonormal && rng == nullptr)
    throw InvalidArgument("lsuv: orthonormal pre-init needs an Rng");

  std::vector<int> targets;
  for (std::size_t j = 0; j < net.size(); ++j) {
    Layer* layer = net.node(static_cast<int>(j)).layer.get();
    if (dynamic_cast<Conv2d*>(layer) || dynamic_cast<Dense*>(layer))
      targets.push_back(static_cast<int>(j));
  }
  if (orthonormal)
    for (int t : targets) {
      Layer* layer = net.node(t).layer.get();
      if (auto* conv = dynamic_cast<Conv2d*>(layer)) {
        orthonormal_fill(conv->weight().value, *rng);
        if (conv->has_bias()) conv->bias().value.fill(0.0);
      } else {
        auto* dense = static_cast<Dense*>(layer);
        orthonormal_fill(dense->weight().value, *rng);
        dense->bias().value.fill(0.0);
      }
    }

  LsuvReport report;
  for (int t : targets) {
    Layer* layer = net.node(t).layer.get();
    Tensor& w = dynamic_cast<Conv2d*>(layer)
                    ? static_cast<Conv2d*>(layer)->weight().value
                    : static_cast<Dense*>(layer)->weight().value;
    auto measure = [&] {
      double var = 0.0;
      net.forward(probe, Phase::Inference, [&](int node, const Tensor& out) {
        if (node == t) var = moments(out).variance;
      });
      return var;
    };
    LsuvLayerRecord rec;
    rec.name = net.node(t).name;
    double var = measure();
    while (std::abs(var - 1.0) > tol && rec.iterations < max_iter) {
      if (!(var > 0.0) || !std::isfinite(var))
        throw SingularInitError("lsuv: output variance of " + rec.name +
                                " is " + std::to_string(var) +
                                "; cannot rescale");
      const double s = 1.0 / std::sqrt(var);
      for (double& v : w.values()) v *= s;
      ++rec.iterations;
      var = measure();
    }
    rec.variance = var;
    rec.converged = std::abs(var - 1.0) <= tol;
    report.layers.push_back(rec);
  }
  return report;
}

}  // namespace mpelu
