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

#include <string>
#include <variant>
#include <vector>

#include "mpelu/network.hpp"
#include "mpelu/tensor.hpp"

namespace mpelu {

enum class FanMode { FanIn, FanOut, Average };

const char* to_string(FanMode mode);
FanMode parse_fan_mode(const std::string& text);

/// Geometry of a weight layer. Dense layers use kernel = 1.
struct FanInfo {
  std::size_t kernel = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  FanMode mode = FanMode::FanIn;

  double fan_in() const;
  double fan_out() const;
  /// Count selected by `mode`; throws InvalidArgument on zero geometry.
  double fan() const;
  void validate() const;
};

struct GaussianInit {
  double std = 0.01;
};
struct XavierInit {};
struct MsraInit {
  double slope = 0.0;
};
/// Gaussian with std sqrt(2 / (fan * (1 + alpha^2 beta^2))), alpha and beta
/// taken from the activation that consumes each layer's output.
struct TaylorInit {};
struct LsuvInit {
  double tol = 0.1;
  int max_iter = 10;
  bool orthonormal = true;
};

using InitMethod =
    std::variant<GaussianInit, XavierInit, MsraInit, TaylorInit, LsuvInit>;

/// "gaussian[:std]", "xavier", "msra[:slope]", "taylor", "lsuv[:tol]".
InitMethod parse_init(const std::string& text);
std::string init_name(const InitMethod& method);

double taylor_std(const FanInfo& fan, double alpha0, double beta0);
double msra_std(const FanInfo& fan, double slope);
/// sqrt(1 / fan_avg) regardless of the selected fan mode.
double xavier_std(const FanInfo& fan);

struct InitOptions {
  FanMode fan_mode = FanMode::FanIn;
};

/// Per weight layer record of what init_network did.
struct InitRecord {
  int node = -1;
  std::string name;
  double fan = 0.0;
  double std = 0.0;
  double alpha0 = 0.0;  // Taylor only: the consuming activation's initials
  double beta0 = 0.0;
};

/// Geometry of a conv or dense node.
FanInfo fan_of(const NetworkGraph& net, int node, FanMode mode);

/// Initial (alpha, beta) the Taylor rule uses for a weight node: the first
/// activation reached downstream through BN, additions and parameter-free
/// shortcuts, or (0, 1) when the output reaches anything else first.
std::pair<double, double> consuming_activation_params(const NetworkGraph& net,
                                                      int node);

/// Re-initialises every parameter: weights per `method`, biases 0, BN gamma 1
/// and shift 0 with fresh running stats, activations to their initials.
/// LSUV is not handled here (see lsuv_init) and is rejected.
std::vector<InitRecord> init_network(NetworkGraph& net,
                                     const InitMethod& method, Rng& rng,
                                     const InitOptions& options = {});

struct LsuvLayerRecord {
  std::string name;
  double variance = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct LsuvReport {
  std::vector<LsuvLayerRecord> layers;
};

/// Layer-sequential unit-variance initialisation. Optionally pre-initialises
/// each weight tensor with an orthonormal matrix (QR of a Gaussian draw) and
/// then, in topological order, divides each layer's weights by the standard
/// deviation of its output on `probe` until |Var - 1| <= tol or max_iter
/// rescales have been applied.
LsuvReport lsuv_init(NetworkGraph& net, const Tensor& probe, double tol = 0.1,
                     int max_iter = 10, bool orthonormal = false,
                     Rng* rng = nullptr);

/// Fills a [rows, cols...] tensor so its rows (or columns) are orthonormal.
void orthonormal_fill(Tensor& weight, Rng& rng);

}  // namespace mpelu
