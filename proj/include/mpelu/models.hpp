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

#include <optional>
#include <string>
#include <vector>

#include "mpelu/activations.hpp"
#include "mpelu/network.hpp"

namespace mpelu {

enum class BlockVariant {
  NonBottleneck,
  MpeluNonBottleneck,
  FullPreActBottleneck,
  MpeluFullPreAct,
  MpeluOnlyPreActWithBN,
  MpeluOnlyPreAct,
  NopreWithBNBeforeAdd,
  Nopre,
  NopreNoBN,
};

inline constexpr BlockVariant kAllBlockVariants[] = {
    BlockVariant::NonBottleneck,         BlockVariant::MpeluNonBottleneck,
    BlockVariant::FullPreActBottleneck,  BlockVariant::MpeluFullPreAct,
    BlockVariant::MpeluOnlyPreActWithBN, BlockVariant::MpeluOnlyPreAct,
    BlockVariant::NopreWithBNBeforeAdd,  BlockVariant::Nopre,
    BlockVariant::NopreNoBN,
};

/// Kebab-case names: "non-bottleneck", "mpelu-full-preact", "nopre", ...
const char* to_string(BlockVariant variant);
BlockVariant parse_block_variant(const std::string& text);
bool is_bottleneck(BlockVariant variant);
/// ReLU for NonBottleneck and FullPreActBottleneck, MPELU otherwise.
ActivationKind default_activation(BlockVariant variant);
/// Allowed depths: 6n+2 (non-bottleneck) or 9n+2 (bottleneck).
int blocks_per_stage(int depth, BlockVariant variant);

enum class ShortcutType { Projection, ZeroPad };

struct ModelOptions {
  std::optional<ActivationKind> activation;  // default_activation() if unset
  ParamMode param_mode = ParamMode::ChannelWise;
  std::optional<double> alpha0;  // 0.25 for PReLU, 1 otherwise
  double beta0 = 1.0;
  double act_lr_mult = 5.0;
  double act_wd_mult = 1.0;
  ShortcutType shortcut = ShortcutType::Projection;
  bool bn1_bn_end = true;  // nopre family only
  bool conv_bias = false;
  std::size_t classes = 10;
  std::size_t in_channels = 3;
};

NetworkGraph build_resnet(int depth, BlockVariant variant,
                          const ModelOptions& options = {});
NetworkGraph build_resnet(int depth, BlockVariant variant, std::size_t classes);

/// Appends one residual block reading node `input` with `in_channels`
/// channels. Returns the index of the block's output node.
int append_block(NetworkGraph& net, const std::string& prefix, int input,
                 std::size_t in_channels, std::size_t width,
                 std::size_t stride, BlockVariant variant,
                 const ModelOptions& options);

struct NinOptions {
  ParamMode param_mode = ParamMode::ChannelWise;
  std::optional<double> alpha0;
  double beta0 = 1.0;
  bool batch_norm = false;
  std::size_t classes = 10;
  std::size_t in_channels = 3;
};

/// Network in network: three mlpconv groups (5x5, 5x5, 3x3 spatial conv, each
/// followed by two 1x1 convs), 3/2 max and average pooling between groups,
/// global average pooling over the last group's class maps.
NetworkGraph build_nin(const ActivationKind& kind, const NinOptions& options = {});

struct PlainOptions {
  ParamMode param_mode = ParamMode::ChannelWise;
  std::optional<double> alpha0;
  double beta0 = 1.0;
  bool batch_norm = false;
  std::size_t in_channels = 3;
  std::size_t classes = 0;  // 0: no head; otherwise GAP + dense
};

/// `depth` 3x3 pad-1 convs of `width` filters, each followed by an
/// activation (and BN in between when requested).
NetworkGraph build_plain_stack(int depth, std::size_t width,
                               const ActivationKind& kind,
                               const PlainOptions& options = {});

std::size_t count_params(NetworkGraph& net);

/// Sets alpha and beta of every MPELU fed directly by an addition node and
/// updates their configured initials. Returns how many layers were changed;
/// prints a warning to stderr and returns 0 if there are none.
int set_identity_mpelu_after_add(NetworkGraph& net, double alpha = 98.0,
                                 double beta = 0.01);

/// Text dump: one line per node (index, name, type, config, param count)
/// followed by a total line.
std::string architecture_dump(NetworkGraph& net);

/// Parses "resnet:<depth>:<variant>[:flags]", "nin[:flags]" or
/// "plain:<depth>:<width>[:flags]" and builds the graph. Flags: an activation
/// name (relu, lrelu=a, prelu, elu=a, mpelu), shared, channelwise, zeropad,
/// projection, bn, nobn1, identity-init, classes=K.
NetworkGraph build_from_spec(const std::string& spec);

}  // namespace mpelu
