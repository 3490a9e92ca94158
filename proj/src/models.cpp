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

#include "mpelu/models.hpp"

#include <iostream>
#include <memory>
#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

namespace {

struct ActSpec {
  ActivationKind kind;
  ParamMode mode;
  double alpha0;
  double beta0;
  double lr_mult = 5.0;
  double wd_mult = 1.0;
};

double default_alpha0(const ActivationKind& kind, std::optional<double> given) {
  if (given) return *given;
  return kind.type == ActivationType::PReLU ? 0.25 : 1.0;
}

class Builder {
 public:
  Builder(NetworkGraph& net, ActSpec act, bool conv_bias)
      : net_(net), act_(act), conv_bias_(conv_bias) {}

  int conv(const std::string& name, int in, std::size_t ci, std::size_t co,
           std::size_t k, std::size_t stride, std::size_t pad) {
    return net_.add(name,
                    std::make_unique<Conv2d>(ci, co, k, stride, pad, conv_bias_),
                    in);
  }
  int bn(const std::string& name, int in, std::size_t c) {
    return net_.add(name, std::make_unique<BatchNorm2d>(c), in);
  }
  int act(const std::string& name, int in, std::size_t c) {
    return net_.add(name,
                    std::make_unique<ActivationLayer>(act_.kind, c, act_.mode,
                                                      act_.alpha0, act_.beta0,
                                                      act_.lr_mult,
                                                      act_.wd_mult),
                    in);
  }
  int sum(const std::string& name, int a, int b) {
    return net_.add_sum(name, a, b);
  }
  NetworkGraph& net() { return net_; }

 private:
  NetworkGraph& net_;
  ActSpec act_;
  bool conv_bias_;
};

ActSpec act_spec(BlockVariant variant, const ModelOptions& o) {
  const ActivationKind kind = o.activation.value_or(default_activation(variant));
  return {kind, o.param_mode, default_alpha0(kind, o.alpha0), o.beta0,
          o.act_lr_mult, o.act_wd_mult};
}

int shortcut(Builder& b, const std::string& p, int x, std::size_t ci,
             std::size_t co, std::size_t stride, bool with_bn,
             ShortcutType type) {
  if (ci == co && stride == 1) return x;
  if (type == ShortcutType::ZeroPad)
    return b.net().add(p + ".pad", std::make_unique<PadShortcut>(ci, co, stride),
                       x);
  int s = b.conv(p + ".proj", x, ci, co, 1, stride, 0);
  if (with_bn) s = b.bn(p + ".proj_bn", s, co);
  return s;
}

}  // namespace

const char* to_string(BlockVariant variant) {
  switch (variant) {
    case BlockVariant::NonBottleneck: return "non-bottleneck";
    case BlockVariant::MpeluNonBottleneck: return "mpelu-non-bottleneck";
    case BlockVariant::FullPreActBottleneck: return "full-preact";
    case BlockVariant::MpeluFullPreAct: return "mpelu-full-preact";
    case BlockVariant::MpeluOnlyPreActWithBN: return "mpelu-only-preact-bn";
    case BlockVariant::MpeluOnlyPreAct: return "mpelu-only-preact";
    case BlockVariant::NopreWithBNBeforeAdd: return "nopre-bn-before-add";
    case BlockVariant::Nopre: return "nopre";
    case BlockVariant::NopreNoBN: return "nopre-no-bn";
  }
  return "?";
}

BlockVariant parse_block_variant(const std::string& text) {
  for (BlockVariant v : kAllBlockVariants)
    if (text == to_string(v)) return v;
  std::string names;
  for (BlockVariant v : kAllBlockVariants)
    names += std::string(names.empty() ? "" : ", ") + to_string(v);
  throw InvalidArgument("unknown block variant '" + text + "' (expected one of " +
                        names + ")");
}

bool is_bottleneck(BlockVariant variant) {
  return variant != BlockVariant::NonBottleneck &&
         variant != BlockVariant::MpeluNonBottleneck;
}

ActivationKind default_activation(BlockVariant variant) {
  if (variant == BlockVariant::NonBottleneck ||
      variant == BlockVariant::FullPreActBottleneck)
    return ActivationKind::relu();
  return ActivationKind::mpelu();
}

int blocks_per_stage(int depth, BlockVariant variant) {
  const int per_block = is_bottleneck(variant) ? 9 : 6;
  if (depth < per_block + 2 || (depth - 2) % per_block != 0)
    throw InvalidArgument(
        "resnet: depth " + std::to_string(depth) + " does not fit " +
        to_string(variant) + " (depth must be " +
        (is_bottleneck(variant) ? "9n+2" : "6n+2") + " with n >= 1)");
  return (depth - 2) / per_block;
}

int append_block(NetworkGraph& net, const std::string& p, int x,
                 std::size_t ci, std::size_t m, std::size_t stride,
                 BlockVariant variant, const ModelOptions& o) {
  Builder b(net, act_spec(variant, o), o.conv_bias);
  using V = BlockVariant;
  switch (variant) {
    case V::NonBottleneck:
    case V::MpeluNonBottleneck: {
      int r = b.conv(p + ".conv1", x, ci, m, 3, stride, 1);
      r = b.bn(p + ".bn1", r, m);
      r = b.act(p + ".act1", r, m);
      r = b.conv(p + ".conv2", r, m, m, 3, 1, 1);
      r = b.bn(p + ".bn2", r, m);
      const int s = shortcut(b, p, x, ci, m, stride, true, o.shortcut);
      int out = b.sum(p + ".add", r, s);
      if (variant == V::NonBottleneck) out = b.act(p + ".act_out", out, m);
      return out;
    }
    default: break;
  }

  const std::size_t co = 4 * m;
  const bool pre_bn = variant == V::FullPreActBottleneck ||
                      variant == V::MpeluFullPreAct;
  const bool pre_act = pre_bn || variant == V::MpeluOnlyPreActWithBN ||
                       variant == V::MpeluOnlyPreAct;
  const bool inner_bn = variant != V::NopreNoBN;
  const bool last_bn = variant == V::MpeluOnlyPreActWithBN ||
                       variant == V::NopreWithBNBeforeAdd;

  int r = x;
  if (pre_bn) r = b.bn(p + ".bn0", r, ci);
  if (pre_act) r = b.act(p + ".act0", r, ci);
  r = b.conv(p + ".conv1", r, ci, m, 1, 1, 0);
  if (inner_bn) r = b.bn(p + ".bn1", r, m);
  r = b.act(p + ".act1", r, m);
  r = b.conv(p + ".conv2", r, m, m, 3, stride, 1);
  if (inner_bn) r = b.bn(p + ".bn2", r, m);
  r = b.act(p + ".act2", r, m);
  r = b.conv(p + ".conv3", r, m, co, 1, 1, 0);
  if (last_bn) r = b.bn(p + ".bn3", r, co);
  const int s = shortcut(b, p, x, ci, co, stride, false, o.shortcut);
  return b.sum(p + ".add", r, s);
}

NetworkGraph build_resnet(int depth, BlockVariant variant,
                          const ModelOptions& o) {
  const int n = blocks_per_stage(depth, variant);
  if (o.classes == 0 || o.in_channels == 0)
    throw InvalidArgument("resnet: classes and in_channels must be >= 1");
  NetworkGraph net;
  Builder b(net, act_spec(variant, o), o.conv_bias);
  const bool bottleneck = is_bottleneck(variant);
  const bool nopre = variant == BlockVariant::Nopre ||
                     variant == BlockVariant::NopreWithBNBeforeAdd ||
                     variant == BlockVariant::NopreNoBN;

  int x = b.conv("stem.conv", NetworkGraph::kGraphInput, o.in_channels, 16, 3,
                 1, 1);
  if (!bottleneck || (nopre && o.bn1_bn_end)) {
    x = b.bn("stem.bn", x, 16);
    x = b.act("stem.act", x, 16);
  }
  std::size_t ci = 16;
  const std::size_t widths[] = {16, 32, 64};
  for (int stage = 0; stage < 3; ++stage) {
    const std::size_t m = widths[stage];
    for (int blk = 0; blk < n; ++blk) {
      const std::size_t stride = (stage > 0 && blk == 0) ? 2 : 1;
      const std::string p = "stage" + std::to_string(stage + 1) + ".block" +
                            std::to_string(blk);
      x = append_block(net, p, x, ci, m, stride, variant, o);
      ci = bottleneck ? 4 * m : m;
    }
  }
  if (bottleneck && (!nopre || o.bn1_bn_end)) {
    x = b.bn("head.bn", x, ci);
    x = b.act("head.act", x, ci);
  }
  x = net.add("head.pool", std::make_unique<GlobalAvgPool>(), x);
  net.add("head.fc", std::make_unique<Dense>(ci, o.classes, true), x);
  net.label = "resnet:" + std::to_string(depth) + ":" + to_string(variant);
  return net;
}

NetworkGraph build_resnet(int depth, BlockVariant variant,
                          std::size_t classes) {
  ModelOptions o;
  o.classes = classes;
  return build_resnet(depth, variant, o);
}

NetworkGraph build_nin(const ActivationKind& kind, const NinOptions& o) {
  if (o.classes == 0 || o.in_channels == 0)
    throw InvalidArgument("nin: classes and in_channels must be >= 1");
  NetworkGraph net;
  Builder b(net,
            {kind, o.param_mode, default_alpha0(kind, o.alpha0), o.beta0},
            !o.batch_norm);
  struct Spec {
    std::size_t k, pad, out;
  };
  const Spec groups[3][3] = {
      {{5, 2, 192}, {1, 0, 160}, {1, 0, 96}},
      {{5, 2, 192}, {1, 0, 192}, {1, 0, 192}},
      {{3, 1, 192}, {1, 0, 192}, {1, 0, o.classes}},
  };
  int x = NetworkGraph::kGraphInput;
  std::size_t ci = o.in_channels;
  for (int g = 0; g < 3; ++g) {
    for (int l = 0; l < 3; ++l) {
      const Spec& s = groups[g][l];
      const std::string p =
          "mlp" + std::to_string(g + 1) + ".conv" + std::to_string(l + 1);
      x = b.conv(p, x, ci, s.out, s.k, 1, s.pad);
      if (o.batch_norm) x = b.bn(p + "_bn", x, s.out);
      x = b.act(p + "_act", x, s.out);
      ci = s.out;
    }
    if (g == 0)
      x = net.add("pool1", std::make_unique<Pool2d>(PoolMode::Max, 3, 2), x);
    else if (g == 1)
      x = net.add("pool2", std::make_unique<Pool2d>(PoolMode::Average, 3, 2),
                  x);
  }
  net.add("gap", std::make_unique<GlobalAvgPool>(), x);
  net.label = "nin:" + kind.name() + (o.batch_norm ? ":bn" : "");
  return net;
}

NetworkGraph build_plain_stack(int depth, std::size_t width,
                               const ActivationKind& kind,
                               const PlainOptions& o) {
  if (depth < 1 || width == 0 || o.in_channels == 0)
    throw InvalidArgument("plain: depth, width and in_channels must be >= 1");
  NetworkGraph net;
  Builder b(net,
            {kind, o.param_mode, default_alpha0(kind, o.alpha0), o.beta0},
            !o.batch_norm);
  int x = NetworkGraph::kGraphInput;
  std::size_t ci = o.in_channels;
  for (int l = 1; l <= depth; ++l) {
    const std::string p = "layer" + std::to_string(l);
    x = b.conv(p + ".conv", x, ci, width, 3, 1, 1);
    if (o.batch_norm) x = b.bn(p + ".bn", x, width);
    x = b.act(p + ".act", x, width);
    ci = width;
  }
  if (o.classes > 0) {
    x = net.add("head.pool", std::make_unique<GlobalAvgPool>(), x);
    net.add("head.fc", std::make_unique<Dense>(width, o.classes, true), x);
  }
  net.label = "plain:" + std::to_string(depth) + ":" + std::to_string(width) +
              ":" + kind.name();
  return net;
}

std::size_t count_params(NetworkGraph& net) { return net.param_count(); }

int set_identity_mpelu_after_add(NetworkGraph& net, double alpha,
                                 double beta) {
  int changed = 0;
  for (std::size_t j = 0; j < net.size(); ++j) {
    Node& nd = net.node(static_cast<int>(j));
    auto* act = dynamic_cast<ActivationLayer*>(nd.layer.get());
    if (!act || act->kind().type != ActivationType::MPELU) continue;
    const int in = nd.inputs[0];
    if (in < 0 || net.node(in).kind != NodeKind::Add) continue;
    act->set_initial(alpha, beta);
    ++changed;
  }
  if (changed == 0)
    std::cerr << "warning: set_identity_mpelu_after_add: no MPELU follows an "
                 "addition in "
              << (net.label.empty() ? "this network" : net.label)
              << "; nothing changed\n";
  return changed;
}

std::string architecture_dump(NetworkGraph& net) {
  std::ostringstream os;
  if (!net.label.empty()) os << "# " << net.label << '\n';
  for (const auto& line : net.describe()) os << line << '\n';
  os << "total_params\t" << net.param_count() << '\n';
  return os.str();
}

}  // namespace mpelu
