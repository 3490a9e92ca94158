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

#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/models.hpp"

namespace mpelu {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  return out;
}

int to_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("arch: " + what + " must be an integer, got '" + text +
                        "'");
}

struct Flags {
  std::optional<ActivationKind> activation;
  ParamMode mode = ParamMode::ChannelWise;
  ShortcutType shortcut = ShortcutType::Projection;
  bool bn = false;
  bool bn1 = true;
  bool identity_init = false;
  std::optional<std::size_t> classes;
};

Flags parse_flags(const std::vector<std::string>& parts, std::size_t from) {
  Flags f;
  for (std::size_t i = from; i < parts.size(); ++i) {
    const std::string& t = parts[i];
    if (t == "shared") f.mode = ParamMode::ChannelShared;
    else if (t == "channelwise") f.mode = ParamMode::ChannelWise;
    else if (t == "zeropad") f.shortcut = ShortcutType::ZeroPad;
    else if (t == "projection") f.shortcut = ShortcutType::Projection;
    else if (t == "bn") f.bn = true;
    else if (t == "nobn1") f.bn1 = false;
    else if (t == "identity-init") f.identity_init = true;
    else if (t.rfind("classes=", 0) == 0)
      f.classes = static_cast<std::size_t>(to_int(t.substr(8), "classes"));
    else
      f.activation = ActivationKind::parse(t);
  }
  return f;
}

}  // namespace

NetworkGraph build_from_spec(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw InvalidArgument("arch: empty architecture spec");
  const std::string& family = parts[0];
  NetworkGraph net;
  if (family == "resnet") {
    if (parts.size() < 3)
      throw InvalidArgument("arch: expected resnet:<depth>:<variant>[:flags], "
                            "got '" + spec + "'");
    const Flags f = parse_flags(parts, 3);
    ModelOptions o;
    o.activation = f.activation;
    o.param_mode = f.mode;
    o.shortcut = f.shortcut;
    o.bn1_bn_end = f.bn1;
    if (f.classes) o.classes = *f.classes;
    net = build_resnet(to_int(parts[1], "depth"), parse_block_variant(parts[2]),
                       o);
    if (f.identity_init) set_identity_mpelu_after_add(net);
  } else if (family == "nin") {
    const Flags f = parse_flags(parts, 1);
    NinOptions o;
    o.param_mode = f.mode;
    o.batch_norm = f.bn;
    if (f.classes) o.classes = *f.classes;
    net = build_nin(f.activation.value_or(ActivationKind::mpelu()), o);
  } else if (family == "plain") {
    if (parts.size() < 3)
      throw InvalidArgument("arch: expected plain:<depth>:<width>[:flags], "
                            "got '" + spec + "'");
    const Flags f = parse_flags(parts, 3);
    PlainOptions o;
    o.param_mode = f.mode;
    o.batch_norm = f.bn;
    o.classes = f.classes.value_or(10);
    net = build_plain_stack(to_int(parts[1], "depth"),
                            static_cast<std::size_t>(to_int(parts[2], "width")),
                            f.activation.value_or(ActivationKind::mpelu()), o);
  } else {
    throw InvalidArgument("arch: unknown family '" + family +
                          "' (expected resnet, nin or plain)");
  }
  net.label = spec;
  return net;
}

}  // namespace mpelu
