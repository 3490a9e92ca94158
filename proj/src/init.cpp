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

#include "mpelu/init.hpp"

#include <cmath>
#include <sstream>

#include "mpelu/activations.hpp"
#include "mpelu/errors.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

const char* to_string(FanMode mode) {
  switch (mode) {
    case FanMode::FanIn: return "fan_in";
    case FanMode::FanOut: return "fan_out";
    case FanMode::Average: return "average";
  }
  return "?";
}

FanMode parse_fan_mode(const std::string& text) {
  if (text == "fan_in" || text == "in") return FanMode::FanIn;
  if (text == "fan_out" || text == "out") return FanMode::FanOut;
  if (text == "average" || text == "avg") return FanMode::Average;
  throw InvalidArgument("unknown fan mode '" + text +
                        "' (expected fan_in, fan_out or average)");
}

void FanInfo::validate() const {
  if (kernel == 0 || in_channels == 0 || out_channels == 0)
    throw InvalidArgument("fan: kernel and channel counts must be >= 1 (k=" +
                          std::to_string(kernel) + ", c_in=" +
                          std::to_string(in_channels) + ", c_out=" +
                          std::to_string(out_channels) + ")");
}

double FanInfo::fan_in() const {
  return static_cast<double>(kernel * kernel * in_channels);
}

double FanInfo::fan_out() const {
  return static_cast<double>(kernel * kernel * out_channels);
}

double FanInfo::fan() const {
  validate();
  switch (mode) {
    case FanMode::FanIn: return fan_in();
    case FanMode::FanOut: return fan_out();
    case FanMode::Average: return (fan_in() + fan_out()) / 2.0;
  }
  return fan_in();
}

double taylor_std(const FanInfo& fan, double alpha0, double beta0) {
  if (!(alpha0 >= 0.0))
    throw InvalidArgument("taylor_std: alpha must be >= 0");
  if (!(beta0 > 0.0)) throw InvalidArgument("taylor_std: beta must be > 0");
  const double gain = alpha0 * beta0;
  return std::sqrt(2.0 / (fan.fan() * (1.0 + gain * gain)));
}

double msra_std(const FanInfo& fan, double slope) {
  return std::sqrt(2.0 / ((1.0 + slope * slope) * fan.fan()));
}

double xavier_std(const FanInfo& fan) {
  fan.validate();
  return std::sqrt(1.0 / ((fan.fan_in() + fan.fan_out()) / 2.0));
}

InitMethod parse_init(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  auto number = [&](double fallback) {
    if (arg.empty()) return fallback;
    try {
      return std::stod(arg);
    } catch (const std::exception&) {
      throw InvalidArgument("init: bad numeric argument in '" + text + "'");
    }
  };
  if (head == "gaussian") return GaussianInit{number(0.01)};
  if (head == "xavier") return XavierInit{};
  if (head == "msra") return MsraInit{number(0.0)};
  if (head == "taylor") return TaylorInit{};
  if (head == "lsuv") {
    LsuvInit l;
    l.tol = number(0.1);
    if (!(l.tol > 0.0)) throw InvalidArgument("lsuv: tol must be > 0");
    return l;
  }
  throw InvalidArgument("unknown init method '" + text +
                        "' (expected gaussian[:std], xavier, msra[:a], "
                        "taylor, lsuv[:tol])");
}

std::string init_name(const InitMethod& method) {
  std::ostringstream os;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianInit>) os << "gaussian:" << m.std;
        else if constexpr (std::is_same_v<T, XavierInit>) os << "xavier";
        else if constexpr (std::is_same_v<T, MsraInit>) os << "msra:" << m.slope;
        else if constexpr (std::is_same_v<T, TaylorInit>) os << "taylor";
        else os << "lsuv:" << m.tol;
      },
      method);
  return os.str();
}

FanInfo fan_of(const NetworkGraph& net, int node, FanMode mode) {
  const Layer* layer = net.node(node).layer.get();
  if (auto* conv = dynamic_cast<const Conv2d*>(layer))
    return {conv->kernel(), conv->in_channels(), conv->out_channels(), mode};
  if (auto* dense = dynamic_cast<const Dense*>(layer))
    return {1, dense->in_features(), dense->out_features(), mode};
  throw InvalidArgument("fan_of: node " + net.node(node).name +
                        " is not a conv or dense layer");
}

std::pair<double, double> consuming_activation_params(const NetworkGraph& net,
                                                      int node) {
  int cur = node;
  for (;;) {
    const std::vector<int> next = net.consumers(cur);
    if (next.empty()) return {0.0, 1.0};
    const Node& nd = net.node(next.front());
    if (nd.kind == NodeKind::Add ||
        dynamic_cast<const BatchNorm2d*>(nd.layer.get()) ||
        dynamic_cast<const PadShortcut*>(nd.layer.get())) {
      cur = next.front();
      continue;
    }
    if (auto* act = dynamic_cast<const ActivationLayer*>(nd.layer.get())) {
      switch (act->kind().type) {
        case ActivationType::ReLU: return {0.0, 1.0};
        case ActivationType::LReLU: return {act->kind().slope, 1.0};
        case ActivationType::PReLU: return {act->initial_alpha(), 1.0};
        case ActivationType::ELU: return {act->kind().alpha0, 1.0};
        case ActivationType::MPELU:
          return {act->initial_alpha(), act->initial_beta()};
      }
    }
    return {0.0, 1.0};
  }
}

std::vector<InitRecord> init_network(NetworkGraph& net,
                                     const InitMethod& method, Rng& rng,
                                     const InitOptions& options) {
  if (std::holds_alternative<LsuvInit>(method))
    throw InvalidArgument("init_network: LSUV is data-driven; use lsuv_init "
                          "with a probe batch");
  std::vector<InitRecord> records;
  for (std::size_t j = 0; j < net.size(); ++j) {
    Node& nd = net.node(static_cast<int>(j));
    if (!nd.layer) continue;
    Layer* layer = nd.layer.get();
    Param* weight = nullptr;
    Param* bias = nullptr;
    if (auto* conv = dynamic_cast<Conv2d*>(layer)) {
      weight = &conv->weight();
      if (conv->has_bias()) bias = &conv->bias();
    } else if (auto* dense = dynamic_cast<Dense*>(layer)) {
      weight = &dense->weight();
      if (!dense->bias().value.empty()) bias = &dense->bias();
    } else if (auto* bn = dynamic_cast<BatchNorm2d*>(layer)) {
      bn->reset_parameters();
      continue;
    } else if (auto* act = dynamic_cast<ActivationLayer*>(layer)) {
      act->reset_parameters();
      continue;
    } else if (!layer->params().empty()) {
      throw InvalidArgument("init_network: unsupported layer type '" +
                            layer->type() + "' at node " + nd.name);
    } else {
      continue;
    }

    const FanInfo fan = fan_of(net, static_cast<int>(j), options.fan_mode);
    InitRecord rec;
    rec.node = static_cast<int>(j);
    rec.name = nd.name;
    rec.fan = fan.fan();
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, GaussianInit>) {
            rec.std = m.std;
          } else if constexpr (std::is_same_v<T, XavierInit>) {
            rec.std = xavier_std(fan);
            rec.fan = (fan.fan_in() + fan.fan_out()) / 2.0;
          } else if constexpr (std::is_same_v<T, MsraInit>) {
            rec.std = msra_std(fan, m.slope);
          } else if constexpr (std::is_same_v<T, TaylorInit>) {
            auto [a, b] =
                consuming_activation_params(net, static_cast<int>(j));
            rec.alpha0 = a;
            rec.beta0 = b;
            rec.std = taylor_std(fan, a, b);
          }
        },
        method);
    gaussian_fill(weight->value, 0.0, rec.std, rng);
    if (bias) bias->value.fill(0.0);
    records.push_back(rec);
  }
  return records;
}

}  // namespace mpelu
