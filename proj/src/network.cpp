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

#include "mpelu/network.hpp"

#include <sstream>

#include "mpelu/errors.hpp"

namespace mpelu {

int NetworkGraph::add(std::string name, LayerPtr layer, int input) {
  if (!layer) throw InvalidArgument("network: null layer for node " + name);
  if (input < kGraphInput || input > last())
    throw InvalidArgument("network: node " + name + " reads unknown input " +
                          std::to_string(input));
  if (find(name) >= 0)
    throw InvalidArgument("network: duplicate node name " + name);
  nodes_.push_back(Node{std::move(name), NodeKind::Layer, std::move(layer),
                        {input}});
  return last();
}

int NetworkGraph::add_sum(std::string name, int a, int b) {
  for (int in : {a, b})
    if (in < kGraphInput || in > last())
      throw InvalidArgument("network: add node " + name +
                            " reads unknown input " + std::to_string(in));
  if (find(name) >= 0)
    throw InvalidArgument("network: duplicate node name " + name);
  nodes_.push_back(Node{std::move(name), NodeKind::Add, nullptr, {a, b}});
  return last();
}

int NetworkGraph::find(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> NetworkGraph::consumers(int i) const {
  std::vector<int> out;
  for (std::size_t j = 0; j < nodes_.size(); ++j)
    for (int in : nodes_[j].inputs)
      if (in == i) {
        out.push_back(static_cast<int>(j));
        break;
      }
  return out;
}

Tensor NetworkGraph::forward(const Tensor& x, Phase phase,
                             const Observer& observer) {
  if (nodes_.empty()) return x;
  // Free each intermediate as soon as its last reader has run.
  std::vector<int> last_use(nodes_.size(), -1);
  for (std::size_t j = 0; j < nodes_.size(); ++j)
    for (int in : nodes_[j].inputs)
      if (in >= 0) last_use[static_cast<std::size_t>(in)] = static_cast<int>(j);

  std::vector<Tensor> outs(nodes_.size());
  auto value = [&](int i) -> const Tensor& {
    return i == kGraphInput ? x : outs[static_cast<std::size_t>(i)];
  };
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    Node& nd = nodes_[j];
    if (nd.kind == NodeKind::Layer) {
      outs[j] = nd.layer->forward(value(nd.inputs[0]), phase);
    } else {
      const Tensor& a = value(nd.inputs[0]);
      const Tensor& b = value(nd.inputs[1]);
      if (a.shape() != b.shape())
        throw InvalidArgument("network: add node " + nd.name +
                              " has mismatched inputs " +
                              shape_str(a.shape()) + " and " +
                              shape_str(b.shape()));
      outs[j] = mpelu::add(a, b);
    }
    if (observer) observer(static_cast<int>(j), outs[j]);
    for (int in : nd.inputs)
      if (in >= 0 && last_use[static_cast<std::size_t>(in)] ==
                         static_cast<int>(j))
        outs[static_cast<std::size_t>(in)] = Tensor();
  }
  return std::move(outs.back());
}

Tensor NetworkGraph::backward(const Tensor& grad_out) {
  if (nodes_.empty()) return grad_out;
  std::vector<Tensor> grads(nodes_.size());
  Tensor grad_input;
  auto route = [&](int target, Tensor g) {
    Tensor& slot = target == kGraphInput
                       ? grad_input
                       : grads[static_cast<std::size_t>(target)];
    if (slot.empty())
      slot = std::move(g);
    else
      axpy(1.0, g, slot);
  };
  grads.back() = grad_out;
  for (std::size_t jj = nodes_.size(); jj-- > 0;) {
    if (grads[jj].empty()) continue;
    Node& nd = nodes_[jj];
    Tensor g = std::move(grads[jj]);
    if (nd.kind == NodeKind::Layer) {
      route(nd.inputs[0], nd.layer->backward(g));
    } else {
      route(nd.inputs[0], g);
      route(nd.inputs[1], std::move(g));
    }
  }
  return grad_input;
}

void NetworkGraph::zero_grad() {
  for (auto& nd : nodes_)
    if (nd.layer) nd.layer->zero_grad();
}

std::vector<NamedParam> NetworkGraph::params() {
  std::vector<NamedParam> out;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (!nodes_[j].layer) continue;
    for (Param* p : nodes_[j].layer->params())
      out.push_back({nodes_[j].name + "." + p->name, p, static_cast<int>(j)});
  }
  return out;
}

std::vector<NamedBuffer> NetworkGraph::buffers() {
  std::vector<NamedBuffer> out;
  for (auto& nd : nodes_) {
    if (!nd.layer) continue;
    for (auto& [name, t] : nd.layer->buffers())
      out.push_back({nd.name + "." + name, t});
  }
  return out;
}

std::size_t NetworkGraph::param_count() {
  std::size_t n = 0;
  for (auto& nd : nodes_)
    if (nd.layer) n += nd.layer->param_count();
  return n;
}

std::vector<Shape> NetworkGraph::infer_shapes(const Shape& input) const {
  std::vector<Shape> shapes(nodes_.size());
  auto shape_of = [&](int i) -> const Shape& {
    return i == kGraphInput ? input : shapes[static_cast<std::size_t>(i)];
  };
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    const Node& nd = nodes_[j];
    if (nd.kind == NodeKind::Layer) {
      shapes[j] = nd.layer->output_shape(shape_of(nd.inputs[0]));
    } else {
      if (shape_of(nd.inputs[0]) != shape_of(nd.inputs[1]))
        throw InvalidArgument("network: add node " + nd.name +
                              " has mismatched inputs " +
                              shape_str(shape_of(nd.inputs[0])) + " and " +
                              shape_str(shape_of(nd.inputs[1])));
      shapes[j] = shape_of(nd.inputs[0]);
    }
  }
  return shapes;
}

std::vector<std::string> NetworkGraph::describe() {
  std::vector<std::string> lines;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    Node& nd = nodes_[j];
    std::ostringstream os;
    os << j << '\t' << nd.name << '\t';
    if (nd.kind == NodeKind::Add) {
      os << "add\t" << nd.inputs[0] << '+' << nd.inputs[1] << "\t0";
    } else {
      os << nd.layer->type() << '\t' << nd.layer->config() << " in="
         << nd.inputs[0] << '\t' << nd.layer->param_count();
    }
    lines.push_back(os.str());
  }
  return lines;
}

std::vector<std::int64_t> NetworkGraph::regime() const {
  std::vector<std::int64_t> sig;
  for (const auto& nd : nodes_)
    if (nd.layer) nd.layer->regime(sig);
  return sig;
}

}  // namespace mpelu
