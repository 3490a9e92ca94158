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
#include <string>
#include <vector>

#include "mpelu/layer.hpp"
#include "mpelu/tensor.hpp"

namespace mpelu {

enum class NodeKind { Layer, Add };

/// One step of a network: a single-input layer or the sum of two nodes.
struct Node {
  std::string name;
  NodeKind kind = NodeKind::Layer;
  LayerPtr layer;           // null for Add
  std::vector<int> inputs;  // node indices; kGraphInput for the network input
};

struct NamedParam {
  std::string name;  // "<node>.<param>"
  Param* param = nullptr;
  int node = -1;
};

struct NamedBuffer {
  std::string name;
  Tensor* tensor = nullptr;
};

/// Ordered DAG of layers with shortcut additions. Nodes are stored in
/// topological order: every input index is smaller than the node's own.
class NetworkGraph {
 public:
  static constexpr int kGraphInput = -1;

  NetworkGraph() = default;
  NetworkGraph(NetworkGraph&&) = default;
  NetworkGraph& operator=(NetworkGraph&&) = default;

  int add(std::string name, LayerPtr layer, int input);
  int add_sum(std::string name, int a, int b);
  /// Index of the most recently added node (kGraphInput when empty).
  int last() const { return static_cast<int>(nodes_.size()) - 1; }

  std::size_t size() const { return nodes_.size(); }
  Node& node(int i) { return nodes_.at(static_cast<std::size_t>(i)); }
  const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  const std::vector<Node>& nodes() const { return nodes_; }
  int find(const std::string& name) const;
  /// Nodes that read node i's output.
  std::vector<int> consumers(int i) const;

  /// Called with each node's output right after it is computed.
  using Observer = std::function<void(int node, const Tensor& output)>;

  /// Runs every node in order and returns the last node's output.
  Tensor forward(const Tensor& x, Phase phase, const Observer& observer = {});
  /// Back-propagates from the last node; returns d loss / d input.
  Tensor backward(const Tensor& grad_out);

  void zero_grad();
  std::vector<NamedParam> params();
  std::vector<NamedBuffer> buffers();
  std::size_t param_count();

  /// Output shape of every node for a given input shape.
  std::vector<Shape> infer_shapes(const Shape& input) const;

  /// One line per node: index, name, type, config, parameter count.
  std::vector<std::string> describe();

  /// Concatenated piecewise-regime signature of the last forward pass.
  std::vector<std::int64_t> regime() const;

  /// Free-form description of how the graph was built (arch spec string).
  std::string label;

 private:
  std::vector<Node> nodes_;
};

}  // namespace mpelu
