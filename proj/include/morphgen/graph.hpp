// Copyright 2026 The morphgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "morphgen/tensor.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace morphgen::tc {

struct NodeId {
    std::uint32_t index = 0;
    auto operator<=>(const NodeId&) const = default;
};

enum class Op : std::uint8_t {
    Leaf,
    Constant,
    Add,
    Sub,
    Mul,
    Div,
    Scale,
    Offset,
    Square,
    Sqrt,
    Log,
    Abs,
    LeakyRelu,
    Clamp,
    Round,
    Sum,
    Mean,
    SumAxis,
    L1Norm,
    L2Norm,
    Reshape,
    Broadcast,
    Roll,
    Select,
    Linear,
    Conv2d,
    Modulate,
    Resize,
    AvgPool2x,
    SoftmaxSpatial,
};

const char* op_name(Op op);

struct Node {
    Op op = Op::Leaf;
    std::vector<NodeId> inputs;
    Shape shape;
    double a = 0.0;
    double b = 0.0;
    std::int64_t axis = 0;
    std::int64_t shift = 0;
    bool flag = false;
    std::shared_ptr<const Tensor> value;
    std::string name;
    bool trainable = false;
};

/// Append-only dataflow graph. Nodes are created in topological order, so a
/// node's inputs always have smaller ids. Shapes are inferred at build time
/// and every builder throws ShapeError on inconsistent operands.
class Graph {
public:
    NodeId leaf(Shape shape, std::string name, bool trainable = false);
    NodeId constant(Tensor value);
    NodeId constant(std::shared_ptr<const Tensor> value);
    NodeId scalar(double value) { return constant(Tensor::scalar(value)); }

    // Elementwise, identical shapes.
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId div(NodeId a, NodeId b);

    NodeId scale(NodeId x, double factor);
    NodeId offset(NodeId x, double amount);
    NodeId square(NodeId x);
    /// Gradient is taken as zero where the output is zero.
    NodeId sqrt(NodeId x);
    NodeId log(NodeId x);
    NodeId abs(NodeId x);
    NodeId leaky_relu(NodeId x, double slope);
    NodeId clamp(NodeId x, double lo, double hi);
    /// Rounds to the nearest multiple of 1/levels. Not differentiable.
    NodeId round(NodeId x, double levels);

    NodeId sum(NodeId x);
    NodeId mean(NodeId x);
    NodeId sum_axis(NodeId x, std::size_t axis);
    NodeId l1_norm(NodeId x);
    /// Gradient is taken as zero at the origin.
    NodeId l2_norm(NodeId x);

    NodeId reshape(NodeId x, Shape shape);
    /// Right-aligned broadcasting: every input extent is 1 or equals the target extent.
    NodeId broadcast(NodeId x, Shape shape);
    /// y[i] = x[(i - shift) mod n] along axis (wraparound).
    NodeId roll(NodeId x, std::size_t axis, std::int64_t shift);
    /// Index along axis 0, dropping it.
    NodeId select(NodeId x, std::size_t index);

    /// x: [n_in] or [B, n_in], weight: [n_out, n_in], bias: [n_out].
    NodeId linear(NodeId x, NodeId weight, std::optional<NodeId> bias = std::nullopt);
    /// x: [C_in, H, W], weight: [C_out, C_in, k, k] with k odd. Stride 1, zero padding k/2.
    NodeId conv2d(NodeId x, NodeId weight, std::optional<NodeId> bias = std::nullopt);
    /// Scales weight[o, i, :, :] by style[i]; with demodulate, each output
    /// filter is divided by sqrt(sum of its squared scaled weights + eps).
    NodeId modulate(NodeId weight, NodeId style, bool demodulate, double eps = 1e-8);
    NodeId modulated_conv2d(NodeId x, NodeId weight, NodeId style, bool demodulate);
    /// Bilinear resampling of the last two axes, corner-aligned, border clamped.
    NodeId resize_bilinear(NodeId x, std::size_t height, std::size_t width);
    NodeId upsample_2x(NodeId x);
    /// 2x2 mean pooling over the last two axes (extents must be even).
    NodeId avgpool_2x(NodeId x);
    /// Softmax over the last two axes jointly, independently per leading index.
    NodeId softmax_spatial(NodeId x);

    const Node& node(NodeId id) const { return nodes_.at(id.index); }
    const Shape& shape(NodeId id) const { return node(id).shape; }
    std::size_t size() const { return nodes_.size(); }
    std::vector<NodeId> trainable_leaves() const;

private:
    NodeId push(Node node);
    const Node& checked(NodeId id) const;
    NodeId elementwise(Op op, NodeId a, NodeId b);
    NodeId unary(Op op, NodeId x, double a = 0.0, double b = 0.0);

    std::vector<Node> nodes_;
};

class Bindings {
public:
    Bindings& bind(NodeId leaf, Tensor value)
    {
        values_[leaf.index] = std::move(value);
        return *this;
    }
    const Tensor* find(NodeId leaf) const;

private:
    std::unordered_map<std::uint32_t, Tensor> values_;
};

/// Forward values indexed by node id; only nodes needed for the requested
/// outputs are populated.
class Values {
public:
    explicit Values(std::size_t n) : values_(n), present_(n, false) {}

    const Tensor& operator[](NodeId id) const;
    bool has(NodeId id) const { return id.index < present_.size() && present_[id.index]; }
    void set(NodeId id, Tensor t)
    {
        values_[id.index] = std::move(t);
        present_[id.index] = true;
    }

private:
    std::vector<Tensor> values_;
    std::vector<bool> present_;
};

/// Forward pass. Throws ShapeError on a leaf bound with the wrong shape and
/// NumericalError naming the node if any intermediate is non-finite.
Values evaluate(const Graph& graph, const Bindings& bindings, std::span<const NodeId> outputs);
Values evaluate(const Graph& graph, const Bindings& bindings, NodeId output);

struct GradientResult {
    Values forward;
    std::map<std::uint32_t, Tensor> by_leaf;

    double value = 0.0;
    const Tensor& operator[](NodeId leaf) const;
};

/// Reverse-mode gradient of a rank-0 output with respect to `wrt` (all
/// trainable leaves when empty). Throws InputError if a non-differentiable op
/// lies between a requested leaf and the output.
GradientResult gradients(const Graph& graph, NodeId output, const Bindings& bindings,
                         std::span<const NodeId> wrt = {});

/// One evaluation of a scalar function at a point, used by graph-free callers.
double scalar_value(const Graph& graph, NodeId output, const Bindings& bindings);

} // namespace morphgen::tc
