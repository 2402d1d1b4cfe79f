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

#include "morphgen/graph.hpp"

#include "kernels.hpp"
#include "morphgen/error.hpp"

#include <algorithm>

namespace morphgen::tc {

const char* op_name(Op op)
{
    switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Scale: return "scale";
    case Op::Offset: return "offset";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Log: return "log";
    case Op::Abs: return "abs";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Clamp: return "clamp";
    case Op::Round: return "round";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SumAxis: return "sum_axis";
    case Op::L1Norm: return "l1_norm";
    case Op::L2Norm: return "l2_norm";
    case Op::Reshape: return "reshape";
    case Op::Broadcast: return "broadcast";
    case Op::Roll: return "roll";
    case Op::Select: return "select";
    case Op::Linear: return "linear";
    case Op::Conv2d: return "conv2d";
    case Op::Modulate: return "modulate";
    case Op::Resize: return "resize_bilinear";
    case Op::AvgPool2x: return "avgpool_2x";
    case Op::SoftmaxSpatial: return "softmax_spatial";
    }
    return "?";
}

NodeId Graph::push(Node node)
{
    for (const NodeId in : node.inputs) {
        if (in.index >= nodes_.size()) {
            throw InputError("node input refers to a node that does not exist yet");
        }
    }
    nodes_.push_back(std::move(node));
    return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Node& Graph::checked(NodeId id) const
{
    if (id.index >= nodes_.size()) {
        throw InputError("unknown node id " + std::to_string(id.index));
    }
    return nodes_[id.index];
}

NodeId Graph::leaf(Shape shape, std::string name, bool trainable)
{
    Node n;
    n.op = Op::Leaf;
    n.shape = std::move(shape);
    n.name = std::move(name);
    n.trainable = trainable;
    return push(std::move(n));
}

NodeId Graph::constant(Tensor value)
{
    return constant(std::make_shared<const Tensor>(std::move(value)));
}

NodeId Graph::constant(std::shared_ptr<const Tensor> value)
{
    Node n;
    n.op = Op::Constant;
    n.shape = value->shape();
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Graph::elementwise(Op op, NodeId a, NodeId b)
{
    const Shape& sa = checked(a).shape;
    const Shape& sb = checked(b).shape;
    if (sa != sb) {
        throw ShapeError(std::string(op_name(op)) + ": shapes " + to_string(sa) + " and " + to_string(sb) +
                         " differ");
    }
    Node n;
    n.op = op;
    n.inputs = {a, b};
    n.shape = sa;
    return push(std::move(n));
}

NodeId Graph::unary(Op op, NodeId x, double a, double b)
{
    Node n;
    n.op = op;
    n.inputs = {x};
    n.shape = checked(x).shape;
    n.a = a;
    n.b = b;
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) { return elementwise(Op::Add, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return elementwise(Op::Sub, a, b); }
NodeId Graph::mul(NodeId a, NodeId b) { return elementwise(Op::Mul, a, b); }
NodeId Graph::div(NodeId a, NodeId b) { return elementwise(Op::Div, a, b); }
NodeId Graph::scale(NodeId x, double factor) { return unary(Op::Scale, x, factor); }
NodeId Graph::offset(NodeId x, double amount) { return unary(Op::Offset, x, amount); }
NodeId Graph::square(NodeId x) { return unary(Op::Square, x); }
NodeId Graph::sqrt(NodeId x) { return unary(Op::Sqrt, x); }
NodeId Graph::log(NodeId x) { return unary(Op::Log, x); }
NodeId Graph::abs(NodeId x) { return unary(Op::Abs, x); }
NodeId Graph::leaky_relu(NodeId x, double slope) { return unary(Op::LeakyRelu, x, slope); }

NodeId Graph::clamp(NodeId x, double lo, double hi)
{
    if (!(lo <= hi)) {
        throw InputError("clamp: lo must not exceed hi");
    }
    return unary(Op::Clamp, x, lo, hi);
}

NodeId Graph::round(NodeId x, double levels)
{
    if (!(levels > 0.0)) {
        throw InputError("round: levels must be positive");
    }
    return unary(Op::Round, x, levels);
}

NodeId Graph::sum(NodeId x)
{
    Node n;
    n.op = Op::Sum;
    n.inputs = {x};
    checked(x);
    return push(std::move(n));
}

NodeId Graph::mean(NodeId x)
{
    Node n;
    n.op = Op::Mean;
    n.inputs = {x};
    checked(x);
    return push(std::move(n));
}

NodeId Graph::sum_axis(NodeId x, std::size_t axis)
{
    const Shape& s = checked(x).shape;
    if (axis >= s.size()) {
        throw ShapeError("sum_axis: axis " + std::to_string(axis) + " out of range for " + to_string(s));
    }
    Node n;
    n.op = Op::SumAxis;
    n.inputs = {x};
    n.axis = static_cast<std::int64_t>(axis);
    n.shape = s;
    n.shape.erase(n.shape.begin() + static_cast<std::ptrdiff_t>(axis));
    return push(std::move(n));
}

NodeId Graph::l1_norm(NodeId x)
{
    Node n;
    n.op = Op::L1Norm;
    n.inputs = {x};
    checked(x);
    return push(std::move(n));
}

NodeId Graph::l2_norm(NodeId x)
{
    Node n;
    n.op = Op::L2Norm;
    n.inputs = {x};
    checked(x);
    return push(std::move(n));
}

NodeId Graph::reshape(NodeId x, Shape shape)
{
    const Shape& s = checked(x).shape;
    if (element_count(s) != element_count(shape)) {
        throw ShapeError("reshape: " + to_string(s) + " to " + to_string(shape));
    }
    Node n;
    n.op = Op::Reshape;
    n.inputs = {x};
    n.shape = std::move(shape);
    return push(std::move(n));
}

NodeId Graph::broadcast(NodeId x, Shape shape)
{
    const Shape& s = checked(x).shape;
    bool ok = s.size() <= shape.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
        const std::size_t in_dim = s[s.size() - 1 - i];
        const std::size_t out_dim = shape[shape.size() - 1 - i];
        ok = in_dim == 1 || in_dim == out_dim;
    }
    if (!ok) {
        throw ShapeError("broadcast: " + to_string(s) + " to " + to_string(shape));
    }
    Node n;
    n.op = Op::Broadcast;
    n.inputs = {x};
    n.shape = std::move(shape);
    return push(std::move(n));
}

NodeId Graph::roll(NodeId x, std::size_t axis, std::int64_t shift)
{
    const Shape& s = checked(x).shape;
    if (axis >= s.size()) {
        throw ShapeError("roll: axis out of range for " + to_string(s));
    }
    Node n;
    n.op = Op::Roll;
    n.inputs = {x};
    n.shape = s;
    n.axis = static_cast<std::int64_t>(axis);
    n.shift = shift;
    return push(std::move(n));
}

NodeId Graph::select(NodeId x, std::size_t index)
{
    const Shape& s = checked(x).shape;
    if (s.empty() || index >= s[0]) {
        throw ShapeError("select: index " + std::to_string(index) + " out of range for " + to_string(s));
    }
    Node n;
    n.op = Op::Select;
    n.inputs = {x};
    n.shape = Shape(s.begin() + 1, s.end());
    n.axis = static_cast<std::int64_t>(index); // selected index, not an axis
    return push(std::move(n));
}

NodeId Graph::linear(NodeId x, NodeId weight, std::optional<NodeId> bias)
{
    const Shape& sx = checked(x).shape;
    const Shape& sw = checked(weight).shape;
    if (sw.size() != 2 || sx.empty() || sx.size() > 2 || sx.back() != sw[1]) {
        throw ShapeError("linear: input " + to_string(sx) + " with weight " + to_string(sw));
    }
    Node n;
    n.op = Op::Linear;
    n.inputs = {x, weight};
    if (bias) {
        if (checked(*bias).shape != Shape{sw[0]}) {
            throw ShapeError("linear: bias " + to_string(checked(*bias).shape) + " for weight " + to_string(sw));
        }
        n.inputs.push_back(*bias);
    }
    n.shape = sx.size() == 1 ? Shape{sw[0]} : Shape{sx[0], sw[0]};
    return push(std::move(n));
}

NodeId Graph::conv2d(NodeId x, NodeId weight, std::optional<NodeId> bias)
{
    const Shape& sx = checked(x).shape;
    const Shape& sw = checked(weight).shape;
    if (sx.size() != 3 || sw.size() != 4 || sw[1] != sx[0] || sw[2] != sw[3] || sw[2] % 2 == 0) {
        throw ShapeError("conv2d: input " + to_string(sx) + " with weight " + to_string(sw));
    }
    Node n;
    n.op = Op::Conv2d;
    n.inputs = {x, weight};
    if (bias) {
        if (checked(*bias).shape != Shape{sw[0]}) {
            throw ShapeError("conv2d: bias shape " + to_string(checked(*bias).shape));
        }
        n.inputs.push_back(*bias);
    }
    n.shape = {sw[0], sx[1], sx[2]};
    return push(std::move(n));
}

NodeId Graph::modulate(NodeId weight, NodeId style, bool demodulate, double eps)
{
    const Shape& sw = checked(weight).shape;
    const Shape& ss = checked(style).shape;
    if (sw.size() != 4 || ss.size() != 1 || ss[0] != sw[1]) {
        throw ShapeError("modulate: weight " + to_string(sw) + " with style " + to_string(ss));
    }
    Node n;
    n.op = Op::Modulate;
    n.inputs = {weight, style};
    n.shape = sw;
    n.flag = demodulate;
    n.a = eps;
    return push(std::move(n));
}

NodeId Graph::modulated_conv2d(NodeId x, NodeId weight, NodeId style, bool demodulate)
{
    return conv2d(x, modulate(weight, style, demodulate));
}

NodeId Graph::resize_bilinear(NodeId x, std::size_t height, std::size_t width)
{
    const Shape& s = checked(x).shape;
    if (s.size() < 2 || height == 0 || width == 0 || s[s.size() - 1] == 0 || s[s.size() - 2] == 0) {
        throw ShapeError("resize_bilinear: " + to_string(s) + " to " + std::to_string(height) + "x" +
                         std::to_string(width));
    }
    Node n;
    n.op = Op::Resize;
    n.inputs = {x};
    n.shape = s;
    n.shape[s.size() - 2] = height;
    n.shape[s.size() - 1] = width;
    return push(std::move(n));
}

NodeId Graph::upsample_2x(NodeId x)
{
    const Shape& s = checked(x).shape;
    if (s.size() < 2) {
        throw ShapeError("upsample_2x: " + to_string(s));
    }
    return resize_bilinear(x, 2 * s[s.size() - 2], 2 * s[s.size() - 1]);
}

NodeId Graph::avgpool_2x(NodeId x)
{
    const Shape& s = checked(x).shape;
    if (s.size() < 2 || s[s.size() - 1] % 2 != 0 || s[s.size() - 2] % 2 != 0 || s.back() == 0) {
        throw ShapeError("avgpool_2x: " + to_string(s));
    }
    Node n;
    n.op = Op::AvgPool2x;
    n.inputs = {x};
    n.shape = s;
    n.shape[s.size() - 2] /= 2;
    n.shape[s.size() - 1] /= 2;
    return push(std::move(n));
}

NodeId Graph::softmax_spatial(NodeId x)
{
    const Shape& s = checked(x).shape;
    if (s.size() < 2 || element_count(s) == 0) {
        throw ShapeError("softmax_spatial: " + to_string(s));
    }
    return unary(Op::SoftmaxSpatial, x);
}

std::vector<NodeId> Graph::trainable_leaves() const
{
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].op == Op::Leaf && nodes_[i].trainable) {
            out.push_back(NodeId{static_cast<std::uint32_t>(i)});
        }
    }
    return out;
}

const Tensor* Bindings::find(NodeId leaf) const
{
    const auto it = values_.find(leaf.index);
    return it == values_.end() ? nullptr : &it->second;
}

const Tensor& Values::operator[](NodeId id) const
{
    if (!has(id)) {
        throw InputError("value of node " + std::to_string(id.index) + " was not computed");
    }
    return values_[id.index];
}

const Tensor& GradientResult::operator[](NodeId leaf) const
{
    const auto it = by_leaf.find(leaf.index);
    if (it == by_leaf.end()) {
        throw InputError("no gradient recorded for node " + std::to_string(leaf.index));
    }
    return it->second;
}

namespace {

std::vector<bool> required_nodes(const Graph& graph, std::span<const NodeId> outputs)
{
    std::vector<bool> needed(graph.size(), false);
    for (const NodeId out : outputs) {
        if (out.index >= graph.size()) {
            throw InputError("unknown output node " + std::to_string(out.index));
        }
        needed[out.index] = true;
    }
    for (std::size_t i = graph.size(); i-- > 0;) {
        if (!needed[i]) {
            continue;
        }
        for (const NodeId in : graph.node(NodeId{static_cast<std::uint32_t>(i)}).inputs) {
            needed[in.index] = true;
        }
    }
    return needed;
}

void forward_into(const Graph& graph, const Bindings& bindings, const std::vector<bool>& needed, Values& values)
{
    std::vector<const Tensor*> inputs;
    for (std::uint32_t i = 0; i < graph.size(); ++i) {
        if (!needed[i]) {
            continue;
        }
        const NodeId id{i};
        const Node& node = graph.node(id);
        if (node.op == Op::Leaf) {
            const Tensor* bound = bindings.find(id);
            if (bound == nullptr) {
                throw InputError("leaf '" + node.name + "' (node " + std::to_string(i) + ") is not bound");
            }
            if (bound->shape() != node.shape) {
                throw ShapeError("leaf '" + node.name + "' bound with shape " + to_string(bound->shape()) +
                                 ", expected " + to_string(node.shape));
            }
            values.set(id, *bound);
            continue;
        }
        if (node.op == Op::Constant) {
            values.set(id, *node.value);
            continue;
        }
        inputs.clear();
        for (const NodeId in : node.inputs) {
            inputs.push_back(&values[in]);
        }
        Tensor out = detail::forward(node, inputs);
        if (!out.all_finite()) {
            throw NumericalError(std::string("non-finite value produced by ") + op_name(node.op) + " at node " +
                                 std::to_string(i));
        }
        values.set(id, std::move(out));
    }
}

} // namespace

Values evaluate(const Graph& graph, const Bindings& bindings, std::span<const NodeId> outputs)
{
    const std::vector<bool> needed = required_nodes(graph, outputs);
    Values values(graph.size());
    forward_into(graph, bindings, needed, values);
    return values;
}

Values evaluate(const Graph& graph, const Bindings& bindings, NodeId output)
{
    return evaluate(graph, bindings, std::span<const NodeId>(&output, 1));
}

double scalar_value(const Graph& graph, NodeId output, const Bindings& bindings)
{
    return evaluate(graph, bindings, output)[output].item();
}

GradientResult gradients(const Graph& graph, NodeId output, const Bindings& bindings, std::span<const NodeId> wrt)
{
    if (!graph.shape(output).empty()) {
        throw ShapeError("gradients: output must be rank 0, got " + to_string(graph.shape(output)));
    }
    std::vector<NodeId> targets(wrt.begin(), wrt.end());
    if (targets.empty()) {
        targets = graph.trainable_leaves();
    }

    const std::vector<bool> needed = required_nodes(graph, std::span<const NodeId>(&output, 1));
    GradientResult result{Values(graph.size()), {}, 0.0};
    forward_into(graph, bindings, needed, result.forward);
    result.value = result.forward[output].item();

    // A node carries gradient if it depends on a target leaf.
    std::vector<bool> carries(graph.size(), false);
    for (const NodeId t : targets) {
        if (t.index >= graph.size() || graph.node(t).op != Op::Leaf) {
            throw InputError("gradients: node " + std::to_string(t.index) + " is not a leaf");
        }
        carries[t.index] = true;
    }
    for (std::uint32_t i = 0; i < graph.size(); ++i) {
        for (const NodeId in : graph.node(NodeId{i}).inputs) {
            if (carries[in.index]) {
                carries[i] = true;
            }
        }
    }

    std::vector<Tensor> adjoint(graph.size());
    std::vector<bool> has_adjoint(graph.size(), false);
    adjoint[output.index] = Tensor::scalar(1.0);
    has_adjoint[output.index] = true;

    std::vector<const Tensor*> inputs;
    std::vector<Tensor*> grads;
    for (std::uint32_t i = output.index + 1; i-- > 0;) {
        if (!needed[i] || !has_adjoint[i] || !carries[i]) {
            continue;
        }
        const Node& node = graph.node(NodeId{i});
        if (node.op == Op::Leaf || node.op == Op::Constant) {
            continue;
        }
        if (!detail::differentiable(node.op)) {
            throw InputError(std::string("gradients: non-differentiable op ") + op_name(node.op) + " at node " +
                             std::to_string(i) + " lies on the gradient path");
        }
        inputs.clear();
        grads.clear();
        for (const NodeId in : node.inputs) {
            inputs.push_back(&result.forward[in]);
            if (carries[in.index]) {
                if (!has_adjoint[in.index]) {
                    adjoint[in.index] = Tensor(graph.shape(in));
                    has_adjoint[in.index] = true;
                }
                grads.push_back(&adjoint[in.index]);
            } else {
                grads.push_back(nullptr);
            }
        }
        detail::backward(node, inputs, result.forward[NodeId{i}], adjoint[i], grads);
        adjoint[i] = Tensor(); // release
    }

    for (const NodeId t : targets) {
        Tensor g = has_adjoint[t.index] ? std::move(adjoint[t.index]) : Tensor(graph.shape(t));
        if (!g.all_finite()) {
            throw NumericalError("non-finite gradient for leaf '" + graph.node(t).name + "'");
        }
        result.by_leaf.emplace(t.index, std::move(g));
    }
    return result;
}

} // namespace morphgen::tc
