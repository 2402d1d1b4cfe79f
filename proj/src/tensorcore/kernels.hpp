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

#include "morphgen/graph.hpp"

#include <span>

namespace morphgen::tc::detail {

Tensor forward(const Node& node, std::span<const Tensor* const> inputs);

/// Accumulates input gradients into grads[k] for every k where grads[k] is
/// non-null. grads[k] is pre-sized to the input's shape.
void backward(const Node& node, std::span<const Tensor* const> inputs, const Tensor& output,
              const Tensor& grad_output, std::span<Tensor* const> grads);

bool differentiable(Op op);

} // namespace morphgen::tc::detail
