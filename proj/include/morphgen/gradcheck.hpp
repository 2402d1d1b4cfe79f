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

#include <cstdint>
#include <string>
#include <vector>

namespace morphgen::tc {

struct GradCheckOptions {
    double epsilon = 1e-5;
    double tolerance = 1e-4;
    /// Elements probed per leaf; 0 probes all of them. A seeded sample is used otherwise.
    std::size_t max_elements = 0;
    std::uint64_t seed = 0;
    /// Multiplies the analytic gradient before comparison. Only for exercising the checker.
    double analytic_scale = 1.0;
    /// Failing elements whose forward and backward differences disagree are
    /// re-probed with epsilon / 10, up to this many times.
    std::size_t kink_retries = 2;
};

struct LeafCheck {
    NodeId leaf;
    std::string name;
    std::size_t elements_checked = 0;
    std::size_t kink_reprobes = 0;
    double max_rel_error = 0.0;
    bool passed = false;
};

struct GradCheckReport {
    std::vector<LeafCheck> leaves;
    std::string failure; // set when an evaluation threw

    bool passed() const;
    double worst() const;
};

/// Compares reverse-mode gradients with central differences
/// (f(x+e) - f(x-e)) / 2e element by element. The relative error of one
/// element is |a - n| / max(|a|, |n|, 1e-3 * leaf scale, 1e-12), where the
/// leaf scale is the largest gradient magnitude seen on that leaf. Elements
/// whose step straddles a non-smooth point are re-probed with smaller steps. Never
/// throws; evaluation failures are reported.
GradCheckReport finite_diff_check(const Graph& graph, NodeId output, const Bindings& bindings,
                                  const GradCheckOptions& options = {}, std::span<const NodeId> wrt = {});

} // namespace morphgen::tc
