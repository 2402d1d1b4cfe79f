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

#include "morphgen/embedders.hpp"
#include "morphgen/generator.hpp"
#include "morphgen/graph.hpp"
#include "morphgen/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace morphgen::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Runs `body`, timing it and turning exceptions into a failed result.
CheckResult run_check(const std::string& name, const std::function<CheckResult()>& body);

/// 16x16 generator used by the gradient and optimization checks.
gen::GeneratorConfig small_generator_config(std::uint64_t seed = 3);
emb::EmbedderConfig small_embedder_config();
/// 32x32 configuration of the landmark enforcement check; the 16x16 localizer
/// is too coarse for the morph midpoint comparison.
gen::GeneratorConfig landmark_generator_config();
emb::EmbedderConfig landmark_embedder_config();

/// A scalar-valued graph whose trainable leaves are probed by finite differences.
struct GradientCase {
    std::string name;
    std::function<tc::NodeId(tc::Graph&, tc::Bindings&, Rng&)> build;
    /// Elements probed per leaf; 0 probes all of them.
    std::size_t max_elements = 0;
};

/// One case per differentiable graph op.
std::vector<GradientCase> op_gradient_cases();
/// Synthesis, the three embedders and every inversion and noise-training loss
/// term on the 16x16 configuration.
std::vector<GradientCase> model_gradient_cases();

/// Finite-difference sweep at rel. tol 1e-4. `analytic_scale` != 1 corrupts the
/// analytic gradients so the sweep must fail.
CheckResult gradient_suite(double analytic_scale = 1.0);

CheckResult self_inversion();
CheckResult landmark_enforcement();
CheckResult noise_cutoff();
CheckResult pca_blend_oracles();
CheckResult pca_round_trip();
CheckResult noise_training();
CheckResult metrics_oracles();
CheckResult geometry();
CheckResult noise_regularization_oracle();

} // namespace morphgen::checks
