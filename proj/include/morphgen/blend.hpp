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

#include "morphgen/generator.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace morphgen::blend {

/// PCA of one style index. Columns of `vectors` are orthonormal and sorted by
/// descending eigenvalue.
struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd vectors;     // d x e
    Eigen::VectorXd eigenvalues; // e

    std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
    std::size_t components() const { return static_cast<std::size_t>(vectors.cols()); }

    friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

using PcaModels = std::vector<PcaModel>;

gen::LatentCode average_latents(const gen::LatentCode& a, const gen::LatentCode& b);
gen::StyleSet average_styles(const gen::StyleSet& a, const gen::StyleSet& b);

/// Rows are samples. Keeps min(rows - 1, cols) components.
PcaModel fit_pca(const Eigen::MatrixXd& samples);
/// One model per style index, fitted on up to `jobs` threads.
PcaModels fit_style_pca(const std::vector<gen::StyleSet>& corpus, std::size_t jobs = 1);

/// Styles of `samples` seeded mapped latents (broadcast to every row).
std::vector<gen::StyleSet> style_corpus(const gen::GeneratorWeights& weights, std::size_t samples,
                                        std::uint64_t seed);

/// Coefficients of the mean-centered vector on the model basis.
Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& style);
/// mean + vectors * coefficients.
Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& coefficients);

/// Number of leading components that are averaged: ceil(p * e), clamped to [0, e].
std::size_t head_size(double p, std::size_t components);

enum class MaxRule { Signed, Magnitude };

// Blends average the first head_size coefficients. The part of each style
// outside a truncated basis is averaged and added back, so p = 1 equals
// plain averaging for any basis size.
gen::StyleSet blend_elementwise_max(const gen::StyleSet& a, const gen::StyleSet& b, const PcaModels& models,
                                    double p, MaxRule rule = MaxRule::Signed);
/// Tail coefficients come from the subject whose tail has the larger L2 norm;
/// subject `a` wins ties.
gen::StyleSet blend_norm_select(const gen::StyleSet& a, const gen::StyleSet& b, const PcaModels& models, double p);

enum class BlendMode { Average, PcaMax, PcaNorm };
BlendMode blend_mode_from_string(const std::string& text);
std::string to_string(BlendMode mode);

/// `models` may be null for BlendMode::Average.
gen::StyleSet morph_styles(const gen::StyleSet& a, const gen::StyleSet& b, BlendMode mode, double p,
                           const PcaModels* models, MaxRule rule = MaxRule::Signed);

/// Fraction of total variance carried by the first ceil(fraction * e) eigenvalues.
double variance_fraction(const PcaModel& model, double fraction);

/// Directory holding manifest.json and one MFTN bundle per style index.
void save_pca(const std::filesystem::path& dir, const PcaModels& models);
PcaModels load_pca(const std::filesystem::path& dir);

/// Throws InputError unless models match the style dims of `config`.
void check_models(const PcaModels& models, const gen::GeneratorConfig& config);

} // namespace morphgen::blend
