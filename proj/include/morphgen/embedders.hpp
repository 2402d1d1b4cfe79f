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

#include "morphgen/geometry.hpp"
#include "morphgen/graph.hpp"
#include "morphgen/image.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace morphgen::emb {

struct EmbedderConfig {
    /// Resolution of the images being embedded (the generator resolution R).
    std::size_t image_size = 64;
    /// Perceptual/identity input size D; 0 selects R, or R / 4 when R >= 1024.
    std::size_t input_size = 0;
    std::size_t landmarks = 16;
    /// Heatmap sharpness: logits are beta * r^2 / mean(r^2) per channel for a
    /// localizer response r.
    double localizer_beta = 1.0;
    std::size_t identity_dim = 32;
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t resolved_input_size() const;

    friend bool operator==(const EmbedderConfig&, const EmbedderConfig&) = default;
};

/// Three frozen conv stacks. Weights are [C_out, C_in, 3, 3]; only the
/// perceptual stack has (seeded, nonzero) biases.
struct EmbedderWeights {
    EmbedderConfig config;
    std::vector<tc::Tensor> perceptual; // 3 -> 8 -> 16 -> 32, pooled between layers
    std::vector<tc::Tensor> perceptual_bias;
    std::vector<tc::Tensor> localizer;  // 3 -> 8 -> 8 -> k at full resolution
    std::vector<tc::Tensor> identity;   // 3 -> 8 -> 16 -> 32, pooled between layers
    tc::Tensor identity_head;           // [identity_dim, 32]

    friend bool operator==(const EmbedderWeights&, const EmbedderWeights&) = default;
};

EmbedderWeights init_embedders(const EmbedderConfig& config);
void save_embedders(const std::filesystem::path& path, const EmbedderWeights& weights);
EmbedderWeights load_embedders(const std::filesystem::path& path);

// Graph builders; `image` is a [3, R, R] node in [0, 1].
/// Per-layer feature maps, unit-normalized across channels at every pixel and
/// scaled by 1/sqrt(HW) so each layer has unit total energy.
std::vector<tc::NodeId> build_perceptual_features(tc::Graph& graph, tc::NodeId image, const EmbedderWeights& weights);
/// Scalar L2 distance between concatenated feature stacks.
tc::NodeId build_perceptual_distance(tc::Graph& graph, tc::NodeId a, tc::NodeId b, const EmbedderWeights& weights);
/// Distance to precomputed target features (as returned by perceptual_features).
tc::NodeId build_perceptual_distance_to(tc::Graph& graph, tc::NodeId image, const std::vector<tc::Tensor>& target,
                                        const EmbedderWeights& weights);
/// [k, 2] landmark coordinates (x, y) in pixels via spatial soft-argmax.
tc::NodeId build_localizer(tc::Graph& graph, tc::NodeId image, const EmbedderWeights& weights);
/// Unit-norm [identity_dim] embedding.
tc::NodeId build_identity(tc::Graph& graph, tc::NodeId image, const EmbedderWeights& weights);

std::vector<tc::Tensor> perceptual_features(const Image& image, const EmbedderWeights& weights);
double perceptual_distance(const Image& a, const Image& b, const EmbedderWeights& weights);
geom::LandmarkSet localize_landmarks(const Image& image, const EmbedderWeights& weights);
/// Throws NumericalError when the raw embedding has zero norm.
Eigen::VectorXd identity_embed(const Image& image, const EmbedderWeights& weights);
double identity_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

} // namespace morphgen::emb
