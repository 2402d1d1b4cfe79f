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
#include "morphgen/image.hpp"
#include "morphgen/rng.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace morphgen::gen {

/// Which latent row feeds a block's RGB conversion layer: the row after the
/// block's last conv (`Next`, all L rows used) or the row of that conv
/// (`Previous`, the last row is unused).
enum class RgbLatent { Next, Previous };

struct GeneratorConfig {
    std::size_t resolution = 64;
    std::size_t latent_dim = 64;
    std::size_t mapping_depth = 4;
    /// Channels at resolution r are min(max_channels, channel_base / r), at least 1.
    std::size_t channel_base = 512;
    std::size_t max_channels = 32;
    double noise_strength = 0.1;
    RgbLatent rgb_latent = RgbLatent::Next;
    std::uint64_t seed = 0;

    /// Throws InputError unless resolution is a power of two >= 8 and all sizes are positive.
    void validate() const;

    std::size_t num_blocks() const;      // log2(R / 4)
    std::size_t num_latents() const;     // L = 2 log2(R/4) + 2
    std::size_t num_conv_layers() const; // L - 1, one noise map each
    std::size_t num_rgb_layers() const;  // log2(R/4) + 1
    std::size_t num_styles() const;      // conv + rgb layers
    std::size_t channels_at(std::size_t res) const;

    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

struct Layer {
    enum class Kind { Conv, ToRgb };
    Kind kind = Kind::Conv;
    std::size_t resolution = 4;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t latent_index = 0;
    bool upsample = false;        // conv preceded by 2x bilinear upsampling
    std::size_t noise_index = 0;  // conv layers only
};

/// Layers in synthesis order; style i belongs to layers()[i].
std::vector<Layer> layer_table(const GeneratorConfig& config);

using LatentCode = Eigen::MatrixXd;            // L x n_w
using StyleSet = std::vector<Eigen::VectorXd>; // n_s vectors, dims = layer input channels
using NoiseMaps = std::vector<Eigen::MatrixXd>;

std::vector<std::size_t> style_dims(const GeneratorConfig& config);

struct GeneratorWeights {
    GeneratorConfig config;
    std::vector<tc::Tensor> mapping_weight; // [n_w, n_w], equalized scale folded in
    std::vector<tc::Tensor> mapping_bias;   // [n_w]
    tc::Tensor constant_input;              // [C_4, 4, 4]
    std::vector<tc::Tensor> affine_weight;  // per layer [C_in, n_w]
    std::vector<tc::Tensor> affine_bias;    // per layer [C_in], initialized to 1
    std::vector<tc::Tensor> conv_weight;    // per layer [C_out, C_in, k, k]
    std::vector<tc::Tensor> conv_bias;      // per layer [C_out]
    std::vector<double> noise_strength;     // per conv layer
    /// Multiplies the raw RGB sum before mapping to [0, 1]; set at init so
    /// seeded images have a standard deviation of about 0.2.
    double output_gain = 1.0;

    friend bool operator==(const GeneratorWeights&, const GeneratorWeights&) = default;
};

/// Seeded initialization; every value is representable in f32 so weight
/// files round-trip exactly.
GeneratorWeights init_weights(const GeneratorConfig& config);

/// Writes `<path>` (flat MFTN) and `<path>.json` (config + tensor layout).
void save_weights(const std::filesystem::path& path, const GeneratorWeights& weights);
GeneratorWeights load_weights(const std::filesystem::path& path);

// Graph builders. Weights enter as constants.
tc::NodeId build_mapping(tc::Graph& graph, tc::NodeId z, const GeneratorWeights& weights);
/// W: [L, n_w] node. Returns n_s style nodes.
std::vector<tc::NodeId> build_styles(tc::Graph& graph, tc::NodeId latent, const GeneratorWeights& weights);
/// Returns a [3, R, R] node with values in [0, 1].
tc::NodeId build_synthesis(tc::Graph& graph, std::span<const tc::NodeId> styles, std::span<const tc::NodeId> noise,
                           const GeneratorWeights& weights);
/// Noise leaves, one [r, r] leaf per conv layer.
std::vector<tc::NodeId> noise_leaves(tc::Graph& graph, const GeneratorConfig& config, bool trainable);

Eigen::VectorXd map_latent(const Eigen::VectorXd& z, const GeneratorWeights& weights);
LatentCode broadcast_latent(const Eigen::VectorXd& w, const GeneratorConfig& config);
StyleSet affine_styles(const LatentCode& latent, const GeneratorWeights& weights);
Image synthesize(const StyleSet& styles, const NoiseMaps& noise, const GeneratorWeights& weights);
Image synthesize_from_w(const LatentCode& latent, const NoiseMaps& noise, const GeneratorWeights& weights);

/// Mean of `samples` mapped N(0, I) latents.
Eigen::VectorXd mean_latent(const GeneratorWeights& weights, std::size_t samples, std::uint64_t seed);

NoiseMaps zero_noise(const GeneratorConfig& config);
NoiseMaps random_noise(const GeneratorConfig& config, Rng& rng);

void check_latent(const LatentCode& latent, const GeneratorConfig& config);
void check_styles(const StyleSet& styles, const GeneratorConfig& config);
void check_noise(const NoiseMaps& noise, const GeneratorConfig& config);

// Flat MFTN encodings. Styles and noise maps are concatenated in layer order.
tc::Tensor latent_to_tensor(const LatentCode& latent);
LatentCode latent_from_tensor(const tc::Tensor& tensor, const GeneratorConfig& config);
tc::Tensor styles_to_tensor(const StyleSet& styles);
StyleSet styles_from_tensor(const tc::Tensor& tensor, const GeneratorConfig& config);
tc::Tensor noise_to_tensor(const NoiseMaps& noise);
NoiseMaps noise_from_tensor(const tc::Tensor& tensor, const GeneratorConfig& config);

std::string to_string(RgbLatent mode);
RgbLatent rgb_latent_from_string(const std::string& text);

} // namespace morphgen::gen
