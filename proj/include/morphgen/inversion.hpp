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
#include "morphgen/error.hpp"
#include "morphgen/generator.hpp"
#include "morphgen/geometry.hpp"
#include "morphgen/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace morphgen::inv {

struct InversionConfig {
    std::size_t steps = 1000;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double lr_peak = 0.1;
    std::size_t lr_rampup_steps = 50;
    std::size_t lr_cosine_rampdown_steps = 600;
    std::size_t latent_noise_hold_steps = 250;
    std::size_t latent_noise_zero_step = 750;
    /// Exploration noise amplitude relative to RMS(W) at step 0.
    double latent_noise_scale = 0.05;
    std::size_t noise_cutoff_step = 400; // T_s
    double lambda_pixel = 0.05;          // λ1
    double lambda_noise = 1e5;           // λ2
    double lambda_latent = 0.1;          // λ3
    double lambda_landmark = 1e-4;       // λ4
    /// Mapped samples averaged for the initial W.
    std::size_t w_avg_samples = 1000;
    std::uint64_t seed = 0;

    /// Throws InputError when an invariant is violated.
    void validate() const;

    /// Same schedule with every step count rescaled to `new_steps`.
    InversionConfig scaled_to(std::size_t new_steps) const;

    /// Learning rate at a step: linear ramp-up, flat, cosine ramp-down at the end.
    double learning_rate(std::size_t step) const;
    /// Amplitude multiplier (in units of sigma0) of the exploration noise at a step.
    double latent_noise_factor(std::size_t step) const;
};

// Loss terms as graph builders.
tc::NodeId build_pixel_loss(tc::Graph& graph, tc::NodeId target, tc::NodeId image);
/// Sum over landmarks of the squared distance between target [k, 2] and `landmarks` [k, 2].
tc::NodeId build_landmark_loss(tc::Graph& graph, tc::NodeId target, tc::NodeId landmarks);
/// Sum over maps and pyramid levels (2x2 mean pooling times 2, down to 8x8) of
/// the squared normalized one-pixel wraparound autocorrelations.
tc::NodeId build_noise_regularization(tc::Graph& graph, std::span<const tc::NodeId> noise);
/// RMS of every latent entry.
tc::NodeId build_latent_regularization(tc::Graph& graph, tc::NodeId latent);

struct LossTerms {
    double perceptual = 0.0;
    double pixel = 0.0;
    double noise = 0.0;
    double latent = 0.0;
    double landmark = 0.0;
    double total = 0.0;
};

struct Lambdas {
    double pixel = 0.05;
    double noise = 1e5;
    double latent = 0.1;
    double landmark = 1e-4;
};

/// Weighted sum in a fixed order; `recompose` with the same inputs is bit-identical.
tc::NodeId build_total_loss(tc::Graph& graph, tc::NodeId perceptual, tc::NodeId pixel, tc::NodeId noise,
                            tc::NodeId latent, tc::NodeId landmark, const Lambdas& lambdas);
double recompose(const LossTerms& terms, const Lambdas& lambdas);

double pixel_loss(const Image& target, const Image& image);
double landmark_loss(const geom::LandmarkSet& target, const Image& image, const emb::EmbedderWeights& embedders);
double noise_regularization(const gen::NoiseMaps& noise);
double latent_regularization(const gen::LatentCode& latent);
LossTerms total_loss(const Image& target, const Image& image, const geom::LandmarkSet& target_landmarks,
                     const gen::LatentCode& latent, const gen::NoiseMaps& noise,
                     const emb::EmbedderWeights& embedders, const Lambdas& lambdas);

struct TraceRow {
    std::size_t step = 0;
    double lr = 0.0;
    double sigma = 0.0;
    LossTerms terms;
    bool noise_trainable = true;
    /// Largest |value| over all noise maps used in this step's forward pass.
    double noise_max_abs = 0.0;
};

struct InversionResult {
    gen::LatentCode latent;
    gen::NoiseMaps noise;
    std::vector<TraceRow> trace;
};

/// Non-finite loss during optimization; carries the trace up to the failure.
class InversionAborted : public NumericalError {
public:
    InversionAborted(const std::string& what, std::vector<TraceRow> trace)
        : NumericalError(what), trace_(std::move(trace))
    {
    }
    const std::vector<TraceRow>& trace() const { return trace_; }

private:
    std::vector<TraceRow> trace_;
};

struct Models {
    const gen::GeneratorWeights& generator;
    const emb::EmbedderWeights& embedders;
};

/// Called after every step with the row just recorded.
using StepCallback = std::function<void(const TraceRow&)>;

InversionResult invert(const Image& target, const geom::LandmarkSet& target_landmarks, const Models& models,
                       const InversionConfig& config, const StepCallback& on_step = {});

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

/// Sentinel returned for identical images.
inline constexpr double kPsnrMax = 300.0;

/// 20 log10(255 / RMS) on 8-bit-scaled intensities.
double psnr(const Image& a, const Image& b);
/// Differentiable PSNR node between two [3, R, R] image nodes.
tc::NodeId build_psnr(tc::Graph& graph, tc::NodeId a, tc::NodeId b);

enum class PsnrLoss { Paper, Symmetric };
PsnrLoss psnr_loss_from_string(const std::string& text);
std::string to_string(PsnrLoss mode);

struct NoiseTrainConfig {
    std::size_t steps = 200;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double lr = 0.05;
    PsnrLoss mode = PsnrLoss::Paper;
    std::uint64_t seed = 0;

    void validate() const;
};

struct NoiseTraceRow {
    std::size_t step = 0;
    double lambda5 = 0.0;
    double lambda6 = 0.0;
    double loss = 0.0;
    double psnr1 = 0.0;
    double psnr2 = 0.0;
    /// max over maps of |RMS - 1| after the rescale that ends the step.
    double rms_error = 0.0;
};

struct NoiseTrainResult {
    gen::NoiseMaps noise;
    std::vector<NoiseTraceRow> trace;
};

/// λ5 = d1 / (d1 + d2) with d = 1 - identity similarity; 0.5 when both are 0.
std::pair<double, double> identity_balance(const Image& morph, const Image& t1, const Image& t2,
                                           const emb::EmbedderWeights& embedders);

NoiseTrainResult noise_train(const gen::LatentCode& morph_latent, const Image& t1, const Image& t2,
                             const Models& models, const NoiseTrainConfig& config);

void write_noise_trace_csv(const std::filesystem::path& path, const std::vector<NoiseTraceRow>& trace);

} // namespace morphgen::inv
