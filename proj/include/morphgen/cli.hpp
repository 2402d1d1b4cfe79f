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

#include "morphgen/blend.hpp"
#include "morphgen/embedders.hpp"
#include "morphgen/generator.hpp"
#include "morphgen/inversion.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace morphgen::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 2,
    kExitNumerical = 3,
    kExitSelfcheck = 4,
};

/// Every tunable of the pipeline. Text form is one `key = value` per line;
/// `#` starts a comment.
struct PipelineConfig {
    gen::GeneratorConfig generator;
    /// image_size always follows generator.resolution.
    emb::EmbedderConfig embedders;
    inv::InversionConfig inversion;
    inv::NoiseTrainConfig noise_train;
    blend::BlendMode blend_mode = blend::BlendMode::Average;
    double blend_p = 0.8;
    blend::MaxRule max_rule = blend::MaxRule::Signed;
    std::size_t pca_samples = 500;
    std::uint64_t pca_seed = 7;
    double forehead_px = 0.0;
    double feather_px = 1.0;
    /// Pipeline morphs are synthesized with fresh:<fresh_noise_seed + pair index> noise.
    std::uint64_t fresh_noise_seed = 0;
    double far = 1e-3;
    /// Seeded generator images whose pairwise similarities calibrate the FAR threshold.
    std::size_t impostor_images = 100;
    std::uint64_t impostor_seed = 99;

    /// Throws InputError for an unknown key or a malformed value.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static const std::vector<std::string>& keys();
    /// Documentation line for a key.
    static std::string describe(const std::string& key);

    /// Full config in the text format, one documented key per line.
    std::string to_text() const;
    void validate() const;
};

/// Applies a config file (if any), then `key=value` overrides in order.
PipelineConfig load_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides);

/// Weights are seeded from the config unless files are given.
struct ModelSet {
    gen::GeneratorWeights generator;
    emb::EmbedderWeights embedders;

    inv::Models view() const { return {generator, embedders}; }
};

struct ModelPaths {
    std::optional<fs::path> generator;
    std::optional<fs::path> embedders;
};

ModelSet load_models(const PipelineConfig& config, const ModelPaths& paths);

// Subcommands. Each validates all inputs before writing anything.

struct WarpArgs {
    fs::path image_a, landmarks_a, image_b, landmarks_b, out;
};
/// Writes warped_{a,b}.png (full frame), hull_{a,b}.png, mask.png and target_landmarks.csv.
void cmd_warp(const PipelineConfig& config, const WarpArgs& args);

struct InvertArgs {
    fs::path image, landmarks, out;
};
/// Writes latent.mftn, noise.mftn, trace.csv and reconstruction.png.
void cmd_invert(const PipelineConfig& config, const ModelSet& models, const InvertArgs& args);

struct PcaFitArgs {
    /// Directory of latent .mftn files; the seeded corpus is used when empty.
    std::optional<fs::path> corpus;
    fs::path out;
    std::size_t jobs = 1;
};
void cmd_pca_fit(const PipelineConfig& config, const ModelSet& models, const PcaFitArgs& args);

struct MorphArgs {
    fs::path latent_a, latent_b;
    std::optional<fs::path> pca;
    fs::path out;
};
/// Writes morph_styles.mftn, plus morph_latent.mftn for averaging. PCA modes need `pca`.
void cmd_morph(const PipelineConfig& config, const ModelSet& models, const MorphArgs& args);

struct SynthesizeArgs {
    std::optional<fs::path> latent;
    std::optional<fs::path> styles;
    /// `zero`, `fresh:<seed>` or a noise .mftn path.
    std::string noise = "zero";
    fs::path out;
};
/// Writes image.png and the noise.mftn that was used.
void cmd_synthesize(const PipelineConfig& config, const ModelSet& models, const SynthesizeArgs& args);

struct PasteArgs {
    fs::path morph, mask;
    std::vector<fs::path> backgrounds;
    fs::path out;
};
/// Writes paste_<i>.png per background, i = 1, 2, ...; the morph is resized to each background.
void cmd_paste(const PipelineConfig& config, const PasteArgs& args);

struct NoiseTrainArgs {
    fs::path latent, subject_1, subject_2, out;
};
/// Writes noise.mftn, trace.csv and morph.png.
void cmd_noise_train(const PipelineConfig& config, const ModelSet& models, const NoiseTrainArgs& args);

struct EvaluateArgs {
    fs::path manifest;
    std::vector<fs::path> detector_scores;
    fs::path out;
    std::size_t jobs = 1;
};
/// Writes trials.csv, impostors.csv, report.json and det_<name>.csv per score file.
void cmd_evaluate(const PipelineConfig& config, const ModelSet& models, const EvaluateArgs& args);

/// Runs the oracle suites and prints one line per suite; returns kExitOk or kExitSelfcheck.
int cmd_selfcheck(bool inject_gradient_bug, std::ostream& out);

void cmd_init_weights(const PipelineConfig& config, const fs::path& out);

struct FixtureArgs {
    fs::path out;
    std::size_t pairs = 2;
    std::uint64_t seed = 1;
};
/// Seeded subjects, probes, localized landmarks and manifest.json.
void cmd_fixture(const PipelineConfig& config, const ModelSet& models, const FixtureArgs& args);

struct PipelineArgs {
    fs::path manifest, out;
    std::size_t jobs = 1;
};
/// warp -> invert -> pca-fit -> morph -> synthesize -> paste per pair, then evaluate.
void cmd_pipeline(const PipelineConfig& config, const ModelSet& models, const PipelineArgs& args);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace morphgen::cli
