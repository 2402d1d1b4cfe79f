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

#include "morphgen/cli.hpp"
#include "morphgen/error.hpp"

#include "CLI11.hpp"

#include <functional>
#include <ostream>

namespace morphgen::cli {
namespace {

struct Globals {
    std::optional<fs::path> config;
    std::vector<std::string> overrides;
    std::size_t jobs = 1;
    std::optional<fs::path> generator;
    std::optional<fs::path> embedders;
};

// Subcommand flags that are shorthands for config keys.
struct Shorthands {
    std::optional<std::string> mode;
    std::optional<std::string> p;
    bool max_by_magnitude = false;
    std::optional<std::string> psnr_loss;
    std::optional<std::string> feather;
};

PipelineConfig effective_config(const Globals& g, const Shorthands& s)
{
    std::vector<std::string> overrides = g.overrides;
    if (s.mode) {
        overrides.push_back("blend.mode=" + *s.mode);
    }
    if (s.p) {
        overrides.push_back("blend.p=" + *s.p);
    }
    if (s.max_by_magnitude) {
        overrides.push_back("blend.max_rule=magnitude");
    }
    if (s.psnr_loss) {
        overrides.push_back("noise_train.psnr_loss=" + *s.psnr_loss);
    }
    if (s.feather) {
        overrides.push_back("paste.feather_px=" + *s.feather);
    }
    return load_config(g.config, overrides);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Landmark-enforced generative face morphing"};
    app.name(args.empty() ? "morphgen" : args.front());
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    Shorthands s;
    app.add_option("--config", g.config, "config file with one `key = value` per line");
    app.add_option("--set", g.overrides, "override a config key, key=value (repeatable)")->allow_extra_args(false);
    app.add_option("--jobs", g.jobs, "parallel pairs / samples")->check(CLI::PositiveNumber);
    app.add_option("--generator", g.generator, "generator weight file (default: seeded from config)");
    app.add_option("--embedders", g.embedders, "embedder weight file (default: seeded from config)");

    int status = kExitOk;
    std::function<void()> action;

    auto* config_cmd = app.add_subcommand("config", "print the effective config with documentation");
    config_cmd->callback([&] { action = [&] { out << effective_config(g, s).to_text(); }; });

    WarpArgs warp;
    auto* warp_cmd = app.add_subcommand("warp", "warp two subjects to their average landmarks");
    warp_cmd->add_option("--image-a", warp.image_a)->required();
    warp_cmd->add_option("--landmarks-a", warp.landmarks_a)->required();
    warp_cmd->add_option("--image-b", warp.image_b)->required();
    warp_cmd->add_option("--landmarks-b", warp.landmarks_b)->required();
    warp_cmd->add_option("--out", warp.out)->required();
    warp_cmd->callback([&] { action = [&] { cmd_warp(effective_config(g, s), warp); }; });

    InvertArgs invert;
    auto* invert_cmd = app.add_subcommand("invert", "invert an image into the extended latent space");
    invert_cmd->add_option("--image", invert.image)->required();
    invert_cmd->add_option("--landmarks", invert.landmarks, "target landmarks")->required();
    invert_cmd->add_option("--out", invert.out)->required();
    invert_cmd->callback([&] {
        action = [&] {
            const PipelineConfig c = effective_config(g, s);
            cmd_invert(c, load_models(c, {g.generator, g.embedders}), invert);
        };
    });

    PcaFitArgs pca;
    auto* pca_cmd = app.add_subcommand("pca-fit", "fit per-style PCA bases");
    pca_cmd->add_option("--corpus", pca.corpus, "directory of latent .mftn files (default: seeded corpus)");
    pca_cmd->add_option("--out", pca.out)->required();
    pca_cmd->callback([&] {
        action = [&] {
            const PipelineConfig c = effective_config(g, s);
            pca.jobs = g.jobs;
            cmd_pca_fit(c, load_models(c, {g.generator, g.embedders}), pca);
        };
    });

    MorphArgs morph;
    auto* morph_cmd = app.add_subcommand("morph", "blend two latents into morph styles");
    morph_cmd->add_option("--latent-a", morph.latent_a)->required();
    morph_cmd->add_option("--latent-b", morph.latent_b)->required();
    morph_cmd->add_option("--pca", morph.pca, "PCA directory from pca-fit");
    morph_cmd->add_option("--mode", s.mode, "avg, pca-max or pca-norm");
    morph_cmd->add_option("--p", s.p, "fraction of averaged leading components");
    morph_cmd->add_flag("--max-by-magnitude", s.max_by_magnitude, "pca-max picks the larger magnitude");
    morph_cmd->add_option("--out", morph.out)->required();
    morph_cmd->callback([&] {
        action = [&] {
            const PipelineConfig c = effective_config(g, s);
            cmd_morph(c, load_models(c, {g.generator, g.embedders}), morph);
        };
    });

    SynthesizeArgs synth;
    auto* synth_cmd = app.add_subcommand("synthesize", "render a latent or style file");
    synth_cmd->add_option("--latent", synth.latent);
    synth_cmd->add_option("--styles", synth.styles);
    synth_cmd->add_option("--noise", synth.noise, "zero, fresh:<seed> or a noise .mftn file");
    synth_cmd->add_option("--out", synth.out)->required();
    synth_cmd->callback([&] {
        action = [&] {
            const PipelineConfig c = effective_config(g, s);
            cmd_synthesize(c, load_models(c, {g.generator, g.embedders}), synth);
        };
    });

    PasteArgs paste;
    auto* paste_cmd = app.add_subcommand("paste", "composite the morph onto one or more backgrounds");
    paste_cmd->add_option("--morph", paste.morph)->required();
    paste_cmd->add_option("--mask", paste.mask)->required();
    paste_cmd->add_option("--background", paste.backgrounds, "repeatable")->required();
    paste_cmd->add_option("--feather", s.feather, "mask feather sigma in pixels");
    paste_cmd->add_option("--out", paste.out)->required();
    paste_cmd->callback([&] { action = [&] { cmd_paste(effective_config(g, s), paste); }; });

    NoiseTrainArgs noise;
    auto* noise_cmd = app.add_subcommand("noise-train", "train noise maps for a morph latent");
    noise_cmd->add_option("--latent", noise.latent)->required();
    noise_cmd->add_option("--subject-1", noise.subject_1)->required();
    noise_cmd->add_option("--subject-2", noise.subject_2)->required();
    noise_cmd->add_option("--psnr-loss", s.psnr_loss, "paper or symmetric");
    noise_cmd->add_option("--out", noise.out)->required();
    noise_cmd->callback([&] {
        action = [&] {
            const PipelineConfig c = effective_config(g, s);
            cmd_noise_train(c, load_models(c, {g.generator, g.embedders}), noise);
        };
    });

    EvaluateArgs eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "vulnerability and detector metrics");
    eval_cmd->add_option("--manifest", eval.manifest)->required();
    eval_cmd->add_option("--scores", eval.detector_scores, "detector score CSV (repeatable)");
    eval_cmd->add_option("--out", eval.out)->required();
    eval_cmd->callback([&] {
        action = [&] {
            const PipelineConfig c = effective_config(g, s);
            eval.jobs = g.jobs;
            cmd_evaluate(c, load_models(c, {g.generator, g.embedders}), eval);
        };
    });

    bool inject = false;
    auto* self_cmd = app.add_subcommand("selfcheck", "run the oracle suites");
    self_cmd->add_flag("--inject-gradient-bug", inject, "corrupt analytic gradients; the check must fail");
    self_cmd->callback([&] { action = [&] { status = cmd_selfcheck(inject, out); }; });

    fs::path weights_out;
    auto* weights_cmd = app.add_subcommand("init-weights", "write seeded generator and embedder weights");
    weights_cmd->add_option("--out", weights_out)->required();
    weights_cmd->callback([&] { action = [&] { cmd_init_weights(effective_config(g, s), weights_out); }; });

    FixtureArgs fixture;
    auto* fixture_cmd = app.add_subcommand("fixture", "write seeded subject pairs and a manifest");
    fixture_cmd->add_option("--pairs", fixture.pairs);
    fixture_cmd->add_option("--seed", fixture.seed);
    fixture_cmd->add_option("--out", fixture.out)->required();
    fixture_cmd->callback([&] {
        action = [&] {
            const PipelineConfig c = effective_config(g, s);
            cmd_fixture(c, load_models(c, {g.generator, g.embedders}), fixture);
        };
    });

    PipelineArgs pipeline;
    auto* pipeline_cmd = app.add_subcommand("pipeline", "warp, invert, blend, synthesize, paste and evaluate");
    pipeline_cmd->add_option("--manifest", pipeline.manifest)->required();
    pipeline_cmd->add_option("--out", pipeline.out)->required();
    pipeline_cmd->callback([&] {
        action = [&] {
            const PipelineConfig c = effective_config(g, s);
            pipeline.jobs = g.jobs;
            cmd_pipeline(c, load_models(c, {g.generator, g.embedders}), pipeline);
        };
    });

    // CLI11 consumes arguments from the back.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) {
        reversed.pop_back();
    }
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (action) {
            action();
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return status;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

} // namespace morphgen::cli
