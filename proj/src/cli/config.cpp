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

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace morphgen::cli {
namespace {

using Config = PipelineConfig;

struct Key {
    std::string name;
    std::string doc;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&)> set;
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string format(std::size_t v)
{
    return std::to_string(v);
}

void parse(const std::string& text, double& out)
{
    const auto r = std::from_chars(text.data(), text.data() + text.size(), out);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(out)) {
        throw InputError("expected a finite number, got '" + text + "'");
    }
}

void parse(const std::string& text, std::size_t& out)
{
    const auto r = std::from_chars(text.data(), text.data() + text.size(), out);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
        throw InputError("expected a non-negative integer, got '" + text + "'");
    }
}

template <typename T>
Key field(std::string name, std::string doc, T Config::*member)
{
    return {std::move(name), std::move(doc), [member](const Config& c) { return format(c.*member); },
            [member](Config& c, const std::string& v) { parse(v, c.*member); }};
}

template <typename Sub, typename T>
Key field(std::string name, std::string doc, Sub Config::*sub, T Sub::*member)
{
    return {std::move(name), std::move(doc), [sub, member](const Config& c) { return format(c.*sub.*member); },
            [sub, member](Config& c, const std::string& v) { parse(v, c.*sub.*member); }};
}

std::string to_string(blend::MaxRule rule)
{
    return rule == blend::MaxRule::Signed ? "signed" : "magnitude";
}

blend::MaxRule max_rule_from_string(const std::string& text)
{
    if (text == "signed") {
        return blend::MaxRule::Signed;
    }
    if (text == "magnitude") {
        return blend::MaxRule::Magnitude;
    }
    throw InputError("unknown max rule '" + text + "' (expected signed or magnitude)");
}

const std::vector<Key>& key_table()
{
    using gen::GeneratorConfig;
    using emb::EmbedderConfig;
    using inv::InversionConfig;
    using inv::NoiseTrainConfig;
    static const std::vector<Key> keys = [] {
        std::vector<Key> k;
        const auto g = &Config::generator;
        k.push_back(field("generator.resolution", "output size R (power of two >= 8)", g, &GeneratorConfig::resolution));
        k.push_back(field("generator.latent_dim", "latent width n_w", g, &GeneratorConfig::latent_dim));
        k.push_back(field("generator.mapping_depth", "mapping network layers", g, &GeneratorConfig::mapping_depth));
        k.push_back(field("generator.channel_base", "channels at resolution r are channel_base / r", g,
                          &GeneratorConfig::channel_base));
        k.push_back(field("generator.max_channels", "channel cap per layer", g, &GeneratorConfig::max_channels));
        k.push_back(field("generator.noise_strength", "initial per-layer noise strength", g,
                          &GeneratorConfig::noise_strength));
        k.push_back({"generator.rgb_latent", "latent row feeding RGB layers: next or previous",
                     [](const Config& c) { return gen::to_string(c.generator.rgb_latent); },
                     [](Config& c, const std::string& v) { c.generator.rgb_latent = gen::rgb_latent_from_string(v); }});
        k.push_back(field("generator.seed", "weight seed", g, &GeneratorConfig::seed));

        const auto e = &Config::embedders;
        k.push_back(field("embedders.input_size", "perceptual/identity input size, 0 = automatic", e,
                          &EmbedderConfig::input_size));
        k.push_back(field("embedders.landmarks", "landmarks per face", e, &EmbedderConfig::landmarks));
        k.push_back(field("embedders.localizer_beta", "localizer heatmap sharpness", e,
                          &EmbedderConfig::localizer_beta));
        k.push_back(field("embedders.identity_dim", "identity embedding width", e, &EmbedderConfig::identity_dim));
        k.push_back(field("embedders.seed", "embedder weight seed", e, &EmbedderConfig::seed));

        const auto i = &Config::inversion;
        k.push_back(field("inversion.steps", "optimization steps", i, &InversionConfig::steps));
        k.push_back(field("inversion.adam_beta1", "Adam beta1", i, &InversionConfig::adam_beta1));
        k.push_back(field("inversion.adam_beta2", "Adam beta2", i, &InversionConfig::adam_beta2));
        k.push_back(field("inversion.adam_eps", "Adam epsilon", i, &InversionConfig::adam_eps));
        k.push_back(field("inversion.lr_peak", "peak learning rate", i, &InversionConfig::lr_peak));
        k.push_back(field("inversion.lr_rampup_steps", "linear LR ramp-up steps", i,
                          &InversionConfig::lr_rampup_steps));
        k.push_back(field("inversion.lr_cosine_rampdown_steps", "cosine LR ramp-down steps at the end", i,
                          &InversionConfig::lr_cosine_rampdown_steps));
        k.push_back(field("inversion.latent_noise_hold_steps", "steps at full exploration noise", i,
                          &InversionConfig::latent_noise_hold_steps));
        k.push_back(field("inversion.latent_noise_zero_step", "step where exploration noise reaches zero", i,
                          &InversionConfig::latent_noise_zero_step));
        k.push_back(field("inversion.latent_noise_scale", "exploration noise relative to RMS(W0)", i,
                          &InversionConfig::latent_noise_scale));
        k.push_back(field("inversion.noise_cutoff_step", "T_s: step where noise inputs are zeroed and frozen", i,
                          &InversionConfig::noise_cutoff_step));
        k.push_back(field("inversion.lambda_pixel", "lambda1, pixel L1 weight", i, &InversionConfig::lambda_pixel));
        k.push_back(field("inversion.lambda_noise", "lambda2, noise regularization weight", i,
                          &InversionConfig::lambda_noise));
        k.push_back(field("inversion.lambda_latent", "lambda3, latent RMS weight", i,
                          &InversionConfig::lambda_latent));
        k.push_back(field("inversion.lambda_landmark", "lambda4, landmark weight", i,
                          &InversionConfig::lambda_landmark));
        k.push_back(field("inversion.w_avg_samples", "mapped samples averaged for the initial W", i,
                          &InversionConfig::w_avg_samples));
        k.push_back(field("inversion.seed", "noise and exploration seed", i, &InversionConfig::seed));

        const auto n = &Config::noise_train;
        k.push_back(field("noise_train.steps", "noise training steps", n, &NoiseTrainConfig::steps));
        k.push_back(field("noise_train.lr", "noise training learning rate", n, &NoiseTrainConfig::lr));
        k.push_back(field("noise_train.adam_beta1", "Adam beta1", n, &NoiseTrainConfig::adam_beta1));
        k.push_back(field("noise_train.adam_beta2", "Adam beta2", n, &NoiseTrainConfig::adam_beta2));
        k.push_back(field("noise_train.adam_eps", "Adam epsilon", n, &NoiseTrainConfig::adam_eps));
        k.push_back({"noise_train.psnr_loss", "PSNR loss sign convention: paper or symmetric",
                     [](const Config& c) { return inv::to_string(c.noise_train.mode); },
                     [](Config& c, const std::string& v) { c.noise_train.mode = inv::psnr_loss_from_string(v); }});
        k.push_back(field("noise_train.seed", "initial noise seed", n, &NoiseTrainConfig::seed));

        k.push_back({"blend.mode", "avg, pca-max or pca-norm",
                     [](const Config& c) { return blend::to_string(c.blend_mode); },
                     [](Config& c, const std::string& v) { c.blend_mode = blend::blend_mode_from_string(v); }});
        k.push_back(field("blend.p", "fraction of leading PCA components that are averaged", &Config::blend_p));
        k.push_back({"blend.max_rule", "element-wise max: signed or magnitude",
                     [](const Config& c) { return to_string(c.max_rule); },
                     [](Config& c, const std::string& v) { c.max_rule = max_rule_from_string(v); }});
        k.push_back(field("pca.samples", "seeded latents in the PCA corpus", &Config::pca_samples));
        k.push_back(field("pca.seed", "PCA corpus seed", &Config::pca_seed));
        k.push_back(field("warp.forehead_px", "hull extension above the face in pixels", &Config::forehead_px));
        k.push_back(field("paste.feather_px", "Gaussian sigma of the paste mask", &Config::feather_px));
        k.push_back(field("synthesize.fresh_noise_seed", "base seed of fresh morph noise in the pipeline",
                          &Config::fresh_noise_seed));
        k.push_back(field("evaluate.far", "false acceptance rate for the match threshold", &Config::far));
        k.push_back(field("evaluate.impostor_images", "seeded images for impostor scores", &Config::impostor_images));
        k.push_back(field("evaluate.impostor_seed", "impostor image seed", &Config::impostor_seed));
        return k;
    }();
    return keys;
}

const Key& find_key(const std::string& name)
{
    static const std::map<std::string, const Key*> index = [] {
        std::map<std::string, const Key*> m;
        for (const Key& k : key_table()) {
            m.emplace(k.name, &k);
        }
        return m;
    }();
    const auto it = index.find(name);
    if (it == index.end()) {
        throw InputError("unknown config key '" + name + "'");
    }
    return *it->second;
}

} // namespace

void PipelineConfig::set(const std::string& key, const std::string& value)
{
    try {
        find_key(key).set(*this, trim(value));
    } catch (const InputError& e) {
        throw InputError(key + ": " + e.what());
    }
    embedders.image_size = generator.resolution;
}

std::string PipelineConfig::get(const std::string& key) const
{
    return find_key(key).get(*this);
}

const std::vector<std::string>& PipelineConfig::keys()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const Key& k : key_table()) {
            out.push_back(k.name);
        }
        return out;
    }();
    return names;
}

std::string PipelineConfig::describe(const std::string& key)
{
    return find_key(key).doc;
}

std::string PipelineConfig::to_text() const
{
    std::ostringstream os;
    for (const Key& k : key_table()) {
        os << "# " << k.doc << '\n' << k.name << " = " << k.get(*this) << '\n';
    }
    return os.str();
}

void PipelineConfig::validate() const
{
    generator.validate();
    if (embedders.image_size != generator.resolution) {
        throw InputError("embedders.image_size must equal generator.resolution");
    }
    embedders.validate();
    inversion.validate();
    noise_train.validate();
    if (!(blend_p >= 0.0 && blend_p <= 1.0)) {
        throw InputError("blend.p must be in [0, 1]");
    }
    if (pca_samples < 2) {
        throw InputError("pca.samples must be >= 2");
    }
    if (forehead_px < 0.0 || feather_px < 0.0) {
        throw InputError("warp.forehead_px and paste.feather_px must be >= 0");
    }
    if (!(far > 0.0 && far <= 1.0)) {
        throw InputError("evaluate.far must be in (0, 1]");
    }
    if (impostor_images < 2) {
        throw InputError("evaluate.impostor_images must be >= 2");
    }
}

PipelineConfig load_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides)
{
    PipelineConfig c;
    c.embedders.image_size = c.generator.resolution;
    if (file) {
        std::ifstream f(*file);
        if (!f) {
            throw InputError("cannot open config " + file->string());
        }
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            const std::string body = trim(line.substr(0, line.find('#')));
            if (body.empty()) {
                continue;
            }
            const auto eq = body.find('=');
            if (eq == std::string::npos) {
                throw InputError(file->string() + ":" + std::to_string(lineno) + ": expected key = value");
            }
            try {
                c.set(trim(body.substr(0, eq)), body.substr(eq + 1));
            } catch (const InputError& e) {
                throw InputError(file->string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw InputError("--set expects key=value, got '" + o + "'");
        }
        c.set(trim(o.substr(0, eq)), o.substr(eq + 1));
    }
    c.validate();
    return c;
}

} // namespace morphgen::cli
