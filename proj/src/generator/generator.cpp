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

#include "morphgen/generator.hpp"

#include "morphgen/error.hpp"
#include "morphgen/bundle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>

namespace morphgen::gen {
namespace {

using json = nlohmann::json;

constexpr double kLreluSlope = 0.2;
const double kLreluGain = std::numbers::sqrt2;

double to_f32(double v)
{
    return static_cast<double>(static_cast<float>(v));
}

tc::Tensor normal_tensor(tc::Shape shape, Rng& rng, double scale)
{
    tc::Tensor t(std::move(shape));
    for (double& v : t.storage()) {
        v = to_f32(rng.normal() * scale);
    }
    return t;
}

tc::NodeId add_channel_bias(tc::Graph& g, tc::NodeId x, const tc::Tensor& bias)
{
    const tc::Shape s = g.shape(x);
    const tc::NodeId b = g.reshape(g.constant(bias), {s[0], 1, 1});
    return g.add(x, g.broadcast(b, s));
}

// Pre-clamp RGB sum of the synthesis network.
tc::NodeId build_raw_rgb(tc::Graph& g, std::span<const tc::NodeId> styles, std::span<const tc::NodeId> noise,
                         const GeneratorWeights& weights)
{
    const GeneratorConfig& cfg = weights.config;
    const std::vector<Layer> layers = layer_table(cfg);
    if (styles.size() != layers.size()) {
        throw ShapeError("synthesis expects " + std::to_string(layers.size()) + " styles, got " +
                         std::to_string(styles.size()));
    }
    if (noise.size() != cfg.num_conv_layers()) {
        throw ShapeError("synthesis expects " + std::to_string(cfg.num_conv_layers()) + " noise maps, got " +
                         std::to_string(noise.size()));
    }
    tc::NodeId x = g.constant(weights.constant_input);
    std::optional<tc::NodeId> rgb;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& layer = layers[i];
        if (g.shape(styles[i]) != tc::Shape{layer.in_channels}) {
            throw ShapeError("style " + std::to_string(i) + " has shape " + tc::to_string(g.shape(styles[i])) +
                             ", expected [" + std::to_string(layer.in_channels) + "]");
        }
        const tc::NodeId w = g.constant(weights.conv_weight[i]);
        if (layer.kind == Layer::Kind::Conv) {
            if (layer.upsample) {
                x = g.upsample_2x(x);
            }
            x = g.modulated_conv2d(x, w, styles[i], true);
            const tc::NodeId n = noise[layer.noise_index];
            if (g.shape(n) != tc::Shape{layer.resolution, layer.resolution}) {
                throw ShapeError("noise map " + std::to_string(layer.noise_index) + " has shape " +
                                 tc::to_string(g.shape(n)));
            }
            x = g.add(x, g.broadcast(g.scale(n, weights.noise_strength[layer.noise_index]), g.shape(x)));
            x = add_channel_bias(g, x, weights.conv_bias[i]);
            x = g.scale(g.leaky_relu(x, kLreluSlope), kLreluGain);
        } else {
            const tc::NodeId y = add_channel_bias(g, g.modulated_conv2d(x, w, styles[i], false), weights.conv_bias[i]);
            rgb = rgb ? g.add(g.upsample_2x(*rgb), y) : y;
        }
    }
    return *rgb;
}

void for_each_tensor(GeneratorWeights& w, const std::function<void(const std::string&, tc::Tensor&)>& fn)
{
    for (std::size_t i = 0; i < w.mapping_weight.size(); ++i) {
        fn("mapping." + std::to_string(i) + ".weight", w.mapping_weight[i]);
        fn("mapping." + std::to_string(i) + ".bias", w.mapping_bias[i]);
    }
    fn("synthesis.const", w.constant_input);
    for (std::size_t i = 0; i < w.conv_weight.size(); ++i) {
        const std::string p = "synthesis." + std::to_string(i);
        fn(p + ".affine.weight", w.affine_weight[i]);
        fn(p + ".affine.bias", w.affine_bias[i]);
        fn(p + ".weight", w.conv_weight[i]);
        fn(p + ".bias", w.conv_bias[i]);
    }
}

// Shapes only; values are zero.
GeneratorWeights allocate(const GeneratorConfig& cfg)
{
    GeneratorWeights w;
    w.config = cfg;
    const std::size_t nw = cfg.latent_dim;
    for (std::size_t i = 0; i < cfg.mapping_depth; ++i) {
        w.mapping_weight.emplace_back(tc::Shape{nw, nw});
        w.mapping_bias.emplace_back(tc::Shape{nw});
    }
    w.constant_input = tc::Tensor({cfg.channels_at(4), 4, 4});
    for (const Layer& layer : layer_table(cfg)) {
        const std::size_t k = layer.kind == Layer::Kind::Conv ? 3 : 1;
        w.affine_weight.emplace_back(tc::Shape{layer.in_channels, nw});
        w.affine_bias.emplace_back(tc::Shape{layer.in_channels});
        w.conv_weight.emplace_back(tc::Shape{layer.out_channels, layer.in_channels, k, k});
        w.conv_bias.emplace_back(tc::Shape{layer.out_channels});
    }
    w.noise_strength.assign(cfg.num_conv_layers(), to_f32(cfg.noise_strength));
    return w;
}

json config_to_json(const GeneratorConfig& c)
{
    return {{"resolution", c.resolution},         {"latent_dim", c.latent_dim},
            {"mapping_depth", c.mapping_depth},   {"channel_base", c.channel_base},
            {"max_channels", c.max_channels},     {"noise_strength", c.noise_strength},
            {"rgb_latent", to_string(c.rgb_latent)}, {"seed", c.seed}};
}

GeneratorConfig config_from_json(const json& j)
{
    GeneratorConfig c;
    c.resolution = j.at("resolution").get<std::size_t>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.mapping_depth = j.at("mapping_depth").get<std::size_t>();
    c.channel_base = j.at("channel_base").get<std::size_t>();
    c.max_channels = j.at("max_channels").get<std::size_t>();
    c.noise_strength = j.at("noise_strength").get<double>();
    c.rgb_latent = rgb_latent_from_string(j.at("rgb_latent").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

void GeneratorConfig::validate() const
{
    if (resolution < 8 || !std::has_single_bit(resolution)) {
        throw InputError("generator resolution must be a power of two >= 8, got " + std::to_string(resolution));
    }
    if (latent_dim == 0 || mapping_depth == 0 || channel_base == 0 || max_channels == 0) {
        throw InputError("generator latent_dim, mapping_depth, channel_base and max_channels must be positive");
    }
    if (!std::isfinite(noise_strength)) {
        throw InputError("generator noise_strength must be finite");
    }
}

std::size_t GeneratorConfig::num_blocks() const
{
    return static_cast<std::size_t>(std::countr_zero(resolution / 4));
}

std::size_t GeneratorConfig::num_latents() const
{
    return 2 * num_blocks() + 2;
}

std::size_t GeneratorConfig::num_conv_layers() const
{
    return num_latents() - 1;
}

std::size_t GeneratorConfig::num_rgb_layers() const
{
    return num_blocks() + 1;
}

std::size_t GeneratorConfig::num_styles() const
{
    return num_conv_layers() + num_rgb_layers();
}

std::size_t GeneratorConfig::channels_at(std::size_t res) const
{
    return std::max<std::size_t>(1, std::min(max_channels, channel_base / res));
}

std::vector<Layer> layer_table(const GeneratorConfig& cfg)
{
    cfg.validate();
    std::vector<Layer> layers;
    const bool next = cfg.rgb_latent == RgbLatent::Next;
    const std::size_t c4 = cfg.channels_at(4);
    layers.push_back({Layer::Kind::Conv, 4, c4, c4, 0, false, 0});
    layers.push_back({Layer::Kind::ToRgb, 4, c4, 3, next ? 1u : 0u, false, 0});
    for (std::size_t k = 1; k <= cfg.num_blocks(); ++k) {
        const std::size_t res = std::size_t{4} << k;
        const std::size_t cin = cfg.channels_at(res / 2);
        const std::size_t c = cfg.channels_at(res);
        layers.push_back({Layer::Kind::Conv, res, cin, c, 2 * k - 1, true, 2 * k - 1});
        layers.push_back({Layer::Kind::Conv, res, c, c, 2 * k, false, 2 * k});
        layers.push_back({Layer::Kind::ToRgb, res, c, 3, next ? 2 * k + 1 : 2 * k, false, 0});
    }
    return layers;
}

std::vector<std::size_t> style_dims(const GeneratorConfig& config)
{
    std::vector<std::size_t> dims;
    for (const Layer& layer : layer_table(config)) {
        dims.push_back(layer.in_channels);
    }
    return dims;
}

GeneratorWeights init_weights(const GeneratorConfig& config)
{
    GeneratorWeights w = allocate(config);
    Rng rng(config.seed);
    const double nw = static_cast<double>(config.latent_dim);
    for (std::size_t i = 0; i < config.mapping_depth; ++i) {
        w.mapping_weight[i] = normal_tensor(w.mapping_weight[i].shape(), rng, 1.0 / std::sqrt(nw));
    }
    w.constant_input = normal_tensor(w.constant_input.shape(), rng, 1.0);
    const std::vector<Layer> layers = layer_table(config);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        w.affine_weight[i] = normal_tensor(w.affine_weight[i].shape(), rng, 1.0 / std::sqrt(nw));
        w.affine_bias[i] = tc::Tensor(w.affine_bias[i].shape(), 1.0);
        const double fan_in = static_cast<double>(layers[i].in_channels);
        // Demodulation removes the scale of conv weights; RGB layers keep 1/sqrt(fan_in).
        const double scale = layers[i].kind == Layer::Kind::Conv ? 1.0 : 1.0 / std::sqrt(fan_in);
        w.conv_weight[i] = normal_tensor(w.conv_weight[i].shape(), rng, scale);
    }

    // Calibrate the output gain on a few seeded latents with zero noise.
    constexpr std::size_t kCalibration = 8;
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < kCalibration; ++s) {
        Eigen::VectorXd z(config.latent_dim);
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            z[k] = rng.normal();
        }
        const LatentCode latent = broadcast_latent(map_latent(z, w), config);
        tc::Graph g;
        const tc::NodeId wl = g.constant(latent_to_tensor(latent));
        const auto styles = build_styles(g, wl, w);
        std::vector<tc::NodeId> noise;
        for (const Eigen::MatrixXd& m : zero_noise(config)) {
            noise.push_back(g.constant(tc::Tensor::from_matrix(m)));
        }
        const tc::NodeId rgb = build_raw_rgb(g, styles, noise, w);
        const tc::Tensor out = tc::evaluate(g, tc::Bindings{}, rgb)[rgb];
        for (double v : out.data()) {
            sum += v;
            sum_sq += v * v;
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    const double sd = std::sqrt(std::max(sum_sq / static_cast<double>(count) - mean * mean, 1e-12));
    w.output_gain = to_f32(0.4 / sd);
    return w;
}

void save_weights(const std::filesystem::path& path, const GeneratorWeights& weights)
{
    GeneratorWeights copy = weights;
    TensorBundle bundle;
    bundle.format = "morphgen-generator";
    bundle.meta = {{"config", config_to_json(weights.config)},
                   {"output_gain", weights.output_gain},
                   {"noise_strength", weights.noise_strength}};
    for_each_tensor(copy, [&](const std::string& name, tc::Tensor& t) { bundle.tensors.emplace_back(name, t); });
    write_bundle(path, bundle);
}

GeneratorWeights load_weights(const std::filesystem::path& path)
{
    const TensorBundle bundle = read_bundle(path, "morphgen-generator");
    try {
        GeneratorWeights w = allocate(config_from_json(bundle.meta.at("config")));
        w.output_gain = bundle.meta.at("output_gain").get<double>();
        w.noise_strength = bundle.meta.at("noise_strength").get<std::vector<double>>();
        if (w.noise_strength.size() != w.config.num_conv_layers()) {
            throw InputError(path.string() + ": noise_strength has the wrong length");
        }
        std::size_t index = 0;
        for_each_tensor(w, [&](const std::string& name, tc::Tensor& t) {
            if (index >= bundle.tensors.size() || bundle.tensors[index].first != name ||
                bundle.tensors[index].second.shape() != t.shape()) {
                throw InputError(path.string() + ": tensor layout does not match config at " + name);
            }
            t = bundle.tensors[index++].second;
        });
        if (index != bundle.tensors.size()) {
            throw InputError(path.string() + ": unexpected extra tensors");
        }
        return w;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(sidecar_path(path).string() + ": " + e.what());
    }
}

tc::NodeId build_mapping(tc::Graph& g, tc::NodeId z, const GeneratorWeights& weights)
{
    const GeneratorConfig& cfg = weights.config;
    const tc::Shape in = g.shape(z);
    const bool single = in.size() == 1;
    if ((single && in[0] != cfg.latent_dim) || (!single && (in.size() != 2 || in[1] != cfg.latent_dim))) {
        throw ShapeError("mapping input has shape " + tc::to_string(in) + ", expected [" +
                         std::to_string(cfg.latent_dim) + "] or [B, " + std::to_string(cfg.latent_dim) + "]");
    }
    const std::size_t batch = single ? 1 : in[0];
    const tc::Shape bshape{batch, cfg.latent_dim};
    tc::NodeId x = g.reshape(z, bshape);
    // Pixel norm per row.
    const tc::NodeId ms = g.scale(g.sum_axis(g.square(x), 1), 1.0 / static_cast<double>(cfg.latent_dim));
    const tc::NodeId rms = g.sqrt(g.offset(ms, 1e-8));
    x = g.div(x, g.broadcast(g.reshape(rms, {batch, 1}), bshape));
    for (std::size_t i = 0; i < cfg.mapping_depth; ++i) {
        x = g.linear(x, g.constant(weights.mapping_weight[i]), g.constant(weights.mapping_bias[i]));
        x = g.scale(g.leaky_relu(x, kLreluSlope), kLreluGain);
    }
    return single ? g.reshape(x, {cfg.latent_dim}) : x;
}

std::vector<tc::NodeId> build_styles(tc::Graph& g, tc::NodeId latent, const GeneratorWeights& weights)
{
    const GeneratorConfig& cfg = weights.config;
    if (g.shape(latent) != tc::Shape{cfg.num_latents(), cfg.latent_dim}) {
        throw ShapeError("latent code has shape " + tc::to_string(g.shape(latent)) + ", expected [" +
                         std::to_string(cfg.num_latents()) + ", " + std::to_string(cfg.latent_dim) + "]");
    }
    const std::vector<Layer> layers = layer_table(cfg);
    std::vector<tc::NodeId> rows(cfg.num_latents());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rows[r] = g.select(latent, r);
    }
    std::vector<tc::NodeId> styles;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        styles.push_back(g.linear(rows[layers[i].latent_index], g.constant(weights.affine_weight[i]),
                                  g.constant(weights.affine_bias[i])));
    }
    return styles;
}

tc::NodeId build_synthesis(tc::Graph& g, std::span<const tc::NodeId> styles, std::span<const tc::NodeId> noise,
                           const GeneratorWeights& weights)
{
    const tc::NodeId rgb = build_raw_rgb(g, styles, noise, weights);
    return g.clamp(g.offset(g.scale(rgb, 0.5 * weights.output_gain), 0.5), 0.0, 1.0);
}

std::vector<tc::NodeId> noise_leaves(tc::Graph& g, const GeneratorConfig& config, bool trainable)
{
    std::vector<tc::NodeId> leaves;
    for (const Layer& layer : layer_table(config)) {
        if (layer.kind == Layer::Kind::Conv) {
            leaves.push_back(g.leaf({layer.resolution, layer.resolution}, "noise." + std::to_string(layer.noise_index),
                                    trainable));
        }
    }
    return leaves;
}

Eigen::VectorXd map_latent(const Eigen::VectorXd& z, const GeneratorWeights& weights)
{
    if (static_cast<std::size_t>(z.size()) != weights.config.latent_dim) {
        throw ShapeError("z has " + std::to_string(z.size()) + " entries, expected " +
                         std::to_string(weights.config.latent_dim));
    }
    if (!z.allFinite()) {
        throw InputError("z is not finite");
    }
    tc::Graph g;
    const tc::NodeId w = build_mapping(g, g.constant(tc::Tensor::from_vector(z)), weights);
    return tc::evaluate(g, tc::Bindings{}, w)[w].as_vector();
}

LatentCode broadcast_latent(const Eigen::VectorXd& w, const GeneratorConfig& config)
{
    if (static_cast<std::size_t>(w.size()) != config.latent_dim) {
        throw ShapeError("w has " + std::to_string(w.size()) + " entries, expected " +
                         std::to_string(config.latent_dim));
    }
    return w.transpose().replicate(static_cast<Eigen::Index>(config.num_latents()), 1);
}

StyleSet affine_styles(const LatentCode& latent, const GeneratorWeights& weights)
{
    check_latent(latent, weights.config);
    tc::Graph g;
    const auto nodes = build_styles(g, g.constant(latent_to_tensor(latent)), weights);
    const tc::Values v = tc::evaluate(g, tc::Bindings{}, nodes);
    StyleSet styles;
    for (tc::NodeId n : nodes) {
        styles.emplace_back(v[n].as_vector());
    }
    return styles;
}

Image synthesize(const StyleSet& styles, const NoiseMaps& noise, const GeneratorWeights& weights)
{
    check_styles(styles, weights.config);
    check_noise(noise, weights.config);
    tc::Graph g;
    std::vector<tc::NodeId> s;
    for (const Eigen::VectorXd& v : styles) {
        s.push_back(g.constant(tc::Tensor::from_vector(v)));
    }
    std::vector<tc::NodeId> n;
    for (const Eigen::MatrixXd& m : noise) {
        n.push_back(g.constant(tc::Tensor::from_matrix(m)));
    }
    const tc::NodeId img = build_synthesis(g, s, n, weights);
    return from_chw(tc::evaluate(g, tc::Bindings{}, img)[img]);
}

Image synthesize_from_w(const LatentCode& latent, const NoiseMaps& noise, const GeneratorWeights& weights)
{
    check_latent(latent, weights.config);
    check_noise(noise, weights.config);
    tc::Graph g;
    const auto styles = build_styles(g, g.constant(latent_to_tensor(latent)), weights);
    std::vector<tc::NodeId> n;
    for (const Eigen::MatrixXd& m : noise) {
        n.push_back(g.constant(tc::Tensor::from_matrix(m)));
    }
    const tc::NodeId img = build_synthesis(g, styles, n, weights);
    return from_chw(tc::evaluate(g, tc::Bindings{}, img)[img]);
}

Eigen::VectorXd mean_latent(const GeneratorWeights& weights, std::size_t samples, std::uint64_t seed)
{
    if (samples == 0) {
        throw InputError("mean_latent needs at least one sample");
    }
    const std::size_t nw = weights.config.latent_dim;
    Rng rng(seed);
    tc::Tensor z({samples, nw});
    for (double& v : z.storage()) {
        v = rng.normal();
    }
    tc::Graph g;
    const tc::NodeId w = build_mapping(g, g.constant(std::move(z)), weights);
    const tc::Tensor out = tc::evaluate(g, tc::Bindings{}, w)[w];
    return out.as_matrix(samples, nw).colwise().mean().transpose();
}

NoiseMaps zero_noise(const GeneratorConfig& config)
{
    NoiseMaps maps;
    for (const Layer& layer : layer_table(config)) {
        if (layer.kind == Layer::Kind::Conv) {
            const auto r = static_cast<Eigen::Index>(layer.resolution);
            maps.push_back(Eigen::MatrixXd::Zero(r, r));
        }
    }
    return maps;
}

NoiseMaps random_noise(const GeneratorConfig& config, Rng& rng)
{
    NoiseMaps maps = zero_noise(config);
    for (Eigen::MatrixXd& m : maps) {
        for (Eigen::Index y = 0; y < m.rows(); ++y) {
            for (Eigen::Index x = 0; x < m.cols(); ++x) {
                m(y, x) = rng.normal();
            }
        }
    }
    return maps;
}

void check_latent(const LatentCode& latent, const GeneratorConfig& config)
{
    if (static_cast<std::size_t>(latent.rows()) != config.num_latents() ||
        static_cast<std::size_t>(latent.cols()) != config.latent_dim) {
        throw ShapeError("latent code is " + std::to_string(latent.rows()) + "x" + std::to_string(latent.cols()) +
                         ", expected " + std::to_string(config.num_latents()) + "x" +
                         std::to_string(config.latent_dim));
    }
    if (!latent.allFinite()) {
        throw InputError("latent code is not finite");
    }
}

void check_styles(const StyleSet& styles, const GeneratorConfig& config)
{
    const auto dims = style_dims(config);
    if (styles.size() != dims.size()) {
        throw ShapeError("expected " + std::to_string(dims.size()) + " style vectors, got " +
                         std::to_string(styles.size()));
    }
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (static_cast<std::size_t>(styles[i].size()) != dims[i]) {
            throw ShapeError("style " + std::to_string(i) + " has " + std::to_string(styles[i].size()) +
                             " entries, expected " + std::to_string(dims[i]));
        }
        if (!styles[i].allFinite()) {
            throw InputError("style " + std::to_string(i) + " is not finite");
        }
    }
}

void check_noise(const NoiseMaps& noise, const GeneratorConfig& config)
{
    const NoiseMaps ref = zero_noise(config);
    if (noise.size() != ref.size()) {
        throw ShapeError("expected " + std::to_string(ref.size()) + " noise maps, got " +
                         std::to_string(noise.size()));
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (noise[i].rows() != ref[i].rows() || noise[i].cols() != ref[i].cols()) {
            throw ShapeError("noise map " + std::to_string(i) + " is " + std::to_string(noise[i].rows()) + "x" +
                             std::to_string(noise[i].cols()) + ", expected " + std::to_string(ref[i].rows()) + "x" +
                             std::to_string(ref[i].cols()));
        }
    }
}

tc::Tensor latent_to_tensor(const LatentCode& latent)
{
    return tc::Tensor::from_matrix(latent);
}

LatentCode latent_from_tensor(const tc::Tensor& tensor, const GeneratorConfig& config)
{
    const tc::Shape expected{config.num_latents(), config.latent_dim};
    if (tensor.shape() != expected) {
        throw ShapeError("latent tensor has shape " + tc::to_string(tensor.shape()) + ", expected " +
                         tc::to_string(expected));
    }
    return tensor.to_matrix();
}

tc::Tensor styles_to_tensor(const StyleSet& styles)
{
    std::vector<double> flat;
    for (const Eigen::VectorXd& s : styles) {
        flat.insert(flat.end(), s.data(), s.data() + s.size());
    }
    const std::size_t n = flat.size();
    return tc::Tensor({n}, std::move(flat));
}

StyleSet styles_from_tensor(const tc::Tensor& tensor, const GeneratorConfig& config)
{
    const auto dims = style_dims(config);
    std::size_t total = 0;
    for (std::size_t d : dims) {
        total += d;
    }
    if (tensor.rank() != 1 || tensor.size() != total) {
        throw ShapeError("style tensor has shape " + tc::to_string(tensor.shape()) + ", expected [" +
                         std::to_string(total) + "]");
    }
    StyleSet styles;
    std::size_t offset = 0;
    for (std::size_t d : dims) {
        styles.emplace_back(Eigen::Map<const Eigen::VectorXd>(tensor.data().data() + offset,
                                                              static_cast<Eigen::Index>(d)));
        offset += d;
    }
    return styles;
}

tc::Tensor noise_to_tensor(const NoiseMaps& noise)
{
    std::vector<double> flat;
    for (const Eigen::MatrixXd& m : noise) {
        const tc::Tensor t = tc::Tensor::from_matrix(m);
        flat.insert(flat.end(), t.storage().begin(), t.storage().end());
    }
    const std::size_t n = flat.size();
    return tc::Tensor({n}, std::move(flat));
}

NoiseMaps noise_from_tensor(const tc::Tensor& tensor, const GeneratorConfig& config)
{
    NoiseMaps maps = zero_noise(config);
    std::size_t total = 0;
    for (const Eigen::MatrixXd& m : maps) {
        total += static_cast<std::size_t>(m.size());
    }
    if (tensor.rank() != 1 || tensor.size() != total) {
        throw ShapeError("noise tensor has shape " + tc::to_string(tensor.shape()) + ", expected [" +
                         std::to_string(total) + "]");
    }
    std::size_t offset = 0;
    for (Eigen::MatrixXd& m : maps) {
        const auto r = static_cast<std::size_t>(m.rows());
        m = tc::Tensor({r, r}, std::vector<double>(tensor.storage().begin() + static_cast<std::ptrdiff_t>(offset),
                                                    tensor.storage().begin() +
                                                        static_cast<std::ptrdiff_t>(offset + r * r)))
                .to_matrix();
        offset += r * r;
    }
    return maps;
}

std::string to_string(RgbLatent mode)
{
    return mode == RgbLatent::Next ? "next" : "previous";
}

RgbLatent rgb_latent_from_string(const std::string& text)
{
    if (text == "next") {
        return RgbLatent::Next;
    }
    if (text == "previous") {
        return RgbLatent::Previous;
    }
    throw InputError("rgb_latent must be 'next' or 'previous', got '" + text + "'");
}

} // namespace morphgen::gen
