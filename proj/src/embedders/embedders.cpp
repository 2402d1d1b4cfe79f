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

#include "morphgen/embedders.hpp"

#include "morphgen/bundle.hpp"
#include "morphgen/error.hpp"
#include "morphgen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace morphgen::emb {
namespace {

constexpr double kSlope = 0.2;
constexpr double kBorderPenalty = 1e3;
constexpr double kPerceptualBiasScale = 0.2;
constexpr std::size_t kFeatureChannels[] = {8, 16, 32};

tc::Tensor he_tensor(tc::Shape shape, Rng& rng)
{
    const double fan_in = static_cast<double>(shape[1] * (shape.size() == 4 ? shape[2] * shape[3] : 1));
    const double scale = std::sqrt(2.0 / fan_in);
    tc::Tensor t(std::move(shape));
    for (double& v : t.storage()) {
        v = static_cast<double>(static_cast<float>(rng.normal() * scale));
    }
    return t;
}

void check_image_node(const tc::Graph& g, tc::NodeId image, const EmbedderConfig& cfg)
{
    const tc::Shape expected{3, cfg.image_size, cfg.image_size};
    if (g.shape(image) != expected) {
        throw ShapeError("embedder input has shape " + tc::to_string(g.shape(image)) + ", expected " +
                         tc::to_string(expected));
    }
}

tc::NodeId resized_input(tc::Graph& g, tc::NodeId image, const EmbedderConfig& cfg)
{
    check_image_node(g, image, cfg);
    const std::size_t d = cfg.resolved_input_size();
    const tc::NodeId x = d == cfg.image_size ? image : g.resize_bilinear(image, d, d);
    return g.offset(g.scale(x, 2.0), -1.0);
}

// Pooled conv stack; returns the activation after each conv.
std::vector<tc::NodeId> pooled_stack(tc::Graph& g, tc::NodeId x, const std::vector<tc::Tensor>& weights,
                                     const std::vector<tc::Tensor>* biases = nullptr)
{
    std::vector<tc::NodeId> acts;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (i > 0) {
            x = g.avgpool_2x(x);
        }
        const std::optional<tc::NodeId> bias =
            biases ? std::optional<tc::NodeId>(g.constant((*biases)[i])) : std::nullopt;
        x = g.leaky_relu(g.conv2d(x, g.constant(weights[i]), bias), kSlope);
        acts.push_back(x);
    }
    return acts;
}

tc::NodeId unit_normalize_channels(tc::Graph& g, tc::NodeId f)
{
    const tc::Shape s = g.shape(f);
    const tc::NodeId norm = g.sqrt(g.offset(g.sum_axis(g.square(f), 0), 1e-10));
    const tc::NodeId n = g.div(f, g.broadcast(g.reshape(norm, {1, s[1], s[2]}), s));
    return g.scale(n, 1.0 / std::sqrt(static_cast<double>(s[1] * s[2])));
}

// Un-normalized identity embedding.
tc::NodeId identity_raw(tc::Graph& g, tc::NodeId image, const EmbedderWeights& weights)
{
    const tc::NodeId f = pooled_stack(g, resized_input(g, image, weights.config), weights.identity).back();
    const tc::Shape s = g.shape(f);
    const tc::NodeId pooled = g.scale(g.sum_axis(g.reshape(f, {s[0], s[1] * s[2]}), 1),
                                      1.0 / static_cast<double>(s[1] * s[2]));
    return g.linear(pooled, g.constant(weights.identity_head));
}

tc::NodeId image_node(tc::Graph& g, const Image& image)
{
    return g.constant(to_chw(image));
}

} // namespace

void EmbedderConfig::validate() const
{
    if (image_size < 8) {
        throw InputError("embedder image_size must be >= 8");
    }
    const std::size_t d = resolved_input_size();
    if (d < 8 || d % 4 != 0) {
        throw InputError("embedder input size must be a multiple of 4 and >= 8, got " + std::to_string(d));
    }
    if (landmarks == 0 || identity_dim == 0) {
        throw InputError("embedder landmarks and identity_dim must be positive");
    }
    if (!(localizer_beta > 0.0) || !std::isfinite(localizer_beta)) {
        throw InputError("localizer_beta must be positive and finite");
    }
}

std::size_t EmbedderConfig::resolved_input_size() const
{
    if (input_size != 0) {
        return input_size;
    }
    return image_size >= 4 * 256 ? image_size / 4 : image_size;
}

EmbedderWeights init_embedders(const EmbedderConfig& config)
{
    config.validate();
    EmbedderWeights w;
    w.config = config;
    Rng rng(config.seed);
    std::size_t cin = 3;
    for (std::size_t c : kFeatureChannels) {
        w.perceptual.push_back(he_tensor({c, cin, 3, 3}, rng));
        cin = c;
    }
    // Zero-mean first-layer filters: flat regions give no response.
    tc::Tensor first = he_tensor({8, 3, 3, 3}, rng);
    for (std::size_t f = 0; f < 8 * 3; ++f) {
        double mean = 0.0;
        for (std::size_t t = 0; t < 9; ++t) {
            mean += first[f * 9 + t] / 9.0;
        }
        for (std::size_t t = 0; t < 9; ++t) {
            first[f * 9 + t] = static_cast<double>(static_cast<float>(first[f * 9 + t] - mean));
        }
    }
    w.localizer.push_back(std::move(first));
    w.localizer.push_back(he_tensor({8, 8, 3, 3}, rng));
    w.localizer.push_back(he_tensor({config.landmarks, 8, 3, 3}, rng));
    cin = 3;
    for (std::size_t c : kFeatureChannels) {
        w.identity.push_back(he_tensor({c, cin, 3, 3}, rng));
        cin = c;
    }
    w.identity_head = he_tensor({config.identity_dim, cin}, rng);
    // Biases keep flat mid-gray regions away from zero features, whose unit
    // normalization is ill-conditioned. Drawn last so the other heads keep their streams.
    for (std::size_t c : kFeatureChannels) {
        tc::Tensor b({c});
        for (double& v : b.storage()) {
            v = static_cast<double>(static_cast<float>(kPerceptualBiasScale * rng.normal()));
        }
        w.perceptual_bias.push_back(std::move(b));
    }
    return w;
}

void save_embedders(const std::filesystem::path& path, const EmbedderWeights& weights)
{
    TensorBundle b;
    b.format = "morphgen-embedders";
    const EmbedderConfig& c = weights.config;
    b.meta = {{"image_size", c.image_size},         {"input_size", c.input_size},
              {"landmarks", c.landmarks},           {"localizer_beta", c.localizer_beta},
              {"identity_dim", c.identity_dim},     {"seed", c.seed}};
    for (std::size_t i = 0; i < weights.perceptual.size(); ++i) {
        b.tensors.emplace_back("perceptual." + std::to_string(i), weights.perceptual[i]);
        b.tensors.emplace_back("perceptual." + std::to_string(i) + ".bias", weights.perceptual_bias[i]);
    }
    for (std::size_t i = 0; i < weights.localizer.size(); ++i) {
        b.tensors.emplace_back("localizer." + std::to_string(i), weights.localizer[i]);
    }
    for (std::size_t i = 0; i < weights.identity.size(); ++i) {
        b.tensors.emplace_back("identity." + std::to_string(i), weights.identity[i]);
    }
    b.tensors.emplace_back("identity.head", weights.identity_head);
    write_bundle(path, b);
}

EmbedderWeights load_embedders(const std::filesystem::path& path)
{
    const TensorBundle b = read_bundle(path, "morphgen-embedders");
    try {
        EmbedderConfig c;
        c.image_size = b.meta.at("image_size").get<std::size_t>();
        c.input_size = b.meta.at("input_size").get<std::size_t>();
        c.landmarks = b.meta.at("landmarks").get<std::size_t>();
        c.localizer_beta = b.meta.at("localizer_beta").get<double>();
        c.identity_dim = b.meta.at("identity_dim").get<std::size_t>();
        c.seed = b.meta.at("seed").get<std::uint64_t>();
        // Shapes come from a fresh init so a tampered layout is caught.
        EmbedderWeights w = init_embedders(c);
        auto fill = [&](const std::string& name, tc::Tensor& t) {
            const tc::Tensor& stored = b.at(name);
            if (stored.shape() != t.shape()) {
                throw InputError(path.string() + ": " + name + " has shape " + tc::to_string(stored.shape()));
            }
            t = stored;
        };
        for (std::size_t i = 0; i < w.perceptual.size(); ++i) {
            fill("perceptual." + std::to_string(i), w.perceptual[i]);
            fill("perceptual." + std::to_string(i) + ".bias", w.perceptual_bias[i]);
        }
        for (std::size_t i = 0; i < w.localizer.size(); ++i) {
            fill("localizer." + std::to_string(i), w.localizer[i]);
        }
        for (std::size_t i = 0; i < w.identity.size(); ++i) {
            fill("identity." + std::to_string(i), w.identity[i]);
        }
        fill("identity.head", w.identity_head);
        return w;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(sidecar_path(path).string() + ": " + e.what());
    }
}

std::vector<tc::NodeId> build_perceptual_features(tc::Graph& g, tc::NodeId image, const EmbedderWeights& weights)
{
    std::vector<tc::NodeId> feats =
        pooled_stack(g, resized_input(g, image, weights.config), weights.perceptual, &weights.perceptual_bias);
    for (tc::NodeId& f : feats) {
        f = unit_normalize_channels(g, f);
    }
    return feats;
}

tc::NodeId build_perceptual_distance(tc::Graph& g, tc::NodeId a, tc::NodeId b, const EmbedderWeights& weights)
{
    const auto fa = build_perceptual_features(g, a, weights);
    const auto fb = build_perceptual_features(g, b, weights);
    tc::NodeId total = g.sum(g.square(g.sub(fa[0], fb[0])));
    for (std::size_t i = 1; i < fa.size(); ++i) {
        total = g.add(total, g.sum(g.square(g.sub(fa[i], fb[i]))));
    }
    return g.sqrt(total);
}

tc::NodeId build_perceptual_distance_to(tc::Graph& g, tc::NodeId image, const std::vector<tc::Tensor>& target,
                                        const EmbedderWeights& weights)
{
    const auto f = build_perceptual_features(g, image, weights);
    if (target.size() != f.size()) {
        throw ShapeError("target feature stack has " + std::to_string(target.size()) + " layers, expected " +
                         std::to_string(f.size()));
    }
    tc::NodeId total = g.sum(g.square(g.sub(f[0], g.constant(target[0]))));
    for (std::size_t i = 1; i < f.size(); ++i) {
        total = g.add(total, g.sum(g.square(g.sub(f[i], g.constant(target[i])))));
    }
    return g.sqrt(total);
}

tc::NodeId build_localizer(tc::Graph& g, tc::NodeId image, const EmbedderWeights& weights)
{
    const EmbedderConfig& cfg = weights.config;
    check_image_node(g, image, cfg);
    // Raw [0, 1] input with zero biases: a black image gives a zero response.
    tc::NodeId x = image;
    for (std::size_t i = 0; i < weights.localizer.size(); ++i) {
        x = g.conv2d(x, g.constant(weights.localizer[i]));
        if (i + 1 < weights.localizer.size()) {
            x = g.leaky_relu(x, kSlope);
        }
    }
    // Pixels whose receptive field reaches the zero padding are excluded.
    const std::size_t r = cfg.image_size;
    const std::size_t margin = weights.localizer.size();
    tc::Tensor border({cfg.landmarks, r, r});
    for (std::size_t k = 0; k < cfg.landmarks; ++k) {
        for (std::size_t y = 0; y < r; ++y) {
            for (std::size_t xx = 0; xx < r; ++xx) {
                const bool edge = y < margin || xx < margin || y + margin >= r || xx + margin >= r;
                border[(k * r + y) * r + xx] = edge ? -kBorderPenalty : 0.0;
            }
        }
    }
    // Contrast normalization: each channel's squared response is divided by its spatial mean.
    const tc::NodeId energy = g.square(x);
    const tc::NodeId mean = g.scale(g.sum_axis(g.reshape(energy, {cfg.landmarks, r * r}), 1),
                                    1.0 / static_cast<double>(r * r));
    const tc::NodeId denom = g.broadcast(g.reshape(g.offset(mean, 1e-12), {cfg.landmarks, 1, 1}), g.shape(energy));
    const tc::NodeId logits =
        g.add(g.scale(g.div(energy, denom), cfg.localizer_beta), g.constant(std::move(border)));
    const tc::NodeId probs = g.softmax_spatial(logits);
    tc::Tensor coords({2, r * r});
    for (std::size_t y = 0; y < r; ++y) {
        for (std::size_t xx = 0; xx < r; ++xx) {
            coords[y * r + xx] = static_cast<double>(xx);
            coords[r * r + y * r + xx] = static_cast<double>(y);
        }
    }
    return g.linear(g.reshape(probs, {cfg.landmarks, r * r}), g.constant(std::move(coords)));
}

tc::NodeId build_identity(tc::Graph& g, tc::NodeId image, const EmbedderWeights& weights)
{
    const tc::NodeId e = identity_raw(g, image, weights);
    return g.div(e, g.broadcast(g.l2_norm(e), g.shape(e)));
}

std::vector<tc::Tensor> perceptual_features(const Image& image, const EmbedderWeights& weights)
{
    tc::Graph g;
    const auto feats = build_perceptual_features(g, image_node(g, image), weights);
    const tc::Values v = tc::evaluate(g, tc::Bindings{}, feats);
    std::vector<tc::Tensor> out;
    for (tc::NodeId f : feats) {
        out.push_back(v[f]);
    }
    return out;
}

double perceptual_distance(const Image& a, const Image& b, const EmbedderWeights& weights)
{
    if (!a.same_shape(b)) {
        throw ShapeError("perceptual_distance: image shapes differ");
    }
    tc::Graph g;
    const tc::NodeId d = build_perceptual_distance(g, image_node(g, a), image_node(g, b), weights);
    return tc::evaluate(g, tc::Bindings{}, d)[d].item();
}

geom::LandmarkSet localize_landmarks(const Image& image, const EmbedderWeights& weights)
{
    tc::Graph g;
    const tc::NodeId lm = build_localizer(g, image_node(g, image), weights);
    const tc::Tensor t = tc::evaluate(g, tc::Bindings{}, lm)[lm];
    geom::LandmarkSet out;
    for (std::size_t k = 0; k < weights.config.landmarks; ++k) {
        out.emplace_back(t[2 * k], t[2 * k + 1]);
    }
    return out;
}

Eigen::VectorXd identity_embed(const Image& image, const EmbedderWeights& weights)
{
    tc::Graph g;
    const tc::NodeId e = identity_raw(g, image_node(g, image), weights);
    const Eigen::VectorXd raw = tc::evaluate(g, tc::Bindings{}, e)[e].as_vector();
    const double norm = raw.norm();
    if (!(norm > 0.0)) {
        throw NumericalError("identity embedding has zero norm");
    }
    return raw / norm;
}

double identity_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size()) {
        throw ShapeError("identity_similarity: embedding sizes differ");
    }
    return std::clamp(a.dot(b), -1.0, 1.0);
}

} // namespace morphgen::emb
