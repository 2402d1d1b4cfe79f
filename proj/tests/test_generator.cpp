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

#include "doctest.h"

#include "morphgen/error.hpp"
#include "morphgen/generator.hpp"
#include "morphgen/gradcheck.hpp"
#include "morphgen/mftn.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>

using namespace morphgen;
using namespace morphgen::gen;

namespace {

GeneratorConfig small_config(std::uint64_t seed = 3)
{
    GeneratorConfig c;
    c.resolution = 16;
    c.latent_dim = 16;
    c.channel_base = 256;
    c.max_channels = 8;
    c.seed = seed;
    return c;
}

Eigen::VectorXd random_z(std::size_t n, Rng& rng)
{
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    return z;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

double mean_abs(const Image& a, const Image& b, std::size_t block)
{
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y + block <= a.height; y += block) {
        for (std::size_t x = 0; x + block <= a.width; x += block) {
            for (std::size_t c = 0; c < 3; ++c) {
                double d = 0.0;
                for (std::size_t j = 0; j < block; ++j) {
                    for (std::size_t i = 0; i < block; ++i) {
                        d += a.at(y + j, x + i, c) - b.at(y + j, x + i, c);
                    }
                }
                total += std::abs(d) / static_cast<double>(block * block);
                ++n;
            }
        }
    }
    return total / static_cast<double>(n);
}

} // namespace

TEST_CASE("layer counts")
{
    GeneratorConfig c;
    CHECK(c.num_latents() == 10);
    CHECK(c.num_styles() == 14);
    CHECK(layer_table(c).size() == 14);
    c.resolution = 1024;
    c.latent_dim = 512;
    CHECK(c.num_latents() == 18);
    CHECK(c.num_styles() == 26);
    CHECK(c.num_latents() * c.latent_dim == 9216);

    for (std::size_t r : {8u, 16u, 32u, 128u, 256u}) {
        c.resolution = r;
        const auto layers = layer_table(c);
        std::vector<bool> used(c.num_latents(), false);
        std::size_t convs = 0;
        for (const Layer& l : layers) {
            used[l.latent_index] = true;
            convs += l.kind == Layer::Kind::Conv;
        }
        CHECK(convs == c.num_conv_layers());
        CHECK(std::all_of(used.begin(), used.end(), [](bool u) { return u; }));
    }
    c.resolution = 48;
    CHECK_THROWS_AS(c.validate(), InputError);
    c.resolution = 4;
    CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("previous-layer rgb latents leave the last row unused")
{
    GeneratorConfig c = small_config();
    c.rgb_latent = RgbLatent::Previous;
    for (const Layer& l : layer_table(c)) {
        CHECK(l.latent_index + 1 < c.num_latents());
    }
}

TEST_CASE("weights are deterministic and round-trip")
{
    const GeneratorWeights a = init_weights(small_config(3));
    const GeneratorWeights b = init_weights(small_config(3));
    const GeneratorWeights c = init_weights(small_config(4));
    CHECK(a == b);
    CHECK(tc::max_abs_diff(a.conv_weight[0], c.conv_weight[0]) > 0.0);

    const auto dir = std::filesystem::temp_directory_path() / "morphgen_test_generator";
    std::filesystem::create_directories(dir);
    save_weights(dir / "a.mftn", a);
    save_weights(dir / "b.mftn", b);
    CHECK(file_bytes(dir / "a.mftn") == file_bytes(dir / "b.mftn"));
    CHECK(file_bytes(dir / "a.mftn.json") == file_bytes(dir / "b.mftn.json"));
    CHECK(load_weights(dir / "a.mftn") == a);
    std::filesystem::remove(dir / "a.mftn.json");
    CHECK_THROWS_AS(load_weights(dir / "a.mftn"), InputError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("mapping")
{
    const GeneratorWeights w = init_weights(small_config());
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(16);
    CHECK(map_latent(zero, w) == map_latent(zero, w));
    Rng rng(1);
    const Eigen::VectorXd z1 = random_z(16, rng);
    const Eigen::VectorXd z2 = random_z(16, rng);
    CHECK((map_latent(z1, w) - map_latent(z2, w)).cwiseAbs().maxCoeff() > 0.0);
    const LatentCode latent = broadcast_latent(map_latent(z1, w), w.config);
    CHECK_NOTHROW(check_latent(latent, w.config));
    CHECK_THROWS_AS(map_latent(Eigen::VectorXd::Zero(3), w), ShapeError);

    const Eigen::VectorXd avg = mean_latent(w, 200, 5);
    CHECK(avg.size() == 16);
    CHECK(avg.allFinite());
}

TEST_CASE("affine styles")
{
    const GeneratorWeights w = init_weights(small_config());
    Rng rng(2);
    const LatentCode latent = broadcast_latent(map_latent(random_z(16, rng), w), w.config);
    const StyleSet s1 = affine_styles(latent, w);
    const StyleSet s2 = affine_styles(2.0 * latent, w);
    const StyleSet s0 = affine_styles(0.0 * latent, w);
    REQUIRE(s1.size() == w.config.num_styles());
    for (std::size_t i = 0; i < s1.size(); ++i) {
        CHECK(((s2[i] - s1[i]) - (s1[i] - s0[i])).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_THROWS_AS(affine_styles(LatentCode::Zero(3, 16), w), ShapeError);
}

TEST_CASE("synthesis")
{
    GeneratorConfig cfg = small_config();
    cfg.resolution = 32;
    const GeneratorWeights w = init_weights(cfg);
    Rng rng(6);
    const LatentCode latent = broadcast_latent(map_latent(random_z(16, rng), w), cfg);
    const StyleSet styles = affine_styles(latent, w);
    const NoiseMaps quiet = zero_noise(cfg);
    const NoiseMaps loud = random_noise(cfg, rng);

    const Image a = synthesize(styles, quiet, w);
    const Image b = synthesize(styles, loud, w);
    CHECK(a.height == 32);
    CHECK(std::all_of(a.data.begin(), a.data.end(), [](double v) { return v >= 0.0 && v <= 1.0; }));
    CHECK(max_abs_diff(a, b) > 0.0);
    CHECK(mean_abs(a, b, 8) < mean_abs(a, b, 1));
    CHECK(synthesize(styles, loud, w) == b);
    CHECK(synthesize_from_w(latent, loud, w) == b);

    // Demodulated layers ignore the scale of their style.
    for (std::size_t layer : {0u, 2u, 3u}) {
        StyleSet scaled = styles;
        scaled[layer] *= 3.7;
        CHECK(max_abs_diff(synthesize(scaled, quiet, w), a) < 1e-8);
    }

    LatentCode swapped = latent + 0.5 * LatentCode::Ones(latent.rows(), latent.cols());
    const Image base = synthesize_from_w(swapped, quiet, w);
    swapped.row(0).swap(swapped.row(3));
    swapped.row(0) *= 1.5;
    CHECK(max_abs_diff(synthesize_from_w(swapped, quiet, w), base) > 0.0);

    CHECK_THROWS_AS(synthesize(styles, NoiseMaps{}, w), ShapeError);
    StyleSet bad = styles;
    bad.pop_back();
    CHECK_THROWS_AS(synthesize(bad, quiet, w), ShapeError);
}

TEST_CASE("row permutation of a distinct latent changes output")
{
    const GeneratorWeights w = init_weights(small_config());
    Rng rng(8);
    LatentCode latent(w.config.num_latents(), 16);
    for (Eigen::Index r = 0; r < latent.rows(); ++r) {
        latent.row(r) = map_latent(random_z(16, rng), w).transpose();
    }
    LatentCode permuted = latent;
    permuted.row(0).swap(permuted.row(permuted.rows() - 1));
    const NoiseMaps quiet = zero_noise(w.config);
    CHECK(max_abs_diff(synthesize_from_w(permuted, quiet, w), synthesize_from_w(latent, quiet, w)) > 1e-6);
}

TEST_CASE("synthesis gradients match finite differences")
{
    const GeneratorWeights w = init_weights(small_config());
    Rng rng(9);
    tc::Graph g;
    const tc::NodeId latent = g.leaf({w.config.num_latents(), 16}, "W", true);
    const auto noise = noise_leaves(g, w.config, true);
    const auto styles = build_styles(g, latent, w);
    const tc::NodeId img = build_synthesis(g, styles, noise, w);
    tc::Tensor proj(g.shape(img));
    for (double& v : proj.storage()) {
        v = rng.uniform(-1.0, 1.0);
    }
    const tc::NodeId loss = g.sum(g.mul(img, g.constant(proj)));

    tc::Bindings b;
    b.bind(latent, latent_to_tensor(broadcast_latent(map_latent(random_z(16, rng), w), w.config)));
    const NoiseMaps n = random_noise(w.config, rng);
    for (std::size_t i = 0; i < noise.size(); ++i) {
        b.bind(noise[i], tc::Tensor::from_matrix(n[i]));
    }
    tc::GradCheckOptions opt;
    opt.max_elements = 48;
    const auto report = tc::finite_diff_check(g, loss, b, opt);
    CHECK(report.failure.empty());
    for (const auto& leaf : report.leaves) {
        INFO(leaf.name << " " << leaf.max_rel_error);
        CHECK(leaf.passed);
    }
}

TEST_CASE("flat encodings round-trip")
{
    const GeneratorConfig cfg = small_config();
    const GeneratorWeights w = init_weights(cfg);
    Rng rng(10);
    const LatentCode latent = broadcast_latent(map_latent(random_z(16, rng), w), cfg);
    CHECK(latent_from_tensor(latent_to_tensor(latent), cfg) == latent);
    const StyleSet styles = affine_styles(latent, w);
    const StyleSet back = styles_from_tensor(styles_to_tensor(styles), cfg);
    REQUIRE(back.size() == styles.size());
    for (std::size_t i = 0; i < styles.size(); ++i) {
        CHECK(back[i] == styles[i]);
    }
    const NoiseMaps n = random_noise(cfg, rng);
    const NoiseMaps nb = noise_from_tensor(noise_to_tensor(n), cfg);
    for (std::size_t i = 0; i < n.size(); ++i) {
        CHECK(nb[i] == n[i]);
    }
    CHECK_THROWS_AS(styles_from_tensor(tc::Tensor({3}), cfg), ShapeError);
}
