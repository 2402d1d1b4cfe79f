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

#include "morphgen/checks.hpp"

#include "morphgen/blend.hpp"
#include "morphgen/error.hpp"
#include "morphgen/geometry.hpp"
#include "morphgen/gradcheck.hpp"
#include "morphgen/inversion.hpp"
#include "morphgen/metrics.hpp"
#include "morphgen/oracles/blend_oracles.hpp"
#include "morphgen/oracles/geometry_oracles.hpp"
#include "morphgen/oracles/inversion_oracles.hpp"
#include "morphgen/oracles/metrics_oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace morphgen::checks {
namespace {

using tc::Bindings;
using tc::Graph;
using tc::NodeId;
using tc::Shape;
using tc::Tensor;

std::string fmt(const char* format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    Tensor t(std::move(shape));
    for (double& v : t.storage()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

// Values bounded away from zero so kinks (abs, leaky_relu) are never straddled.
Tensor away_from_zero(Shape shape, Rng& rng)
{
    Tensor t(std::move(shape));
    for (double& v : t.storage()) {
        const double m = rng.uniform(0.2, 1.0);
        v = rng.uniform() < 0.5 ? -m : m;
    }
    return t;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.normal();
    }
    return m;
}

Image random_image(std::size_t h, std::size_t w, Rng& rng)
{
    Image img(h, w);
    for (double& v : img.data) {
        v = rng.uniform(0.05, 0.95);
    }
    return img;
}

// Reduces a node to a scalar through a fixed random projection.
NodeId project(Graph& g, NodeId x, Rng& rng)
{
    const Shape shape = g.shape(x);
    const NodeId w = g.constant(random_tensor(shape, rng));
    return g.sum(g.mul(x, w));
}

NodeId bound_leaf(Graph& g, Bindings& b, Tensor value, const char* name)
{
    const NodeId id = g.leaf(value.shape(), name, true);
    b.bind(id, std::move(value));
    return id;
}

GradientCase unary(const char* name, std::function<NodeId(Graph&, NodeId)> f, bool avoid_zero, double lo = -1.0,
                   double hi = 1.0)
{
    return {name, [=](Graph& g, Bindings& b, Rng& rng) {
                Tensor v = avoid_zero ? away_from_zero({2, 4, 6}, rng) : random_tensor({2, 4, 6}, rng, lo, hi);
                const NodeId x = bound_leaf(g, b, std::move(v), "x");
                return project(g, f(g, x), rng);
            }};
}

Eigen::VectorXd random_z(std::size_t dim, Rng& rng)
{
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    return z;
}

gen::LatentCode seeded_latent(const gen::GeneratorWeights& w, Rng& rng)
{
    return gen::broadcast_latent(gen::map_latent(random_z(w.config.latent_dim, rng), w), w.config);
}

Image seeded_target(const gen::GeneratorWeights& w, std::uint64_t seed)
{
    Rng rng(seed);
    return gen::synthesize_from_w(seeded_latent(w, rng), gen::zero_noise(w.config), w);
}

Image seeded_subject(const gen::GeneratorWeights& w, std::uint64_t seed)
{
    Rng rng(seed);
    const gen::LatentCode latent = seeded_latent(w, rng);
    return gen::synthesize_from_w(latent, gen::random_noise(w.config, rng), w);
}

struct SmallModels {
    gen::GeneratorWeights generator;
    emb::EmbedderWeights embedders;
};

const SmallModels& small_models()
{
    static const SmallModels m{gen::init_weights(small_generator_config()),
                               emb::init_embedders(small_embedder_config())};
    return m;
}

struct PcaFixture {
    gen::GeneratorWeights weights;
    std::vector<gen::StyleSet> corpus;
    blend::PcaModels models;
};

const PcaFixture& pca_fixture()
{
    static const PcaFixture f = [] {
        PcaFixture x;
        x.weights = gen::init_weights(gen::GeneratorConfig{});
        x.corpus = blend::style_corpus(x.weights, 500, 7);
        x.models = blend::fit_style_pca(x.corpus);
        return x;
    }();
    return f;
}

double mean_distance(const geom::LandmarkSet& a, const geom::LandmarkSet& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]).norm();
    }
    return s / static_cast<double>(a.size());
}

std::vector<geom::Point> with_boundary(const geom::LandmarkSet& landmarks, std::size_t h, std::size_t w)
{
    std::vector<geom::Point> pts = landmarks;
    const auto boundary = geom::boundary_points(h, w);
    pts.insert(pts.end(), boundary.begin(), boundary.end());
    return pts;
}

CheckResult result(bool passed, std::string detail)
{
    CheckResult r;
    r.passed = passed;
    r.detail = std::move(detail);
    return r;
}

} // namespace

CheckResult run_check(const std::string& name, const std::function<CheckResult()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.name = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

gen::GeneratorConfig small_generator_config(std::uint64_t seed)
{
    gen::GeneratorConfig c;
    c.resolution = 16;
    c.latent_dim = 32;
    c.channel_base = 256;
    c.max_channels = 8;
    c.seed = seed;
    return c;
}

emb::EmbedderConfig small_embedder_config()
{
    emb::EmbedderConfig c;
    c.image_size = 16;
    c.landmarks = 4;
    return c;
}

gen::GeneratorConfig landmark_generator_config()
{
    gen::GeneratorConfig c = small_generator_config();
    c.resolution = 32;
    c.channel_base = 512;
    c.max_channels = 16;
    return c;
}

emb::EmbedderConfig landmark_embedder_config()
{
    emb::EmbedderConfig c = small_embedder_config();
    c.image_size = 32;
    return c;
}

std::vector<GradientCase> op_gradient_cases()
{
    std::vector<GradientCase> cases;
    cases.push_back(unary("scale", [](Graph& g, NodeId x) { return g.scale(x, -2.5); }, false));
    cases.push_back(unary("offset", [](Graph& g, NodeId x) { return g.offset(x, 0.7); }, false));
    cases.push_back(unary("square", [](Graph& g, NodeId x) { return g.square(x); }, false));
    cases.push_back(unary("sqrt", [](Graph& g, NodeId x) { return g.sqrt(x); }, false, 0.5, 2.0));
    cases.push_back(unary("log", [](Graph& g, NodeId x) { return g.log(x); }, false, 0.5, 2.0));
    cases.push_back(unary("abs", [](Graph& g, NodeId x) { return g.abs(x); }, true));
    cases.push_back(unary("leaky_relu", [](Graph& g, NodeId x) { return g.leaky_relu(x, 0.2); }, true));
    cases.push_back(unary("clamp", [](Graph& g, NodeId x) { return g.clamp(x, -0.5, 0.5); }, false, -0.45, 0.45));
    cases.push_back(unary("sum", [](Graph& g, NodeId x) { return g.square(g.sum(x)); }, false));
    cases.push_back(unary("mean", [](Graph& g, NodeId x) { return g.square(g.mean(x)); }, false));
    cases.push_back(unary("sum_axis", [](Graph& g, NodeId x) { return g.sum_axis(x, 1); }, false));
    cases.push_back(unary("l1_norm", [](Graph& g, NodeId x) { return g.square(g.l1_norm(x)); }, true));
    cases.push_back(unary("l2_norm", [](Graph& g, NodeId x) { return g.l2_norm(x); }, false));
    cases.push_back(unary("reshape", [](Graph& g, NodeId x) { return g.reshape(x, {8, 6}); }, false));
    cases.push_back(unary("roll", [](Graph& g, NodeId x) { return g.roll(x, 2, 1); }, false));
    cases.push_back(unary("roll_neg", [](Graph& g, NodeId x) { return g.roll(x, 1, -2); }, false));
    cases.push_back(unary("select", [](Graph& g, NodeId x) { return g.select(x, 1); }, false));
    cases.push_back(unary("resize", [](Graph& g, NodeId x) { return g.resize_bilinear(x, 5, 7); }, false));
    cases.push_back(unary("upsample_2x", [](Graph& g, NodeId x) { return g.upsample_2x(x); }, false));
    cases.push_back(unary("avgpool_2x", [](Graph& g, NodeId x) { return g.avgpool_2x(x); }, false));
    cases.push_back(
        unary("softmax_spatial", [](Graph& g, NodeId x) { return g.softmax_spatial(g.scale(x, 3.0)); }, false));
    cases.push_back({"broadcast", [](Graph& g, Bindings& b, Rng& rng) {
                         const NodeId x = bound_leaf(g, b, random_tensor({3, 1}, rng), "x");
                         return project(g, g.broadcast(x, {2, 3, 4}), rng);
                     }});
    for (auto [name, op] : {std::pair{"add", 0}, {"sub", 1}, {"mul", 2}, {"div", 3}}) {
        cases.push_back({name, [op](Graph& g, Bindings& b, Rng& rng) {
                             const NodeId x = bound_leaf(g, b, random_tensor({3, 4}, rng), "a");
                             const NodeId y = bound_leaf(g, b, random_tensor({3, 4}, rng, 0.5, 1.5), "b");
                             const NodeId z = op == 0   ? g.add(x, y)
                                              : op == 1 ? g.sub(x, y)
                                              : op == 2 ? g.mul(x, y)
                                                        : g.div(x, y);
                             return project(g, z, rng);
                         }});
    }
    cases.push_back({"linear", [](Graph& g, Bindings& b, Rng& rng) {
                         const NodeId x = bound_leaf(g, b, random_tensor({3, 3}, rng), "x");
                         const NodeId w = bound_leaf(g, b, random_tensor({3, 3}, rng), "w");
                         const NodeId bias = bound_leaf(g, b, random_tensor({3}, rng), "b");
                         return g.sum(g.square(g.linear(x, w, bias)));
                     }});
    cases.push_back({"linear_vector", [](Graph& g, Bindings& b, Rng& rng) {
                         const NodeId x = bound_leaf(g, b, random_tensor({4}, rng), "x");
                         const NodeId w = bound_leaf(g, b, random_tensor({2, 4}, rng), "w");
                         return project(g, g.linear(x, w), rng);
                     }});
    cases.push_back({"conv2d", [](Graph& g, Bindings& b, Rng& rng) {
                         const NodeId x = bound_leaf(g, b, random_tensor({2, 5, 4}, rng), "x");
                         const NodeId w = bound_leaf(g, b, random_tensor({3, 2, 3, 3}, rng), "w");
                         const NodeId bias = bound_leaf(g, b, random_tensor({3}, rng), "b");
                         return project(g, g.conv2d(x, w, bias), rng);
                     }});
    for (bool demod : {true, false}) {
        cases.push_back({demod ? "modulated_conv2d" : "modulated_conv2d_nodemod",
                         [demod](Graph& g, Bindings& b, Rng& rng) {
                             const NodeId x = bound_leaf(g, b, random_tensor({1, 4, 4}, rng), "x");
                             const NodeId w = bound_leaf(g, b, random_tensor({2, 1, 3, 3}, rng), "w");
                             // With one input channel demodulation cancels the style exactly, so
                             // its gradient is zero up to eps and only x, w are probed.
                             const NodeId s = g.leaf({1}, "s", !demod);
                             b.bind(s, random_tensor({1}, rng, 0.5, 1.5));
                             return g.sum(g.square(g.modulated_conv2d(x, w, s, demod)));
                         }});
    }
    cases.push_back({"modulate_multi_channel", [](Graph& g, Bindings& b, Rng& rng) {
                         const NodeId w = bound_leaf(g, b, random_tensor({3, 4, 3, 3}, rng), "w");
                         const NodeId s = bound_leaf(g, b, random_tensor({4}, rng, 0.5, 1.5), "s");
                         return project(g, g.modulate(w, s, true), rng);
                     }});
    return cases;
}

std::vector<GradientCase> model_gradient_cases()
{
    std::vector<GradientCase> cases;
    const std::size_t r = small_generator_config().resolution;

    cases.push_back({"synthesis",
                     [](Graph& g, Bindings& b, Rng& rng) {
                         const gen::GeneratorWeights& w = small_models().generator;
                         const NodeId latent = g.leaf({w.config.num_latents(), w.config.latent_dim}, "W", true);
                         const auto noise = gen::noise_leaves(g, w.config, true);
                         const NodeId img = gen::build_synthesis(g, gen::build_styles(g, latent, w), noise, w);
                         b.bind(latent, gen::latent_to_tensor(seeded_latent(w, rng)));
                         const gen::NoiseMaps n = gen::random_noise(w.config, rng);
                         for (std::size_t i = 0; i < noise.size(); ++i) {
                             b.bind(noise[i], Tensor::from_matrix(n[i]));
                         }
                         return project(g, img, rng);
                     },
                     48});

    // Loss graphs over a trainable image with random fixed references.
    const auto image_case = [r](const char* name, std::function<NodeId(Graph&, NodeId, NodeId, NodeId, Rng&)> f) {
        return GradientCase{name,
                            [r, f](Graph& g, Bindings& b, Rng& rng) {
                                const NodeId image = bound_leaf(g, b, to_chw(random_image(r, r, rng)), "image");
                                const NodeId target = g.constant(to_chw(random_image(r, r, rng)));
                                const NodeId other = g.constant(to_chw(random_image(r, r, rng)));
                                return f(g, image, target, other, rng);
                            },
                            64};
    };
    const auto& e = small_models().embedders;
    cases.push_back(image_case("perceptual", [&e](Graph& g, NodeId image, NodeId target, NodeId, Rng&) {
        return emb::build_perceptual_distance(g, target, image, e);
    }));
    cases.push_back(image_case("perceptual_to_features", [&e, r](Graph& g, NodeId image, NodeId, NodeId, Rng& rng) {
        return emb::build_perceptual_distance_to(g, image, emb::perceptual_features(random_image(r, r, rng), e), e);
    }));
    cases.push_back(image_case("localizer", [&e](Graph& g, NodeId image, NodeId, NodeId, Rng& rng) {
        return project(g, emb::build_localizer(g, image, e), rng);
    }));
    cases.push_back(image_case("identity", [&e](Graph& g, NodeId image, NodeId, NodeId, Rng& rng) {
        return project(g, emb::build_identity(g, image, e), rng);
    }));
    cases.push_back(image_case("pixel_loss", [](Graph& g, NodeId image, NodeId target, NodeId, Rng&) {
        return inv::build_pixel_loss(g, target, image);
    }));
    cases.push_back(image_case("landmark_loss", [&e, r](Graph& g, NodeId image, NodeId, NodeId, Rng& rng) {
        const double hi = static_cast<double>(r) - 2.0;
        return inv::build_landmark_loss(g, g.constant(random_tensor({e.config.landmarks, 2}, rng, 2.0, hi)),
                                        emb::build_localizer(g, image, e));
    }));
    cases.push_back(image_case("psnr", [](Graph& g, NodeId image, NodeId target, NodeId, Rng&) {
        return inv::build_psnr(g, image, target);
    }));
    cases.push_back(image_case("psnr_loss_difference", [](Graph& g, NodeId image, NodeId t1, NodeId t2, Rng&) {
        return g.sub(g.scale(inv::build_psnr(g, t1, image), 0.3), g.scale(inv::build_psnr(g, t2, image), 0.7));
    }));
    cases.push_back(image_case("psnr_loss_symmetric", [](Graph& g, NodeId image, NodeId t1, NodeId t2, Rng&) {
        return g.scale(g.add(g.scale(inv::build_psnr(g, t1, image), 0.3), g.scale(inv::build_psnr(g, t2, image), 0.7)),
                       -1.0);
    }));

    cases.push_back({"noise_regularization",
                     [](Graph& g, Bindings& b, Rng& rng) {
                         std::vector<NodeId> maps;
                         for (const char* name : {"n16", "n8", "n4"}) {
                             const Eigen::Index size = name[1] == '1' ? 16 : name[1] == '8' ? 8 : 4;
                             maps.push_back(bound_leaf(g, b, Tensor::from_matrix(random_matrix(size, size, rng)), name));
                         }
                         return inv::build_noise_regularization(g, maps);
                     },
                     64});
    cases.push_back({"latent_regularization",
                     [](Graph& g, Bindings& b, Rng& rng) {
                         const NodeId w = bound_leaf(g, b, Tensor::from_matrix(random_matrix(6, 32, rng)), "W");
                         return inv::build_latent_regularization(g, w);
                     },
                     64});
    cases.push_back({"total_loss",
                     [r](Graph& g, Bindings& b, Rng& rng) {
                         const auto& e = small_models().embedders;
                         const NodeId image = bound_leaf(g, b, to_chw(random_image(r, r, rng)), "image");
                         const NodeId target = g.constant(to_chw(random_image(r, r, rng)));
                         const NodeId latent = bound_leaf(g, b, Tensor::from_matrix(random_matrix(6, 32, rng)), "W");
                         const NodeId n16 = bound_leaf(g, b, Tensor::from_matrix(random_matrix(16, 16, rng)), "n16");
                         const NodeId n8 = bound_leaf(g, b, Tensor::from_matrix(random_matrix(8, 8, rng)), "n8");
                         const std::vector<NodeId> noise{n16, n8};
                         const double hi = static_cast<double>(r) - 2.0;
                         const NodeId land = inv::build_landmark_loss(
                             g, g.constant(random_tensor({e.config.landmarks, 2}, rng, 2.0, hi)),
                             emb::build_localizer(g, image, e));
                         return inv::build_total_loss(g, emb::build_perceptual_distance(g, target, image, e),
                                                      inv::build_pixel_loss(g, target, image),
                                                      inv::build_noise_regularization(g, noise),
                                                      inv::build_latent_regularization(g, latent), land,
                                                      inv::Lambdas{0.5, 3.0, 0.2, 0.01});
                     },
                     48});
    cases.push_back({"inversion_objective",
                     [](Graph& g, Bindings& b, Rng& rng) {
                         // The full chain W -> styles -> image -> all loss terms. lambda2 is 1 rather
                         // than 1e5: a noise term that large swamps central differences in W.
                         const auto& m = small_models();
                         const auto& w = m.generator;
                         const NodeId latent = g.leaf({w.config.num_latents(), w.config.latent_dim}, "W", true);
                         const auto noise = gen::noise_leaves(g, w.config, true);
                         const NodeId img = gen::build_synthesis(g, gen::build_styles(g, latent, w), noise, w);
                         b.bind(latent, gen::latent_to_tensor(seeded_latent(w, rng)));
                         const gen::NoiseMaps n = gen::random_noise(w.config, rng);
                         for (std::size_t i = 0; i < noise.size(); ++i) {
                             b.bind(noise[i], Tensor::from_matrix(n[i]));
                         }
                         const Image target = seeded_target(w, rng.next_u64());
                         const NodeId t = g.constant(to_chw(target));
                         const auto lt = emb::localize_landmarks(target, m.embedders);
                         Tensor lt_tensor({lt.size(), 2});
                         for (std::size_t k = 0; k < lt.size(); ++k) {
                             lt_tensor[2 * k] = lt[k].x();
                             lt_tensor[2 * k + 1] = lt[k].y();
                         }
                         return inv::build_total_loss(
                             g, emb::build_perceptual_distance(g, t, img, m.embedders), inv::build_pixel_loss(g, t, img),
                             inv::build_noise_regularization(g, noise), inv::build_latent_regularization(g, latent),
                             inv::build_landmark_loss(g, g.constant(lt_tensor), emb::build_localizer(g, img, m.embedders)),
                             inv::Lambdas{0.05, 1.0, 0.1, 1e-2});
                     },
                     32});
    return cases;
}

CheckResult gradient_suite(double analytic_scale)
{
    std::vector<std::pair<GradientCase, int>> runs;
    for (GradientCase& c : op_gradient_cases()) {
        runs.emplace_back(std::move(c), 3);
    }
    for (GradientCase& c : model_gradient_cases()) {
        runs.emplace_back(std::move(c), 1);
    }
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst = 0.0;
    std::string failures;
    for (const auto& [c, seeds] : runs) {
        for (int seed = 1; seed <= seeds; ++seed) {
            Rng rng(static_cast<std::uint64_t>(seed) * 7919 + 13);
            Graph g;
            Bindings b;
            const NodeId out = c.build(g, b, rng);
            tc::GradCheckOptions opt;
            opt.epsilon = 1e-5;
            opt.tolerance = 1e-4;
            opt.max_elements = c.max_elements;
            opt.analytic_scale = analytic_scale;
            const tc::GradCheckReport report = tc::finite_diff_check(g, out, b, opt);
            ++checked;
            worst = std::max(worst, report.worst());
            if (!report.passed()) {
                ++failed;
                if (failures.size() < 200) {
                    failures += " " + c.name;
                }
            }
        }
    }
    std::string detail = std::to_string(checked - failed) + "/" + std::to_string(checked) + " graphs pass, " +
                         std::to_string(runs.size()) + " cases, worst rel. error " + fmt("%.2e", worst);
    if (failed > 0) {
        detail += "; failing:" + failures;
    }
    return result(failed == 0, detail);
}

CheckResult self_inversion()
{
    const SmallModels& m = small_models();
    const inv::InversionConfig cfg;
    std::size_t ok = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Image target = seeded_target(m.generator, 1000 + seed);
        const auto lt = emb::localize_landmarks(target, m.embedders);
        inv::InversionConfig c = cfg;
        c.seed = seed;
        const inv::InversionResult r = inv::invert(target, lt, {m.generator, m.embedders}, c);
        const double pix0 = r.trace.front().terms.pixel;
        const double pix = inv::pixel_loss(target, gen::synthesize_from_w(r.latent, r.noise, m.generator));
        const double ratio = pix / pix0;
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio < 0.1 && r.trace.back().terms.total < r.trace.front().terms.total && r.trace.size() <= 1000) {
            ++ok;
        }
    }
    return result(ok == 5, std::to_string(ok) + "/5 targets reach pixel loss < 10% of step 0; worst ratio " +
                               fmt("%.4f", worst_ratio));
}

CheckResult landmark_enforcement()
{
    static const SmallModels m{gen::init_weights(landmark_generator_config()),
                               emb::init_embedders(landmark_embedder_config())};
    const std::size_t r = m.generator.config.resolution;
    std::size_t loss_wins = 0;
    std::size_t midpoint_wins = 0;
    std::ostringstream rows;
    for (std::uint64_t pair = 0; pair < 10; ++pair) {
        const Image a = seeded_subject(m.generator, 100 + 2 * pair);
        const Image b = seeded_subject(m.generator, 101 + 2 * pair);
        const auto la = emb::localize_landmarks(a, m.embedders);
        const auto lb = emb::localize_landmarks(b, m.embedders);
        const auto mid = geom::average_landmarks(la, lb);
        const auto dst = with_boundary(mid, r, r);
        const Image wa = geom::warp_piecewise_affine(a, with_boundary(la, r, r), dst);
        const Image wb = geom::warp_piecewise_affine(b, with_boundary(lb, r, r), dst);
        double land[2];
        double midpoint[2];
        for (int enforce = 0; enforce < 2; ++enforce) {
            inv::InversionConfig c;
            c.lambda_landmark = enforce ? 1e-2 : 0.0;
            c.seed = pair;
            const auto ra = inv::invert(wa, mid, {m.generator, m.embedders}, c);
            const auto rb = inv::invert(wb, mid, {m.generator, m.embedders}, c);
            land[enforce] = inv::landmark_loss(mid, gen::synthesize_from_w(ra.latent, ra.noise, m.generator),
                                               m.embedders);
            const Image morph = gen::synthesize_from_w(blend::average_latents(ra.latent, rb.latent),
                                                       gen::zero_noise(m.generator.config), m.generator);
            midpoint[enforce] = mean_distance(emb::localize_landmarks(morph, m.embedders), mid);
        }
        loss_wins += land[1] < land[0] ? 1 : 0;
        midpoint_wins += midpoint[1] < midpoint[0] ? 1 : 0;
        rows << " [" << fmt("%.3g", land[0]) << "->" << fmt("%.3g", land[1]) << ", " << fmt("%.3g", midpoint[0])
             << "->" << fmt("%.3g", midpoint[1]) << "]";
    }
    return result(loss_wins >= 9 && midpoint_wins >= 8,
                  "landmark loss smaller with enforcement " + std::to_string(loss_wins) +
                      "/10 (need 9), morph midpoint error smaller " + std::to_string(midpoint_wins) +
                      "/10 (need 8); per pair [loss, midpoint px]:" + rows.str());
}

CheckResult noise_cutoff()
{
    const SmallModels& m = small_models();
    const Image target = seeded_target(m.generator, 2024);
    const auto lt = emb::localize_landmarks(target, m.embedders);
    const inv::InversionConfig c;
    const inv::InversionResult r = inv::invert(target, lt, {m.generator, m.embedders}, c);
    std::size_t bad = 0;
    for (const inv::TraceRow& row : r.trace) {
        const bool after = row.step >= c.noise_cutoff_step;
        if (after && (row.noise_trainable || row.noise_max_abs != 0.0 || row.terms.noise != 0.0)) {
            ++bad;
        }
        if (!after && (!row.noise_trainable || row.noise_max_abs == 0.0)) {
            ++bad;
        }
    }
    for (const Eigen::MatrixXd& map : r.noise) {
        bad += map.isZero(0.0) ? 0 : 1;
    }
    return result(bad == 0 && r.trace.size() == c.steps,
                  "T_s = " + std::to_string(c.noise_cutoff_step) + ", " + std::to_string(r.trace.size()) +
                      " trace rows, " + std::to_string(bad) + " violations");
}

CheckResult pca_blend_oracles()
{
    const PcaFixture& f = pca_fixture();
    Rng rng(5);
    double worst_oracle = 0.0;
    double worst_average = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const gen::StyleSet a = gen::affine_styles(seeded_latent(f.weights, rng), f.weights);
        const gen::StyleSet b = gen::affine_styles(seeded_latent(f.weights, rng), f.weights);
        const double p = rng.uniform();
        const gen::StyleSet mx = blend::blend_elementwise_max(a, b, f.models, p);
        const gen::StyleSet ns = blend::blend_norm_select(a, b, f.models, p);
        const gen::StyleSet mx1 = blend::blend_elementwise_max(a, b, f.models, 1.0);
        const gen::StyleSet ns1 = blend::blend_norm_select(a, b, f.models, 1.0);
        const gen::StyleSet avg = blend::average_styles(a, b);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const blend::PcaModel& model = f.models[i];
            const auto naive_max =
                oracle::naive_pca_blend(a[i], b[i], model.mean, model.vectors, p, oracle::NaiveBlend::Max);
            const auto naive_norm =
                oracle::naive_pca_blend(a[i], b[i], model.mean, model.vectors, p, oracle::NaiveBlend::NormSelect);
            worst_oracle = std::max({worst_oracle, (mx[i] - naive_max).cwiseAbs().maxCoeff(),
                                     (ns[i] - naive_norm).cwiseAbs().maxCoeff()});
            worst_average = std::max({worst_average, (mx1[i] - avg[i]).cwiseAbs().maxCoeff(),
                                      (ns1[i] - avg[i]).cwiseAbs().maxCoeff()});
        }
    }
    return result(worst_oracle < 1e-10 && worst_average < 1e-8,
                  "100 pairs; max |blend - naive| " + fmt("%.2e", worst_oracle) + " (< 1e-10), max |p=1 - avg| " +
                      fmt("%.2e", worst_average) + " (< 1e-8)");
}

CheckResult pca_round_trip()
{
    const PcaFixture& f = pca_fixture();
    double worst = 0.0;
    std::size_t order_violations = 0;
    std::size_t truncated = 0;
    for (std::size_t i = 0; i < f.models.size(); ++i) {
        const blend::PcaModel& m = f.models[i];
        truncated += m.components() == m.dim() ? 0 : 1;
        for (Eigen::Index j = 0; j + 1 < m.eigenvalues.size(); ++j) {
            order_violations += m.eigenvalues[j] < m.eigenvalues[j + 1] ? 1 : 0;
        }
        for (const gen::StyleSet& s : f.corpus) {
            worst = std::max(worst, (blend::reconstruct(m, blend::project(m, s[i])) - s[i]).cwiseAbs().maxCoeff());
        }
    }
    return result(worst < 1e-8 && order_violations == 0 && truncated == 0,
                  std::to_string(f.models.size()) + " style indices, " + std::to_string(f.corpus.size()) +
                      " samples; max round-trip error " + fmt("%.2e", worst) + ", " +
                      std::to_string(order_violations) + " eigenvalue order violations");
}

CheckResult noise_training()
{
    const SmallModels& m = small_models();
    const Image t1 = seeded_target(m.generator, 21);
    const Image t2 = seeded_target(m.generator, 22);
    Rng rng(8);
    const gen::LatentCode w = seeded_latent(m.generator, rng);
    std::size_t rows = 0;
    std::size_t bad = 0;
    double worst_rms = 0.0;
    double worst_sum = 0.0;
    for (inv::PsnrLoss mode : {inv::PsnrLoss::Paper, inv::PsnrLoss::Symmetric}) {
        inv::NoiseTrainConfig cfg;
        cfg.mode = mode;
        const inv::NoiseTrainResult r = inv::noise_train(w, t1, t2, {m.generator, m.embedders}, cfg);
        bad += r.trace.size() == 200 ? 0 : 1;
        for (const inv::NoiseTraceRow& row : r.trace) {
            ++rows;
            worst_rms = std::max(worst_rms, row.rms_error);
            worst_sum = std::max(worst_sum, std::abs(row.lambda5 + row.lambda6 - 1.0));
        }
        // Shorter runs replay the same prefix, so their final maps are the maps after that step.
        for (std::size_t steps : {1, 57, 200}) {
            cfg.steps = steps;
            for (const Eigen::MatrixXd& map : inv::noise_train(w, t1, t2, {m.generator, m.embedders}, cfg).noise) {
                worst_rms = std::max(worst_rms, std::abs(oracle::rms(map) - 1.0));
            }
        }
    }
    const bool ok = bad == 0 && worst_rms <= 1e-6 && worst_sum <= std::numeric_limits<double>::epsilon();
    return result(ok, std::to_string(rows) + " steps over both sign modes; max |RMS - 1| " + fmt("%.2e", worst_rms) +
                          ", max |l5 + l6 - 1| " + fmt("%.2e", worst_sum));
}

CheckResult metrics_oracles()
{
    using namespace metrics;
    std::size_t mismatches = 0;
    std::size_t fixtures = 0;
    const auto grid = [](Rng& rng, std::size_t n, int levels) {
        std::vector<double> out(n);
        for (double& s : out) {
            s = static_cast<double>(static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(levels))) / 8.0 - 2.0;
        }
        return out;
    };
    const auto monotone = [](std::vector<double> v) {
        for (double& x : v) {
            x = std::exp(x / 4.0) + x * x * x;
        }
        return v;
    };
    const std::vector<double> targets(kBpcerTargets.begin(), kBpcerTargets.end());

    // Hand-built fixtures with known answers.
    std::vector<double> ten;
    for (int i = 1; i <= 10; ++i) {
        ten.push_back(i / 10.0);
    }
    mismatches += far_threshold(ten, 0.1) == 1.0 ? 0 : 1;
    mismatches += far_threshold(ten, 0.2) == 0.9 ? 0 : 1;
    const DetMetrics four = det_metrics({1.0, 2.0, 3.0, 5.0}, {4.0, 6.0, 7.0, 8.0});
    mismatches += four.eer == 0.25 && four.apcer_at_bpcer[0] == 0.25 ? 0 : 1;
    mismatches += det_metrics({0.0, 1.0}, {2.0, 3.0}).eer == 0.0 ? 0 : 1;
    mismatches += det_metrics({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}).eer == 0.5 ? 0 : 1;
    const std::vector<MorphTrial> five = {
        {"p1", 0.9, 0.8}, {"p2", 0.7, 0.95}, {"p3", 0.6, 0.4}, {"p4", 0.85, 0.85}, {"p5", 0.5, 0.99}};
    mismatches += mmpmr(five, 0.75) == 0.4 ? 0 : 1;
    fixtures += 7;

    Rng rng(17);
    std::size_t rank_failures = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int levels = 1 + trial % 40;
        const std::vector<double> morph = grid(rng, 1 + rng.next_u64() % 50, levels);
        const std::vector<double> bona = grid(rng, 1 + rng.next_u64() % 50, levels);
        const DetMetrics got = det_metrics(morph, bona);
        const oracle::BruteDet want = oracle::brute_det(morph, bona, targets);
        bool same = got.eer == want.eer && got.curve.size() == want.thresholds.size();
        for (std::size_t k = 0; same && k < kBpcerTargets.size(); ++k) {
            same = got.apcer_at_bpcer[k] == want.apcer_at_bpcer[k];
        }
        for (std::size_t i = 0; same && i < got.curve.size(); ++i) {
            same = got.curve[i].apcer == want.apcer[i] && got.curve[i].bpcer == want.bpcer[i];
        }
        mismatches += same ? 0 : 1;

        const std::vector<double> imp = grid(rng, 1 + rng.next_u64() % 100, levels);
        const std::vector<double> sa = grid(rng, morph.size(), levels);
        const std::vector<double> sb = grid(rng, morph.size(), levels);
        std::vector<MorphTrial> trials;
        std::vector<MorphTrial> trials_t;
        const std::vector<double> sa_t = monotone(sa);
        const std::vector<double> sb_t = monotone(sb);
        for (std::size_t i = 0; i < sa.size(); ++i) {
            trials.push_back({std::to_string(i), sa[i], sb[i]});
            trials_t.push_back({std::to_string(i), sa_t[i], sb_t[i]});
        }
        for (double far : {1e-3, 0.05, 0.1, 0.3}) {
            const double tau = far_threshold(imp, far);
            mismatches += tau == oracle::brute_far_threshold(imp, far) ? 0 : 1;
            mismatches += mmpmr(trials, tau) == oracle::brute_mmpmr(sa, sb, tau) ? 0 : 1;
            const double tau_t = far_threshold(monotone(imp), far);
            rank_failures += tau_t == monotone({tau})[0] && mmpmr(trials, tau) == mmpmr(trials_t, tau_t) ? 0 : 1;
        }
        const DetMetrics t = det_metrics(monotone(morph), monotone(bona));
        rank_failures += t.eer == got.eer && t.apcer_at_bpcer == got.apcer_at_bpcer ? 0 : 1;
        fixtures += 1;
    }
    return result(mismatches == 0 && rank_failures == 0,
                  std::to_string(fixtures) + " fixtures; " + std::to_string(mismatches) + " oracle mismatches, " +
                      std::to_string(rank_failures) + " rank-invariance failures");
}

CheckResult geometry()
{
    std::size_t violations = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        std::vector<geom::Point> pts;
        for (int i = 0; i < 20; ++i) {
            pts.emplace_back(rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0));
        }
        violations += oracle::count_circumcircle_violations(geom::delaunay_triangulate(pts), 1e-9);
    }

    Rng rng(7);
    const Image img = random_image(40, 48, rng);
    std::vector<geom::Point> pts;
    for (int i = 0; i < 12; ++i) {
        pts.emplace_back(rng.uniform(1.0, 46.0), rng.uniform(1.0, 38.0));
    }
    const auto boundary = geom::boundary_points(40, 48);
    pts.insert(pts.end(), boundary.begin(), boundary.end());
    const double identity = max_abs_diff(geom::warp_piecewise_affine(img, pts, pts), img);

    double worst_psnr = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        worst_psnr = std::min(worst_psnr, oracle::round_trip_psnr(oracle::checkerboard_fixture(seed)));
    }
    return result(violations == 0 && identity < 1e-6 && worst_psnr > 25.0,
                  "50 Delaunay sets with " + std::to_string(violations) + " circumcircle violations; identity warp " +
                      fmt("%.2e", identity) + "; checkerboard round trip " + fmt("%.2f", worst_psnr) + " dB");
}

CheckResult noise_regularization_oracle()
{
    Rng rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        gen::NoiseMaps maps;
        for (int k = 0; k < 4; ++k) {
            maps.push_back(random_matrix(16, 16, rng));
        }
        worst = std::max(worst, std::abs(inv::noise_regularization(maps) - oracle::noise_regularization_double_sum(maps)));
    }
    // A constant c on 16x16 contributes 2c^4 at 16 and 2(2c)^4 at the pooled 8x8 level.
    double worst_constant = 0.0;
    for (double c : {0.5, -1.3, 0.7}) {
        const gen::NoiseMaps constant{Eigen::MatrixXd::Constant(16, 16, c)};
        const double closed = 34.0 * std::pow(c, 4);
        worst_constant = std::max({worst_constant, std::abs(inv::noise_regularization(constant) - closed),
                                   std::abs(oracle::noise_regularization_double_sum(constant) - closed)});
    }
    return result(worst < 1e-10 && worst_constant < 1e-10,
                  "random 16x16 maps max diff " + fmt("%.2e", worst) + ", constant-map closed form max diff " +
                      fmt("%.2e", worst_constant));
}

} // namespace morphgen::checks
