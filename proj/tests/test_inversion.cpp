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
#include "morphgen/gradcheck.hpp"
#include "morphgen/inversion.hpp"
#include "morphgen/oracles/inversion_oracles.hpp"
#include "morphgen/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace morphgen;
using namespace morphgen::inv;

namespace {

gen::GeneratorConfig small_generator(std::uint64_t seed = 3)
{
    gen::GeneratorConfig c;
    c.resolution = 16;
    c.latent_dim = 32;
    c.channel_base = 256;
    c.max_channels = 8;
    c.seed = seed;
    return c;
}

emb::EmbedderConfig small_embedders()
{
    emb::EmbedderConfig c;
    c.image_size = 16;
    c.landmarks = 4;
    return c;
}

Image random_image(std::size_t size, Rng& rng)
{
    Image img(size, size);
    for (double& v : img.data) {
        v = rng.uniform(0.05, 0.95);
    }
    return img;
}

Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, Rng& rng)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.normal();
    }
    return m;
}

Eigen::MatrixXd random_map(std::size_t r, Rng& rng)
{
    return random_matrix(r, r, rng);
}

Image seeded_target(const gen::GeneratorWeights& w, std::uint64_t seed)
{
    Rng rng(seed);
    Eigen::VectorXd z(w.config.latent_dim);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    return gen::synthesize_from_w(gen::broadcast_latent(gen::map_latent(z, w), w.config), gen::zero_noise(w.config),
                                  w);
}

} // namespace

TEST_CASE("inversion config invariants and schedules")
{
    InversionConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.learning_rate(0) == 0.0);
    CHECK(c.learning_rate(50) == doctest::Approx(c.lr_peak).epsilon(1e-15));
    CHECK(c.learning_rate(25) == doctest::Approx(0.05));
    CHECK(c.learning_rate(399) == c.lr_peak);
    CHECK(c.learning_rate(c.steps - 1) < 1e-3 * c.lr_peak);
    for (std::size_t t = c.steps - c.lr_cosine_rampdown_steps; t + 1 < c.steps; ++t) {
        CHECK(c.learning_rate(t + 1) <= c.learning_rate(t));
    }
    CHECK(c.latent_noise_factor(0) == 1.0);
    CHECK(c.latent_noise_factor(249) == 1.0);
    CHECK(c.latent_noise_factor(500) == doctest::Approx(0.5));
    CHECK(c.latent_noise_factor(750) == 0.0);
    CHECK(c.latent_noise_factor(999) == 0.0);

    InversionConfig bad = c;
    bad.noise_cutoff_step = 0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = c;
    bad.noise_cutoff_step = c.steps;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = c;
    bad.lr_cosine_rampdown_steps = 960;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = c;
    bad.lambda_noise = -1.0;
    CHECK_THROWS_AS(bad.validate(), InputError);

    const InversionConfig s = c.scaled_to(300);
    CHECK_NOTHROW(s.validate());
    CHECK(s.steps == 300);
    CHECK(s.lr_rampup_steps == 15);
    CHECK(s.lr_cosine_rampdown_steps == 180);
    CHECK(s.noise_cutoff_step == 120);
    CHECK(s.latent_noise_hold_steps == 75);
    CHECK(s.latent_noise_zero_step == 225);
    CHECK(s.learning_rate(0) == 0.0);
    CHECK(s.learning_rate(299) < 1e-3 * s.lr_peak);
    CHECK_NOTHROW(c.scaled_to(3).validate());
}

TEST_CASE("pixel loss")
{
    Rng rng(1);
    const Image t = random_image(16, rng);
    CHECK(pixel_loss(t, t) == 0.0);
    Image g = t;
    for (double& v : g.data) {
        v += 0.5;
    }
    CHECK(pixel_loss(t, g) == doctest::Approx(0.5).epsilon(1e-14));
    const Image r = random_image(16, rng);
    CHECK(std::abs(pixel_loss(t, r) - oracle::mean_abs_diff(t, r)) < 1e-14);
    CHECK_THROWS_AS(pixel_loss(t, Image(8, 8)), ShapeError);
}

TEST_CASE("landmark loss")
{
    const emb::EmbedderWeights e = emb::init_embedders(small_embedders());
    Rng rng(2);
    const Image img = random_image(16, rng);
    const geom::LandmarkSet found = emb::localize_landmarks(img, e);
    CHECK(landmark_loss(found, img, e) == 0.0);

    geom::LandmarkSet shifted = found;
    shifted[2] += geom::Point(3.0, 4.0);
    CHECK(landmark_loss(shifted, img, e) == doctest::Approx(25.0).epsilon(1e-12));

    geom::LandmarkSet random = found;
    for (auto& p : random) {
        p = geom::Point(rng.uniform(0, 16), rng.uniform(0, 16));
    }
    CHECK(std::abs(landmark_loss(random, img, e) - oracle::landmark_sq_sum(random, found)) < 1e-10);

    random.pop_back();
    CHECK_THROWS_AS(landmark_loss(random, img, e), InputError);
}

TEST_CASE("noise regularization")
{
    SUBCASE("constant map closed form")
    {
        for (double c : {0.5, -1.3, 2.0}) {
            const gen::NoiseMaps maps{Eigen::MatrixXd::Constant(8, 8, c)};
            CHECK(noise_regularization(maps) == doctest::Approx(2.0 * std::pow(c, 4)).epsilon(1e-13));
            CHECK(std::abs(oracle::noise_regularization_double_sum(maps) - 2.0 * std::pow(c, 4)) < 1e-12);
        }
    }
    SUBCASE("single impulse")
    {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(8, 8);
        m(3, 5) = 1.0;
        CHECK(noise_regularization({m}) == 0.0);
    }
    SUBCASE("random maps against the double sum")
    {
        Rng rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            const gen::NoiseMaps maps{random_map(16, rng), random_map(16, rng), random_map(8, rng),
                                      random_map(4, rng), random_map(32, rng)};
            CHECK(std::abs(noise_regularization(maps) - oracle::noise_regularization_double_sum(maps)) < 1e-10);
        }
        const gen::NoiseMaps constant16{Eigen::MatrixXd::Constant(16, 16, 0.7)};
        CHECK(std::abs(noise_regularization(constant16) - oracle::noise_regularization_double_sum(constant16)) <
              1e-10);
    }
    CHECK(noise_regularization({}) == 0.0);
}

TEST_CASE("latent regularization")
{
    CHECK(latent_regularization(gen::LatentCode::Zero(10, 64)) == 0.0);
    CHECK(latent_regularization(gen::LatentCode::Ones(10, 64)) == doctest::Approx(1.0).epsilon(1e-15));
    Rng rng(4);
    const gen::LatentCode w = random_matrix(12, 7, rng);
    CHECK(std::abs(latent_regularization(w) - oracle::rms(w)) < 1e-14);
}

TEST_CASE("total loss composition")
{
    const gen::GeneratorConfig gc = small_generator();
    const gen::GeneratorWeights gw = gen::init_weights(gc);
    const emb::EmbedderWeights e = emb::init_embedders(small_embedders());
    Rng rng(5);
    const Image t = random_image(16, rng);
    const Image g = random_image(16, rng);
    const geom::LandmarkSet lt = emb::localize_landmarks(t, e);
    const gen::LatentCode w = random_matrix(gc.num_latents(), gc.latent_dim, rng);
    gen::NoiseMaps noise = gen::random_noise(gc, rng);

    const LossTerms zero_weights = total_loss(t, g, lt, w, noise, e, Lambdas{0, 0, 0, 0});
    CHECK(zero_weights.total == emb::perceptual_distance(t, g, e));

    const LossTerms vanish = total_loss(t, t, lt, gen::LatentCode::Zero(w.rows(), w.cols()), gen::zero_noise(gc), e,
                                        Lambdas{});
    CHECK(vanish.total == 0.0);

    const Lambdas l{0.3, 2.0, 0.7, 0.01};
    const LossTerms terms = total_loss(t, g, lt, w, noise, e, l);
    CHECK(terms.total == recompose(terms, l));
    CHECK(terms.pixel == pixel_loss(t, g));
    CHECK(terms.noise == doctest::Approx(noise_regularization(noise)).epsilon(1e-14));
    CHECK(terms.latent == latent_regularization(w));
    CHECK(terms.landmark == landmark_loss(lt, g, e));
    const double by_hand = emb::perceptual_distance(t, g, e) + l.pixel * pixel_loss(t, g) +
                           l.noise * noise_regularization(noise) + l.latent * latent_regularization(w) +
                           l.landmark * landmark_loss(lt, g, e);
    CHECK(terms.total == doctest::Approx(by_hand).epsilon(1e-13));
}

TEST_CASE("loss term gradients")
{
    const emb::EmbedderWeights e = emb::init_embedders(small_embedders());
    Rng rng(6);
    tc::GradCheckOptions opt;
    opt.max_elements = 64;

    tc::Graph g;
    const tc::NodeId image = g.leaf({3, 16, 16}, "image", true);
    const tc::NodeId target = g.constant(to_chw(random_image(16, rng)));
    const tc::NodeId other = g.constant(to_chw(random_image(16, rng)));
    const tc::NodeId latent = g.leaf({10, 16}, "latent", true);
    std::vector<tc::NodeId> noise{g.leaf({16, 16}, "n16", true), g.leaf({8, 8}, "n8", true)};
    tc::Tensor lt({4, 2});
    for (double& v : lt.storage()) {
        v = rng.uniform(2.0, 14.0);
    }
    const tc::NodeId pert = emb::build_perceptual_distance(g, target, image, e);
    const tc::NodeId pix = build_pixel_loss(g, target, image);
    const tc::NodeId nreg = build_noise_regularization(g, noise);
    const tc::NodeId lat = build_latent_regularization(g, latent);
    const tc::NodeId land = build_landmark_loss(g, g.constant(lt), emb::build_localizer(g, image, e));
    const tc::NodeId total = build_total_loss(g, pert, pix, nreg, lat, land, Lambdas{0.5, 3.0, 0.2, 0.01});
    const tc::NodeId p1 = build_psnr(g, image, target);
    const tc::NodeId l5 = g.scalar(0.3);
    const tc::NodeId psnr_loss = g.sub(g.mul(l5, p1), g.mul(g.scalar(0.7), build_psnr(g, image, other)));

    tc::Bindings b;
    b.bind(image, to_chw(random_image(16, rng)));
    b.bind(latent, tc::Tensor::from_matrix(random_matrix(10, 16, rng)));
    b.bind(noise[0], tc::Tensor::from_matrix(random_map(16, rng)));
    b.bind(noise[1], tc::Tensor::from_matrix(random_map(8, rng)));

    const std::vector<std::pair<std::string, tc::NodeId>> cases{
        {"perceptual", pert}, {"pixel", pix}, {"noise", nreg},     {"latent", lat},
        {"landmark", land},   {"total", total}, {"psnr", p1}, {"psnr_loss", psnr_loss}};
    for (const auto& [name, node] : cases) {
        const auto report = tc::finite_diff_check(g, node, b, opt);
        INFO(name << ": " << report.failure);
        CHECK(report.failure.empty());
        for (const auto& leaf : report.leaves) {
            INFO(name << " / " << leaf.name << " " << leaf.max_rel_error);
            CHECK(leaf.passed);
        }
    }
}

TEST_CASE("psnr")
{
    Rng rng(7);
    const Image a = random_image(8, rng);
    CHECK(psnr(a, a) == kPsnrMax);
    CHECK(psnr(Image(4, 4, 3, 0.0), Image(4, 4, 3, 1.0)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    const Image b = random_image(8, rng);
    CHECK(std::abs(psnr(a, b) - oracle::psnr_from_mse(a, b)) < 1e-10);
    CHECK_THROWS_AS(psnr(a, Image(4, 4)), ShapeError);

    tc::Graph g;
    const tc::NodeId node = build_psnr(g, g.constant(to_chw(a)), g.constant(to_chw(b)));
    CHECK(tc::scalar_value(g, node, {}) == doctest::Approx(psnr(a, b)).epsilon(1e-12));
    CHECK(psnr_loss_from_string("paper") == PsnrLoss::Paper);
    CHECK(psnr_loss_from_string("symmetric") == PsnrLoss::Symmetric);
    CHECK_THROWS_AS(psnr_loss_from_string("other"), InputError);
}

TEST_CASE("self-inversion on a 16x16 generator")
{
    const gen::GeneratorWeights gw = gen::init_weights(small_generator());
    const emb::EmbedderWeights e = emb::init_embedders(small_embedders());
    const Image target = seeded_target(gw, 11);
    const geom::LandmarkSet lt = emb::localize_landmarks(target, e);
    InversionConfig cfg = InversionConfig{}.scaled_to(300);
    cfg.w_avg_samples = 200;
    cfg.seed = 5;

    std::size_t callbacks = 0;
    const InversionResult r = invert(target, lt, {gw, e}, cfg, [&](const TraceRow&) { ++callbacks; });
    REQUIRE(r.trace.size() == cfg.steps);
    CHECK(callbacks == cfg.steps);

    const double pix0 = r.trace.front().terms.pixel;
    const Image final_image = gen::synthesize_from_w(r.latent, r.noise, gw);
    CHECK(pixel_loss(target, final_image) < 0.1 * pix0);
    CHECK(r.trace.back().terms.total < r.trace.front().terms.total);

    const Lambdas l{cfg.lambda_pixel, cfg.lambda_noise, cfg.lambda_latent, cfg.lambda_landmark};
    for (const TraceRow& row : r.trace) {
        CHECK(row.terms.total == recompose(row.terms, l));
        CHECK(row.lr == cfg.learning_rate(row.step));
        if (row.step >= cfg.noise_cutoff_step) {
            CHECK_FALSE(row.noise_trainable);
            CHECK(row.noise_max_abs == 0.0);
            CHECK(row.terms.noise == 0.0);
        } else {
            CHECK(row.noise_trainable);
            CHECK(row.noise_max_abs > 0.0);
        }
    }
    for (const Eigen::MatrixXd& m : r.noise) {
        CHECK(m.isZero(0.0));
    }

    const InversionResult again = invert(target, lt, {gw, e}, cfg);
    CHECK(again.latent == r.latent);
    CHECK(again.trace.back().terms.total == r.trace.back().terms.total);

    const auto dir = std::filesystem::temp_directory_path() / "morphgen_test_inversion";
    std::filesystem::create_directories(dir);
    write_trace_csv(dir / "trace.csv", r.trace);
    std::ifstream f(dir / "trace.csv");
    std::size_t lines = 0;
    for (std::string line; std::getline(f, line);) {
        ++lines;
    }
    CHECK(lines == cfg.steps + 1);
}

TEST_CASE("inversion input errors and abort")
{
    const gen::GeneratorWeights gw = gen::init_weights(small_generator());
    const emb::EmbedderWeights e = emb::init_embedders(small_embedders());
    const Image target = seeded_target(gw, 12);
    const geom::LandmarkSet lt = emb::localize_landmarks(target, e);
    InversionConfig cfg = InversionConfig{}.scaled_to(20);
    cfg.w_avg_samples = 10;

    CHECK_THROWS_AS(invert(Image(8, 8), lt, {gw, e}, cfg), ShapeError);
    CHECK_THROWS_AS(invert(target, geom::LandmarkSet(3), {gw, e}, cfg), InputError);
    emb::EmbedderConfig wrong = small_embedders();
    wrong.image_size = 32;
    const emb::EmbedderWeights e32 = emb::init_embedders(wrong);
    CHECK_THROWS_AS(invert(target, lt, {gw, e32}, cfg), InputError);

    cfg.lr_peak = 1e200;
    bool aborted = false;
    try {
        invert(target, lt, {gw, e}, cfg);
    } catch (const InversionAborted& ex) {
        aborted = true;
        CHECK(ex.trace().size() < cfg.steps);
        CHECK_FALSE(ex.trace().empty());
    }
    CHECK(aborted);
}

TEST_CASE("noise training invariants")
{
    const gen::GeneratorWeights gw = gen::init_weights(small_generator());
    const emb::EmbedderWeights e = emb::init_embedders(small_embedders());
    const Image t1 = seeded_target(gw, 21);
    const Image t2 = seeded_target(gw, 22);
    Rng rng(8);
    Eigen::VectorXd z(gw.config.latent_dim);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    const gen::LatentCode w = gen::broadcast_latent(gen::map_latent(z, gw), gw.config);

    for (PsnrLoss mode : {PsnrLoss::Paper, PsnrLoss::Symmetric}) {
        NoiseTrainConfig cfg;
        cfg.steps = 30;
        cfg.mode = mode;
        const NoiseTrainResult r = noise_train(w, t1, t2, {gw, e}, cfg);
        REQUIRE(r.trace.size() == cfg.steps);
        for (const NoiseTraceRow& row : r.trace) {
            CHECK(row.rms_error < 1e-6);
            CHECK(row.lambda5 + row.lambda6 == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(row.lambda5 >= 0.0);
            CHECK(row.lambda5 <= 1.0);
        }
        for (const Eigen::MatrixXd& m : r.noise) {
            CHECK(std::abs(oracle::rms(m) - 1.0) < 1e-6);
        }
        CHECK(noise_train(w, t1, t2, {gw, e}, cfg).noise == r.noise);
    }

    SUBCASE("symmetric with identical subjects is negative PSNR")
    {
        NoiseTrainConfig cfg;
        cfg.steps = 25;
        cfg.mode = PsnrLoss::Symmetric;
        const NoiseTrainResult r = noise_train(w, t1, t1, {gw, e}, cfg);
        for (const NoiseTraceRow& row : r.trace) {
            CHECK(row.lambda5 == 0.5);
            CHECK(row.loss == doctest::Approx(-row.psnr1).epsilon(1e-12));
        }
        CHECK(r.trace.back().psnr1 > r.trace.front().psnr1);
        CHECK(r.trace.back().loss < r.trace.front().loss);
    }

    CHECK_THROWS_AS(noise_train(w, Image(8, 8), t2, {gw, e}, NoiseTrainConfig{}), ShapeError);
    CHECK_THROWS_AS(noise_train(w.topRows(2), t1, t2, {gw, e}, NoiseTrainConfig{}), InputError);
}

TEST_CASE("identity balance")
{
    const emb::EmbedderWeights e = emb::init_embedders(small_embedders());
    Rng rng(9);
    const Image a = random_image(16, rng);
    const Image b = random_image(16, rng);
    const auto [l5, l6] = identity_balance(a, a, b, e);
    CHECK(l5 == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(l6 == doctest::Approx(1.0).epsilon(1e-12));
    const auto [m5, m6] = identity_balance(a, a, a, e);
    CHECK(m5 == 0.5);
    CHECK(m6 == 0.5);
}
