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

#include "morphgen/inversion.hpp"

#include "morphgen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace morphgen::inv {
namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
constexpr std::uint64_t kExploreStream = 0x6578706cULL;

struct Adam {
    double beta1;
    double beta2;
    double eps;

    struct Slot {
        tc::Tensor m;
        tc::Tensor v;
        std::size_t t = 0;
    };

    void step(tc::Tensor& param, const tc::Tensor& grad, Slot& slot, double lr) const
    {
        if (slot.m.shape() != param.shape()) {
            slot.m = tc::Tensor(param.shape());
            slot.v = tc::Tensor(param.shape());
        }
        ++slot.t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(slot.t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(slot.t));
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double g = grad[i];
            slot.m[i] = beta1 * slot.m[i] + (1.0 - beta1) * g;
            slot.v[i] = beta2 * slot.v[i] + (1.0 - beta2) * g * g;
            param[i] -= lr * (slot.m[i] / c1) / (std::sqrt(slot.v[i] / c2) + eps);
        }
    }
};

Lambdas lambdas_of(const InversionConfig& c)
{
    return {c.lambda_pixel, c.lambda_noise, c.lambda_latent, c.lambda_landmark};
}

tc::Tensor landmarks_tensor(const geom::LandmarkSet& landmarks)
{
    tc::Tensor t({landmarks.size(), 2});
    for (std::size_t k = 0; k < landmarks.size(); ++k) {
        t[2 * k] = landmarks[k].x();
        t[2 * k + 1] = landmarks[k].y();
    }
    return t;
}

void check_same_shape(const Image& a, const Image& b, const char* what)
{
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": images differ in shape (" + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + "x" + std::to_string(a.channels) + " vs " +
                         std::to_string(b.height) + "x" + std::to_string(b.width) + "x" +
                         std::to_string(b.channels) + ")");
    }
}

void check_target(const Image& image, const gen::GeneratorConfig& cfg, const char* what)
{
    if (image.height != cfg.resolution || image.width != cfg.resolution || image.channels != 3) {
        throw ShapeError(std::string(what) + " must be " + std::to_string(cfg.resolution) + "x" +
                         std::to_string(cfg.resolution) + "x3");
    }
}

void check_landmark_count(const geom::LandmarkSet& landmarks, const emb::EmbedderWeights& embedders)
{
    if (landmarks.size() != embedders.config.landmarks) {
        throw InputError("landmark set has " + std::to_string(landmarks.size()) + " points, localizer has " +
                         std::to_string(embedders.config.landmarks));
    }
}

void check_models(const Models& models)
{
    if (models.embedders.config.image_size != models.generator.config.resolution) {
        throw InputError("embedders expect " + std::to_string(models.embedders.config.image_size) +
                         " px images, generator produces " + std::to_string(models.generator.config.resolution));
    }
}

double rms(const Eigen::MatrixXd& m)
{
    return std::sqrt(m.squaredNorm() / static_cast<double>(m.size()));
}

double max_abs(const std::vector<tc::Tensor>& tensors)
{
    double out = 0.0;
    for (const tc::Tensor& t : tensors) {
        for (double v : t.storage()) {
            out = std::max(out, std::abs(v));
        }
    }
    return out;
}

} // namespace

void InversionConfig::validate() const
{
    if (steps == 0) {
        throw InputError("inversion: steps must be positive");
    }
    if (noise_cutoff_step == 0 || noise_cutoff_step >= steps) {
        throw InputError("inversion: T_s must satisfy 0 < T_s < steps (T_s=" + std::to_string(noise_cutoff_step) +
                         ", steps=" + std::to_string(steps) + ")");
    }
    if (lr_rampup_steps + lr_cosine_rampdown_steps > steps) {
        throw InputError("inversion: lr_rampup_steps + lr_cosine_rampdown_steps exceeds steps");
    }
    if (latent_noise_hold_steps > latent_noise_zero_step) {
        throw InputError("inversion: latent_noise_hold_steps exceeds latent_noise_zero_step");
    }
    for (double l : {lambda_pixel, lambda_noise, lambda_latent, lambda_landmark}) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw InputError("inversion: loss weights must be finite and non-negative");
        }
    }
    if (!(lr_peak > 0.0) || !std::isfinite(lr_peak)) {
        throw InputError("inversion: lr_peak must be positive");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
        throw InputError("inversion: Adam betas must be in [0, 1) and eps positive");
    }
    if (!(latent_noise_scale >= 0.0) || !std::isfinite(latent_noise_scale)) {
        throw InputError("inversion: latent_noise_scale must be non-negative");
    }
    if (w_avg_samples == 0) {
        throw InputError("inversion: w_avg_samples must be positive");
    }
}

InversionConfig InversionConfig::scaled_to(std::size_t new_steps) const
{
    if (new_steps < 2) {
        throw InputError("inversion: cannot scale the schedule below 2 steps");
    }
    const double f = static_cast<double>(new_steps) / static_cast<double>(steps);
    auto scale = [f](std::size_t n) { return static_cast<std::size_t>(std::llround(static_cast<double>(n) * f)); };
    InversionConfig c = *this;
    c.steps = new_steps;
    c.lr_rampup_steps = scale(lr_rampup_steps);
    c.lr_cosine_rampdown_steps = std::min(scale(lr_cosine_rampdown_steps), new_steps - c.lr_rampup_steps);
    c.latent_noise_hold_steps = scale(latent_noise_hold_steps);
    c.latent_noise_zero_step = std::max(scale(latent_noise_zero_step), c.latent_noise_hold_steps);
    c.noise_cutoff_step = std::clamp<std::size_t>(scale(noise_cutoff_step), 1, new_steps - 1);
    return c;
}

double InversionConfig::learning_rate(std::size_t step) const
{
    const double t = static_cast<double>(step);
    double ramp = 1.0;
    if (lr_rampup_steps > 0) {
        ramp = std::min(1.0, t / static_cast<double>(lr_rampup_steps));
    }
    const std::size_t start = steps - lr_cosine_rampdown_steps;
    if (lr_cosine_rampdown_steps > 0 && step >= start) {
        const double progress =
            std::min(1.0, static_cast<double>(step - start) / static_cast<double>(lr_cosine_rampdown_steps));
        ramp *= 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    }
    return lr_peak * ramp;
}

double InversionConfig::latent_noise_factor(std::size_t step) const
{
    if (step < latent_noise_hold_steps) {
        return 1.0;
    }
    if (step >= latent_noise_zero_step) {
        return 0.0;
    }
    return 1.0 - static_cast<double>(step - latent_noise_hold_steps) /
                     static_cast<double>(latent_noise_zero_step - latent_noise_hold_steps);
}

tc::NodeId build_pixel_loss(tc::Graph& g, tc::NodeId target, tc::NodeId image)
{
    return g.mean(g.abs(g.sub(target, image)));
}

tc::NodeId build_landmark_loss(tc::Graph& g, tc::NodeId target, tc::NodeId landmarks)
{
    return g.sum(g.square(g.sub(target, landmarks)));
}

tc::NodeId build_noise_regularization(tc::Graph& g, std::span<const tc::NodeId> noise)
{
    std::optional<tc::NodeId> total;
    for (tc::NodeId x : noise) {
        if (g.shape(x).size() != 2 || g.shape(x)[0] != g.shape(x)[1]) {
            throw ShapeError("noise map must be square, got " + tc::to_string(g.shape(x)));
        }
        while (true) {
            const std::size_t r = g.shape(x)[0];
            const tc::NodeId horizontal = g.square(g.mean(g.mul(x, g.roll(x, 1, 1))));
            const tc::NodeId vertical = g.square(g.mean(g.mul(x, g.roll(x, 0, 1))));
            const tc::NodeId level = g.add(horizontal, vertical);
            total = total ? g.add(*total, level) : level;
            if (r <= 8 || r % 2 != 0) {
                break;
            }
            x = g.scale(g.avgpool_2x(x), 2.0);
        }
    }
    return total ? *total : g.scalar(0.0);
}

tc::NodeId build_latent_regularization(tc::Graph& g, tc::NodeId latent)
{
    return g.sqrt(g.mean(g.square(latent)));
}

tc::NodeId build_total_loss(tc::Graph& g, tc::NodeId perceptual, tc::NodeId pixel, tc::NodeId noise,
                            tc::NodeId latent, tc::NodeId landmark, const Lambdas& l)
{
    tc::NodeId total = g.add(perceptual, g.scale(pixel, l.pixel));
    total = g.add(total, g.scale(noise, l.noise));
    total = g.add(total, g.scale(latent, l.latent));
    return g.add(total, g.scale(landmark, l.landmark));
}

double recompose(const LossTerms& t, const Lambdas& l)
{
    double total = t.perceptual + t.pixel * l.pixel;
    total = total + t.noise * l.noise;
    total = total + t.latent * l.latent;
    return total + t.landmark * l.landmark;
}

double pixel_loss(const Image& target, const Image& image)
{
    check_same_shape(target, image, "pixel_loss");
    tc::Graph g;
    const tc::NodeId out = build_pixel_loss(g, g.constant(to_chw(target)), g.constant(to_chw(image)));
    return tc::scalar_value(g, out, {});
}

double landmark_loss(const geom::LandmarkSet& target, const Image& image, const emb::EmbedderWeights& embedders)
{
    check_landmark_count(target, embedders);
    tc::Graph g;
    const tc::NodeId lm = emb::build_localizer(g, g.constant(to_chw(image)), embedders);
    const tc::NodeId out = build_landmark_loss(g, g.constant(landmarks_tensor(target)), lm);
    return tc::scalar_value(g, out, {});
}

double noise_regularization(const gen::NoiseMaps& noise)
{
    tc::Graph g;
    std::vector<tc::NodeId> nodes;
    for (const Eigen::MatrixXd& m : noise) {
        nodes.push_back(g.constant(tc::Tensor::from_matrix(m)));
    }
    return tc::scalar_value(g, build_noise_regularization(g, nodes), {});
}

double latent_regularization(const gen::LatentCode& latent)
{
    if (latent.size() == 0) {
        throw ShapeError("latent_regularization: empty latent");
    }
    tc::Graph g;
    return tc::scalar_value(g, build_latent_regularization(g, g.constant(gen::latent_to_tensor(latent))), {});
}

LossTerms total_loss(const Image& target, const Image& image, const geom::LandmarkSet& target_landmarks,
                     const gen::LatentCode& latent, const gen::NoiseMaps& noise,
                     const emb::EmbedderWeights& embedders, const Lambdas& lambdas)
{
    check_same_shape(target, image, "total_loss");
    check_landmark_count(target_landmarks, embedders);
    tc::Graph g;
    const tc::NodeId t = g.constant(to_chw(target));
    const tc::NodeId x = g.constant(to_chw(image));
    std::vector<tc::NodeId> n;
    for (const Eigen::MatrixXd& m : noise) {
        n.push_back(g.constant(tc::Tensor::from_matrix(m)));
    }
    const tc::NodeId pert = emb::build_perceptual_distance(g, t, x, embedders);
    const tc::NodeId pix = build_pixel_loss(g, t, x);
    const tc::NodeId nreg = build_noise_regularization(g, n);
    const tc::NodeId lat = build_latent_regularization(g, g.constant(gen::latent_to_tensor(latent)));
    const tc::NodeId land = build_landmark_loss(g, g.constant(landmarks_tensor(target_landmarks)),
                                                emb::build_localizer(g, x, embedders));
    const tc::NodeId total = build_total_loss(g, pert, pix, nreg, lat, land, lambdas);
    const std::vector<tc::NodeId> outs{pert, pix, nreg, lat, land, total};
    const tc::Values v = tc::evaluate(g, {}, outs);
    return {v[pert].item(), v[pix].item(), v[nreg].item(), v[lat].item(), v[land].item(), v[total].item()};
}

InversionResult invert(const Image& target, const geom::LandmarkSet& target_landmarks, const Models& models,
                       const InversionConfig& config, const StepCallback& on_step)
{
    config.validate();
    check_models(models);
    const gen::GeneratorWeights& gw = models.generator;
    const gen::GeneratorConfig& gc = gw.config;
    check_target(target, gc, "inversion target");
    check_landmark_count(target_landmarks, models.embedders);

    const Lambdas lambdas = lambdas_of(config);
    const std::size_t rows = gc.num_latents();
    const std::size_t cols = gc.latent_dim;

    tc::Graph g;
    const tc::NodeId w_leaf = g.leaf({rows, cols}, "latent", true);
    const tc::NodeId explore = g.leaf({rows, cols}, "exploration");
    const std::vector<tc::NodeId> noise = gen::noise_leaves(g, gc, true);
    const auto styles = gen::build_styles(g, g.add(w_leaf, explore), gw);
    const tc::NodeId image = gen::build_synthesis(g, styles, noise, gw);

    const tc::NodeId pert =
        emb::build_perceptual_distance_to(g, image, emb::perceptual_features(target, models.embedders), models.embedders);
    const tc::NodeId pix = build_pixel_loss(g, g.constant(to_chw(target)), image);
    const tc::NodeId nreg = build_noise_regularization(g, noise);
    const tc::NodeId lat = build_latent_regularization(g, w_leaf);
    const tc::NodeId land = build_landmark_loss(g, g.constant(landmarks_tensor(target_landmarks)),
                                                emb::build_localizer(g, image, models.embedders));
    const tc::NodeId total = build_total_loss(g, pert, pix, nreg, lat, land, lambdas);

    tc::Tensor w = gen::latent_to_tensor(gen::broadcast_latent(gen::mean_latent(gw, config.w_avg_samples, config.seed), gc));
    const double sigma0 = config.latent_noise_scale * std::sqrt(w.as_vector().squaredNorm() / static_cast<double>(w.size()));

    Rng noise_rng(config.seed ^ kNoiseStream);
    std::vector<tc::Tensor> noise_values;
    for (const Eigen::MatrixXd& m : gen::random_noise(gc, noise_rng)) {
        noise_values.push_back(tc::Tensor::from_matrix(m));
    }
    Rng explore_rng(config.seed ^ kExploreStream);

    const Adam adam{config.adam_beta1, config.adam_beta2, config.adam_eps};
    Adam::Slot w_slot;
    std::vector<Adam::Slot> noise_slots(noise.size());

    InversionResult result;
    result.trace.reserve(config.steps);
    bool noise_trainable = true;
    tc::Tensor perturbation({rows, cols});

    for (std::size_t step = 0; step < config.steps; ++step) {
        if (step == config.noise_cutoff_step) {
            noise_trainable = false;
            for (tc::Tensor& t : noise_values) {
                std::fill(t.storage().begin(), t.storage().end(), 0.0);
            }
        }
        const double lr = config.learning_rate(step);
        const double sigma = sigma0 * config.latent_noise_factor(step);
        for (double& v : perturbation.storage()) {
            v = sigma * explore_rng.normal();
        }

        tc::Bindings bindings;
        bindings.bind(w_leaf, w).bind(explore, perturbation);
        for (std::size_t i = 0; i < noise.size(); ++i) {
            bindings.bind(noise[i], noise_values[i]);
        }
        std::vector<tc::NodeId> wrt{w_leaf};
        if (noise_trainable) {
            wrt.insert(wrt.end(), noise.begin(), noise.end());
        }

        TraceRow row;
        row.step = step;
        row.lr = lr;
        row.sigma = sigma;
        row.noise_trainable = noise_trainable;
        row.noise_max_abs = max_abs(noise_values);

        std::optional<tc::GradientResult> grads;
        try {
            grads.emplace(tc::gradients(g, total, bindings, wrt));
        } catch (const NumericalError& e) {
            throw InversionAborted("inversion aborted at step " + std::to_string(step) + ": " + e.what(),
                                   std::move(result.trace));
        }
        const tc::Values& fwd = grads->forward;
        row.terms = {fwd[pert].item(), fwd[pix].item(), fwd[nreg].item(),
                     fwd[lat].item(),  fwd[land].item(), fwd[total].item()};
        if (!std::isfinite(row.terms.total)) {
            result.trace.push_back(row);
            throw InversionAborted("inversion aborted at step " + std::to_string(step) + ": non-finite loss",
                                   std::move(result.trace));
        }
        result.trace.push_back(row);

        adam.step(w, (*grads)[w_leaf], w_slot, lr);
        if (noise_trainable) {
            for (std::size_t i = 0; i < noise.size(); ++i) {
                adam.step(noise_values[i], (*grads)[noise[i]], noise_slots[i], lr);
            }
        }
        if (on_step) {
            on_step(result.trace.back());
        }
    }

    result.latent = gen::latent_from_tensor(w, gc);
    result.noise = gen::zero_noise(gc);
    return result;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw InputError("cannot write " + path.string());
    }
    f << "step,lr,sigma,perceptual,pixel,noise,latent,landmark,total,noise_trainable,noise_max_abs\n";
    char buf[512];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", r.step,
                      r.lr, r.sigma, r.terms.perceptual, r.terms.pixel, r.terms.noise, r.terms.latent,
                      r.terms.landmark, r.terms.total, r.noise_trainable ? 1 : 0, r.noise_max_abs);
        f << buf;
    }
}

double psnr(const Image& a, const Image& b)
{
    check_same_shape(a, b, "psnr");
    if (a.data.empty()) {
        throw ShapeError("psnr: empty images");
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = 255.0 * (a.data[i] - b.data[i]);
        sse += d * d;
    }
    if (sse == 0.0) {
        return kPsnrMax;
    }
    const double rms_8bit = std::sqrt(sse / static_cast<double>(a.data.size()));
    return std::min(kPsnrMax, 20.0 * std::log10(255.0 / rms_8bit));
}

tc::NodeId build_psnr(tc::Graph& g, tc::NodeId a, tc::NodeId b)
{
    const tc::NodeId rms_8bit = g.sqrt(g.mean(g.square(g.scale(g.sub(a, b), 255.0))));
    return g.offset(g.scale(g.log(rms_8bit), -20.0 / std::numbers::ln10), 20.0 * std::log10(255.0));
}

PsnrLoss psnr_loss_from_string(const std::string& text)
{
    if (text == "paper") {
        return PsnrLoss::Paper;
    }
    if (text == "symmetric") {
        return PsnrLoss::Symmetric;
    }
    throw InputError("unknown psnr loss '" + text + "' (expected paper or symmetric)");
}

std::string to_string(PsnrLoss mode)
{
    return mode == PsnrLoss::Paper ? "paper" : "symmetric";
}

void NoiseTrainConfig::validate() const
{
    if (steps == 0) {
        throw InputError("noise-train: steps must be positive");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw InputError("noise-train: lr must be positive");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
        throw InputError("noise-train: Adam betas must be in [0, 1) and eps positive");
    }
}

std::pair<double, double> identity_balance(const Image& morph, const Image& t1, const Image& t2,
                                           const emb::EmbedderWeights& embedders)
{
    const Eigen::VectorXd e = emb::identity_embed(morph, embedders);
    const double d1 = 1.0 - emb::identity_similarity(e, emb::identity_embed(t1, embedders));
    const double d2 = 1.0 - emb::identity_similarity(e, emb::identity_embed(t2, embedders));
    const double lambda5 = d1 + d2 > 0.0 ? d1 / (d1 + d2) : 0.5;
    return {lambda5, 1.0 - lambda5};
}

NoiseTrainResult noise_train(const gen::LatentCode& morph_latent, const Image& t1, const Image& t2,
                             const Models& models, const NoiseTrainConfig& config)
{
    config.validate();
    check_models(models);
    const gen::GeneratorWeights& gw = models.generator;
    const gen::GeneratorConfig& gc = gw.config;
    gen::check_latent(morph_latent, gc);
    check_target(t1, gc, "noise-train subject 1");
    check_target(t2, gc, "noise-train subject 2");

    tc::Graph g;
    const auto styles = gen::build_styles(g, g.constant(gen::latent_to_tensor(morph_latent)), gw);
    const std::vector<tc::NodeId> noise = gen::noise_leaves(g, gc, true);
    const tc::NodeId image = gen::build_synthesis(g, styles, noise, gw);
    const tc::NodeId p1 = build_psnr(g, image, g.constant(to_chw(t1)));
    const tc::NodeId p2 = build_psnr(g, image, g.constant(to_chw(t2)));
    const tc::NodeId l5 = g.leaf({}, "lambda5");
    const tc::NodeId l6 = g.leaf({}, "lambda6");
    // Default form: lambda5 * PSNR1 - lambda6 * PSNR2. Symmetric: -(lambda5 * PSNR1 + lambda6 * PSNR2).
    const tc::NodeId loss = config.mode == PsnrLoss::Paper ? g.sub(g.mul(l5, p1), g.mul(l6, p2))
                                                           : g.scale(g.add(g.mul(l5, p1), g.mul(l6, p2)), -1.0);

    Rng rng(config.seed ^ kNoiseStream);
    gen::NoiseMaps maps = gen::random_noise(gc, rng);
    for (Eigen::MatrixXd& m : maps) {
        m /= rms(m);
    }
    std::vector<tc::Tensor> values;
    for (const Eigen::MatrixXd& m : maps) {
        values.push_back(tc::Tensor::from_matrix(m));
    }

    const Adam adam{config.adam_beta1, config.adam_beta2, config.adam_eps};
    std::vector<Adam::Slot> slots(noise.size());
    NoiseTrainResult result;
    result.trace.reserve(config.steps);

    for (std::size_t step = 0; step < config.steps; ++step) {
        tc::Bindings bindings;
        for (std::size_t i = 0; i < noise.size(); ++i) {
            bindings.bind(noise[i], values[i]);
        }
        const Image current = from_chw(tc::evaluate(g, bindings, image)[image]);
        const auto [lambda5, lambda6] = identity_balance(current, t1, t2, models.embedders);
        bindings.bind(l5, tc::Tensor::scalar(lambda5)).bind(l6, tc::Tensor::scalar(lambda6));

        NoiseTraceRow row;
        row.step = step;
        row.lambda5 = lambda5;
        row.lambda6 = lambda6;
        std::optional<tc::GradientResult> grads;
        try {
            grads.emplace(tc::gradients(g, loss, bindings, noise));
        } catch (const NumericalError& e) {
            throw NumericalError("noise-train aborted at step " + std::to_string(step) + ": " + e.what());
        }
        row.loss = grads->value;
        row.psnr1 = grads->forward[p1].item();
        row.psnr2 = grads->forward[p2].item();
        if (!std::isfinite(row.loss)) {
            throw NumericalError("noise-train aborted at step " + std::to_string(step) + ": non-finite loss");
        }

        for (std::size_t i = 0; i < noise.size(); ++i) {
            adam.step(values[i], (*grads)[noise[i]], slots[i], config.lr);
            Eigen::Map<Eigen::VectorXd> v = values[i].as_vector();
            const double r = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
            if (!(r > 0.0) || !std::isfinite(r)) {
                throw NumericalError("noise-train: noise map " + std::to_string(i) + " has RMS " + std::to_string(r));
            }
            v /= r;
            const double after = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
            row.rms_error = std::max(row.rms_error, std::abs(after - 1.0));
        }
        result.trace.push_back(row);
    }

    for (std::size_t i = 0; i < noise.size(); ++i) {
        maps[i] = values[i].to_matrix();
    }
    result.noise = std::move(maps);
    return result;
}

void write_noise_trace_csv(const std::filesystem::path& path, const std::vector<NoiseTraceRow>& trace)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw InputError("cannot write " + path.string());
    }
    f << "step,lambda5,lambda6,loss,psnr1,psnr2,rms_error\n";
    char buf[256];
    for (const NoiseTraceRow& r : trace) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.lambda5, r.lambda6,
                      r.loss, r.psnr1, r.psnr2, r.rms_error);
        f << buf;
    }
}

} // namespace morphgen::inv
