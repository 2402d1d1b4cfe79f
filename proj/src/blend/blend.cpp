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

#include "morphgen/blend.hpp"

#include "morphgen/bundle.hpp"
#include "morphgen/error.hpp"
#include "morphgen/parallel.hpp"
#include "morphgen/rng.hpp"

#include "json.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>

namespace morphgen::blend {
namespace {

using json = nlohmann::json;

void check_pair(const gen::StyleSet& a, const gen::StyleSet& b)
{
    if (a.size() != b.size()) {
        throw ShapeError("style sets have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                         " vectors");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) {
            throw ShapeError("style " + std::to_string(i) + " has dims " + std::to_string(a[i].size()) + " and " +
                             std::to_string(b[i].size()));
        }
    }
}

void check_blend_inputs(const gen::StyleSet& a, const gen::StyleSet& b, const PcaModels& models, double p)
{
    check_pair(a, b);
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InputError("blend fraction p must be in [0, 1], got " + std::to_string(p));
    }
    if (models.size() != a.size()) {
        throw InputError("PCA has " + std::to_string(models.size()) + " models for " + std::to_string(a.size()) +
                         " styles");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (models[i].dim() != static_cast<std::size_t>(a[i].size())) {
            throw InputError("PCA model " + std::to_string(i) + " has dim " + std::to_string(models[i].dim()) +
                             ", style has " + std::to_string(a[i].size()));
        }
    }
}

// Coefficients plus the component outside the basis.
struct Split {
    Eigen::VectorXd alpha;
    Eigen::VectorXd residual;
};

Split split(const PcaModel& m, const Eigen::VectorXd& s)
{
    Split out;
    out.alpha = project(m, s);
    out.residual = s - reconstruct(m, out.alpha);
    return out;
}

template <typename Combine>
gen::StyleSet blend_with(const gen::StyleSet& a, const gen::StyleSet& b, const PcaModels& models, double p,
                         Combine&& combine)
{
    gen::StyleSet out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const PcaModel& m = models[i];
        const Split sa = split(m, a[i]);
        const Split sb = split(m, b[i]);
        const std::size_t h = head_size(p, m.components());
        Eigen::VectorXd alpha(sa.alpha.size());
        alpha.head(h) = 0.5 * (sa.alpha.head(h) + sb.alpha.head(h));
        const auto tail = static_cast<Eigen::Index>(m.components() - h);
        alpha.tail(tail) = combine(sa.alpha.tail(tail), sb.alpha.tail(tail));
        out.push_back(reconstruct(m, alpha) + 0.5 * (sa.residual + sb.residual));
    }
    return out;
}

json vector_json(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

} // namespace

gen::LatentCode average_latents(const gen::LatentCode& a, const gen::LatentCode& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("latents have shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    return 0.5 * (a + b);
}

gen::StyleSet average_styles(const gen::StyleSet& a, const gen::StyleSet& b)
{
    check_pair(a, b);
    gen::StyleSet out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back(0.5 * (a[i] + b[i]));
    }
    return out;
}

PcaModel fit_pca(const Eigen::MatrixXd& samples)
{
    if (samples.rows() < 2) {
        throw InputError("PCA needs at least 2 samples, got " + std::to_string(samples.rows()));
    }
    if (samples.cols() < 1) {
        throw InputError("PCA samples have no dimensions");
    }
    if (!samples.allFinite()) {
        throw InputError("PCA samples are not finite");
    }
    PcaModel m;
    m.mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - m.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("PCA eigendecomposition failed");
    }
    const Eigen::Index d = samples.cols();
    const Eigen::Index e = std::min<Eigen::Index>(samples.rows() - 1, d);
    m.vectors.resize(d, e);
    m.eigenvalues.resize(e);
    // The solver sorts ascending.
    for (Eigen::Index j = 0; j < e; ++j) {
        m.vectors.col(j) = solver.eigenvectors().col(d - 1 - j);
        m.eigenvalues[j] = solver.eigenvalues()[d - 1 - j];
    }
    return m;
}

PcaModels fit_style_pca(const std::vector<gen::StyleSet>& corpus, std::size_t jobs)
{
    if (corpus.size() < 2) {
        throw InputError("PCA corpus needs at least 2 style sets, got " + std::to_string(corpus.size()));
    }
    const gen::StyleSet& first = corpus.front();
    for (std::size_t k = 1; k < corpus.size(); ++k) {
        try {
            check_pair(first, corpus[k]);
        } catch (const ShapeError& e) {
            throw InputError("PCA corpus entry " + std::to_string(k) + ": " + e.what());
        }
    }
    PcaModels models(first.size());
    parallel_for(first.size(), jobs, [&](std::size_t i) {
        Eigen::MatrixXd samples(static_cast<Eigen::Index>(corpus.size()), first[i].size());
        for (std::size_t k = 0; k < corpus.size(); ++k) {
            samples.row(static_cast<Eigen::Index>(k)) = corpus[k][i].transpose();
        }
        models[i] = fit_pca(samples);
    });
    return models;
}

std::vector<gen::StyleSet> style_corpus(const gen::GeneratorWeights& weights, std::size_t samples,
                                        std::uint64_t seed)
{
    const gen::GeneratorConfig& cfg = weights.config;
    Rng rng(seed);
    tc::Tensor z({samples, cfg.latent_dim});
    for (double& v : z.storage()) {
        v = rng.normal();
    }
    tc::Graph g;
    const tc::NodeId w = gen::build_mapping(g, g.constant(std::move(z)), weights);
    const tc::Tensor mapped = tc::evaluate(g, {}, w)[w];
    std::vector<gen::StyleSet> corpus;
    corpus.reserve(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        const Eigen::VectorXd row = mapped.as_matrix(samples, cfg.latent_dim).row(static_cast<Eigen::Index>(k));
        corpus.push_back(gen::affine_styles(gen::broadcast_latent(row, cfg), weights));
    }
    return corpus;
}

Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& style)
{
    if (static_cast<std::size_t>(style.size()) != model.dim()) {
        throw ShapeError("style has " + std::to_string(style.size()) + " entries, PCA model has " +
                         std::to_string(model.dim()));
    }
    return model.vectors.transpose() * (style - model.mean);
}

Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& coefficients)
{
    if (static_cast<std::size_t>(coefficients.size()) != model.components()) {
        throw ShapeError("got " + std::to_string(coefficients.size()) + " coefficients for " +
                         std::to_string(model.components()) + " components");
    }
    return model.mean + model.vectors * coefficients;
}

std::size_t head_size(double p, std::size_t components)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InputError("blend fraction p must be in [0, 1], got " + std::to_string(p));
    }
    // The slack absorbs products such as 0.3 * 10 = 3.0000000000000004.
    const double x = p * static_cast<double>(components) - 1e-9;
    const auto h = static_cast<std::size_t>(std::max(0.0, std::ceil(x)));
    return std::min(h, components);
}

gen::StyleSet blend_elementwise_max(const gen::StyleSet& a, const gen::StyleSet& b, const PcaModels& models,
                                    double p, MaxRule rule)
{
    check_blend_inputs(a, b, models, p);
    return blend_with(a, b, models, p, [rule](const auto& ta, const auto& tb) {
        Eigen::VectorXd out(ta.size());
        for (Eigen::Index j = 0; j < ta.size(); ++j) {
            if (rule == MaxRule::Signed) {
                out[j] = std::max(ta[j], tb[j]);
            } else {
                out[j] = std::abs(tb[j]) > std::abs(ta[j]) ? tb[j] : ta[j];
            }
        }
        return out;
    });
}

gen::StyleSet blend_norm_select(const gen::StyleSet& a, const gen::StyleSet& b, const PcaModels& models, double p)
{
    check_blend_inputs(a, b, models, p);
    return blend_with(a, b, models, p, [](const auto& ta, const auto& tb) -> Eigen::VectorXd {
        return tb.norm() > ta.norm() ? Eigen::VectorXd(tb) : Eigen::VectorXd(ta);
    });
}

BlendMode blend_mode_from_string(const std::string& text)
{
    if (text == "avg") {
        return BlendMode::Average;
    }
    if (text == "pca-max") {
        return BlendMode::PcaMax;
    }
    if (text == "pca-norm") {
        return BlendMode::PcaNorm;
    }
    throw InputError("unknown blend mode '" + text + "' (expected avg, pca-max or pca-norm)");
}

std::string to_string(BlendMode mode)
{
    switch (mode) {
    case BlendMode::Average:
        return "avg";
    case BlendMode::PcaMax:
        return "pca-max";
    case BlendMode::PcaNorm:
        return "pca-norm";
    }
    return "avg";
}

gen::StyleSet morph_styles(const gen::StyleSet& a, const gen::StyleSet& b, BlendMode mode, double p,
                           const PcaModels* models, MaxRule rule)
{
    if (mode == BlendMode::Average) {
        return average_styles(a, b);
    }
    if (models == nullptr) {
        throw InputError("blend mode " + to_string(mode) + " needs PCA models");
    }
    return mode == BlendMode::PcaMax ? blend_elementwise_max(a, b, *models, p, rule)
                                     : blend_norm_select(a, b, *models, p);
}

double variance_fraction(const PcaModel& model, double fraction)
{
    const std::size_t h = head_size(fraction, model.components());
    const double total = model.eigenvalues.sum();
    if (!(total > 0.0)) {
        return 1.0;
    }
    return model.eigenvalues.head(static_cast<Eigen::Index>(h)).sum() / total;
}

void save_pca(const std::filesystem::path& dir, const PcaModels& models)
{
    std::filesystem::create_directories(dir);
    json styles = json::array();
    for (std::size_t i = 0; i < models.size(); ++i) {
        const PcaModel& m = models[i];
        const std::string file = "style_" + std::to_string(i) + ".mftn";
        TensorBundle b;
        b.format = "morphgen-pca";
        b.dtype = MftnDtype::F64;
        b.meta = {{"index", i}};
        b.tensors.emplace_back("mean", tc::Tensor::from_vector(m.mean));
        b.tensors.emplace_back("vectors", tc::Tensor::from_matrix(m.vectors));
        b.tensors.emplace_back("eigenvalues", tc::Tensor::from_vector(m.eigenvalues));
        write_bundle(dir / file, b);
        styles.push_back({{"index", i},
                          {"dim", m.dim()},
                          {"components", m.components()},
                          {"eigenvalues", vector_json(m.eigenvalues)},
                          {"file", file}});
    }
    const json doc = {{"format", "morphgen-pca-set"}, {"version", 1}, {"styles", styles}};
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    if (!f) {
        throw InputError("cannot write " + (dir / "manifest.json").string());
    }
    f << doc.dump(2) << "\n";
}

PcaModels load_pca(const std::filesystem::path& dir)
{
    const auto manifest = dir / "manifest.json";
    std::ifstream f(manifest);
    if (!f) {
        throw InputError("missing PCA manifest " + manifest.string());
    }
    try {
        const json doc = json::parse(f);
        if (doc.at("format").get<std::string>() != "morphgen-pca-set") {
            throw InputError(manifest.string() + ": not a PCA manifest");
        }
        PcaModels models;
        for (const json& entry : doc.at("styles")) {
            const TensorBundle b = read_bundle(dir / entry.at("file").get<std::string>(), "morphgen-pca");
            const auto d = entry.at("dim").get<std::size_t>();
            const auto e = entry.at("components").get<std::size_t>();
            const tc::Tensor& mean = b.at("mean");
            const tc::Tensor& vectors = b.at("vectors");
            const tc::Tensor& values = b.at("eigenvalues");
            if (mean.shape() != tc::Shape{d} || vectors.shape() != tc::Shape{d, e} || values.shape() != tc::Shape{e}) {
                throw InputError(manifest.string() + ": style " + std::to_string(models.size()) +
                                 " tensors disagree with the manifest dims");
            }
            PcaModel m;
            m.mean = mean.as_vector();
            m.vectors = vectors.to_matrix();
            m.eigenvalues = values.as_vector();
            models.push_back(std::move(m));
        }
        return models;
    } catch (const json::exception& e) {
        throw InputError(manifest.string() + ": " + e.what());
    }
}

void check_models(const PcaModels& models, const gen::GeneratorConfig& config)
{
    const std::vector<std::size_t> dims = gen::style_dims(config);
    if (models.size() != dims.size()) {
        throw InputError("PCA has " + std::to_string(models.size()) + " models, generator has " +
                         std::to_string(dims.size()) + " styles");
    }
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (models[i].dim() != dims[i]) {
            throw InputError("PCA model " + std::to_string(i) + " has dim " + std::to_string(models[i].dim()) +
                             ", generator style has " + std::to_string(dims[i]));
        }
    }
}

} // namespace morphgen::blend
