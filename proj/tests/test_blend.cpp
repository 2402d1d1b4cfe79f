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

#include "morphgen/blend.hpp"
#include "morphgen/error.hpp"
#include "morphgen/oracles/blend_oracles.hpp"
#include "morphgen/rng.hpp"

#include <cmath>
#include <filesystem>

using namespace morphgen;
using namespace morphgen::blend;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.normal();
    }
    return m;
}

double max_diff(const gen::StyleSet& a, const gen::StyleSet& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
    }
    return worst;
}

struct Fixture {
    gen::GeneratorWeights weights;
    std::vector<gen::StyleSet> corpus;
    PcaModels models;
};

const Fixture& fixture()
{
    static const Fixture f = [] {
        Fixture x;
        x.weights = gen::init_weights(gen::GeneratorConfig{});
        x.corpus = style_corpus(x.weights, 500, 7);
        x.models = fit_style_pca(x.corpus);
        return x;
    }();
    return f;
}

gen::StyleSet random_styles(const gen::GeneratorWeights& w, Rng& rng)
{
    Eigen::VectorXd z(w.config.latent_dim);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    return gen::affine_styles(gen::broadcast_latent(gen::map_latent(z, w), w.config), w);
}

} // namespace

TEST_CASE("average latents")
{
    Rng rng(1);
    const gen::LatentCode a = random_matrix(10, 64, rng);
    const gen::LatentCode b = random_matrix(10, 64, rng);
    CHECK(average_latents(a, a) == a);
    CHECK(average_latents(a, b) == average_latents(b, a));
    const gen::LatentCode m = average_latents(a, b);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        CHECK(m.data()[i] == (a.data()[i] + b.data()[i]) / 2.0);
    }
    CHECK_THROWS_AS(average_latents(a, random_matrix(9, 64, rng)), ShapeError);
}

TEST_CASE("fit_pca small cases")
{
    SUBCASE("identical vectors")
    {
        Eigen::MatrixXd s(6, 3);
        s.rowwise() = Eigen::RowVector3d(1.0, -2.0, 0.5);
        const PcaModel m = fit_pca(s);
        CHECK(m.mean == Eigen::Vector3d(1.0, -2.0, 0.5));
        CHECK(m.eigenvalues.cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("points on a line")
    {
        Rng rng(2);
        const Eigen::Vector2d dir = Eigen::Vector2d(3.0, 4.0).normalized();
        Eigen::MatrixXd s(20, 2);
        for (Eigen::Index k = 0; k < s.rows(); ++k) {
            s.row(k) = (Eigen::Vector2d(1.0, 2.0) + rng.normal() * dir).transpose();
        }
        const PcaModel m = fit_pca(s);
        CHECK(m.eigenvalues[0] > 0.1);
        CHECK(std::abs(m.eigenvalues[1]) < 1e-12);
        CHECK(std::abs(std::abs(m.vectors.col(0).dot(dir)) - 1.0) < 1e-12);
    }
    SUBCASE("random corpus round trip")
    {
        Rng rng(3);
        const Eigen::MatrixXd s = random_matrix(50, 8, rng);
        const PcaModel m = fit_pca(s);
        REQUIRE(m.components() == 8);
        CHECK(oracle::orthonormality_error(m.vectors) < 1e-9);
        for (Eigen::Index j = 0; j + 1 < m.eigenvalues.size(); ++j) {
            CHECK(m.eigenvalues[j] >= m.eigenvalues[j + 1]);
        }
        CHECK(m.eigenvalues.minCoeff() >= -1e-12);
        for (Eigen::Index k = 0; k < s.rows(); ++k) {
            const Eigen::VectorXd x = s.row(k).transpose();
            CHECK((reconstruct(m, project(m, x)) - x).cwiseAbs().maxCoeff() < 1e-8);
        }
        const Eigen::VectorXd outside = random_matrix(8, 1, rng);
        CHECK((reconstruct(m, project(m, outside)) - outside).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("fewer samples than dimensions")
    {
        Rng rng(4);
        const PcaModel m = fit_pca(random_matrix(5, 8, rng));
        CHECK(m.components() == 4);
        CHECK(m.dim() == 8);
    }
    CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Zero(1, 4)), InputError);
}

TEST_CASE("head size")
{
    CHECK(head_size(0.3, 10) == 3);
    CHECK(head_size(0.0, 10) == 0);
    CHECK(head_size(1.0, 10) == 10);
    CHECK(head_size(0.25, 8) == 2);
    CHECK(head_size(0.26, 8) == 3);
    CHECK(head_size(0.8, 14) == 12);
    CHECK_THROWS_AS(head_size(1.5, 4), InputError);
    CHECK_THROWS_AS(head_size(-0.1, 4), InputError);
}

TEST_CASE("style corpus PCA")
{
    const Fixture& f = fixture();
    REQUIRE(f.models.size() == f.weights.config.num_styles());
    CHECK_NOTHROW(check_models(f.models, f.weights.config));
    for (std::size_t i = 0; i < f.models.size(); ++i) {
        const PcaModel& m = f.models[i];
        INFO("style " << i);
        CHECK(m.components() == m.dim());
        CHECK(oracle::orthonormality_error(m.vectors) < 1e-9);
        for (Eigen::Index j = 0; j + 1 < m.eigenvalues.size(); ++j) {
            CHECK(m.eigenvalues[j] >= m.eigenvalues[j + 1]);
        }
        CHECK(m.eigenvalues.minCoeff() >= -1e-12);
        double worst = 0.0;
        for (const gen::StyleSet& s : f.corpus) {
            worst = std::max(worst, (reconstruct(m, project(m, s[i])) - s[i]).cwiseAbs().maxCoeff());
        }
        CHECK(worst < 1e-8);
        // Rapid decay on the wide styles; the narrow ones are reported, not asserted.
        if (m.dim() >= 32) {
            CHECK(variance_fraction(m, 0.1) > 0.5);
        }
        CHECK(variance_fraction(m, 0.1) > 2.0 * static_cast<double>(head_size(0.1, m.components())) /
                                              static_cast<double>(m.components()));
    }

    const PcaModels parallel = fit_style_pca(f.corpus, 4);
    CHECK(parallel == f.models);
}

TEST_CASE("PCA blends against explicit loops")
{
    const Fixture& f = fixture();
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const gen::StyleSet a = random_styles(f.weights, rng);
        const gen::StyleSet b = random_styles(f.weights, rng);
        const double p = rng.uniform();
        const gen::StyleSet mx = blend_elementwise_max(a, b, f.models, p);
        const gen::StyleSet mag = blend_elementwise_max(a, b, f.models, p, MaxRule::Magnitude);
        const gen::StyleSet ns = blend_norm_select(a, b, f.models, p);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const PcaModel& m = f.models[i];
            using oracle::NaiveBlend;
            CHECK((mx[i] - oracle::naive_pca_blend(a[i], b[i], m.mean, m.vectors, p, NaiveBlend::Max))
                      .cwiseAbs()
                      .maxCoeff() < 1e-10);
            CHECK((mag[i] - oracle::naive_pca_blend(a[i], b[i], m.mean, m.vectors, p, NaiveBlend::MaxMagnitude))
                      .cwiseAbs()
                      .maxCoeff() < 1e-10);
            CHECK((ns[i] - oracle::naive_pca_blend(a[i], b[i], m.mean, m.vectors, p, NaiveBlend::NormSelect))
                      .cwiseAbs()
                      .maxCoeff() < 1e-10);
        }
        CHECK(max_diff(mx, blend_elementwise_max(b, a, f.models, p)) == 0.0);
        CHECK(max_diff(blend_elementwise_max(a, b, f.models, 1.0), average_styles(a, b)) < 1e-8);
        CHECK(max_diff(blend_norm_select(a, b, f.models, 1.0), average_styles(a, b)) < 1e-8);
    }
}

TEST_CASE("blend semantics")
{
    const Fixture& f = fixture();
    Rng rng(6);
    const gen::StyleSet a = random_styles(f.weights, rng);
    const gen::StyleSet b = random_styles(f.weights, rng);

    SUBCASE("equal inputs")
    {
        for (double p : {0.0, 0.3, 1.0}) {
            CHECK(max_diff(blend_elementwise_max(a, a, f.models, p), a) < 1e-12);
            CHECK(max_diff(blend_norm_select(a, a, f.models, p), a) < 1e-12);
        }
    }
    SUBCASE("norm selection copies the larger tail")
    {
        const double p = 0.3;
        const gen::StyleSet out = blend_norm_select(a, b, f.models, p);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const PcaModel& m = f.models[i];
            const std::size_t h = head_size(p, m.components());
            const auto t = static_cast<Eigen::Index>(m.components() - h);
            const Eigen::VectorXd ta = project(m, a[i]).tail(t);
            const Eigen::VectorXd tb = project(m, b[i]).tail(t);
            const Eigen::VectorXd expected = tb.norm() > ta.norm() ? tb : ta;
            CHECK((project(m, out[i]).tail(t) - expected).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    SUBCASE("norm tie picks the first subject")
    {
        // b mirrors a's tail (negated coefficients), so both tails have equal norm.
        const double p = 0.5;
        gen::StyleSet mirrored = a;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const PcaModel& m = f.models[i];
            const std::size_t h = head_size(p, m.components());
            Eigen::VectorXd alpha = project(m, a[i]);
            const auto t = static_cast<Eigen::Index>(m.components() - h);
            alpha.tail(t) = -alpha.tail(t);
            mirrored[i] = reconstruct(m, alpha);
        }
        const gen::StyleSet out = blend_norm_select(a, mirrored, f.models, p);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const PcaModel& m = f.models[i];
            const auto t = static_cast<Eigen::Index>(m.components() - head_size(p, m.components()));
            const Eigen::VectorXd ta = project(m, a[i]).tail(t);
            const Eigen::VectorXd tm = project(m, mirrored[i]).tail(t);
            if (ta.norm() == tm.norm()) {
                CHECK((project(m, out[i]).tail(t) - ta).cwiseAbs().maxCoeff() < 1e-10);
            }
        }
    }
    SUBCASE("dispatch and errors")
    {
        CHECK(morph_styles(a, b, BlendMode::Average, 0.3, nullptr) == average_styles(a, b));
        CHECK(max_diff(morph_styles(a, b, BlendMode::PcaMax, 1.0, &f.models), average_styles(a, b)) < 1e-8);
        CHECK(morph_styles(a, b, BlendMode::PcaNorm, 0.4, &f.models) == blend_norm_select(a, b, f.models, 0.4));
        CHECK_THROWS_AS(morph_styles(a, b, BlendMode::PcaMax, 0.5, nullptr), InputError);
        CHECK(blend_mode_from_string("pca-norm") == BlendMode::PcaNorm);
        CHECK(to_string(BlendMode::PcaMax) == "pca-max");
        CHECK_THROWS_AS(blend_mode_from_string("median"), InputError);
        CHECK_THROWS_AS(blend_elementwise_max(a, b, f.models, 1.2), InputError);
        gen::StyleSet shorter = b;
        shorter.pop_back();
        CHECK_THROWS_AS(blend_norm_select(a, shorter, f.models, 0.5), ShapeError);
        PcaModels fewer = f.models;
        fewer.pop_back();
        CHECK_THROWS_AS(blend_norm_select(a, b, fewer, 0.5), InputError);
    }
}

TEST_CASE("truncated basis keeps p = 1 equal to averaging")
{
    const Fixture& f = fixture();
    const std::vector<gen::StyleSet> small(f.corpus.begin(), f.corpus.begin() + 6);
    const PcaModels models = fit_style_pca(small);
    CHECK(models.front().components() == 5);
    Rng rng(7);
    const gen::StyleSet a = random_styles(f.weights, rng);
    const gen::StyleSet b = random_styles(f.weights, rng);
    CHECK(max_diff(blend_elementwise_max(a, b, models, 1.0), average_styles(a, b)) < 1e-8);
    CHECK(max_diff(blend_norm_select(a, b, models, 1.0), average_styles(a, b)) < 1e-8);
    const gen::StyleSet mx = blend_elementwise_max(a, b, models, 0.4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const PcaModel& m = models[i];
        CHECK((mx[i] - oracle::naive_pca_blend(a[i], b[i], m.mean, m.vectors, 0.4, oracle::NaiveBlend::Max))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
    }
}

TEST_CASE("PCA save and load")
{
    const Fixture& f = fixture();
    const auto dir = std::filesystem::temp_directory_path() / "morphgen_test_pca";
    std::filesystem::remove_all(dir);
    save_pca(dir, f.models);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(std::filesystem::exists(dir / "style_0.mftn"));
    CHECK(load_pca(dir) == f.models);
    CHECK_THROWS_AS(load_pca(dir / "missing"), InputError);

    gen::GeneratorConfig other;
    other.resolution = 32;
    CHECK_THROWS_AS(check_models(f.models, other), InputError);
}
