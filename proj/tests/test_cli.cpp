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
#include "morphgen/cli.hpp"
#include "morphgen/error.hpp"
#include "morphgen/geometry.hpp"
#include "morphgen/metrics.hpp"
#include "morphgen/mftn.hpp"

#include "doctest.h"
#include "json.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;
using namespace morphgen;
using cli::PipelineConfig;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("morphgen_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const std::vector<std::string> kSmall = {
    "--set", "generator.resolution=16", "--set", "generator.latent_dim=32", "--set", "generator.channel_base=256",
    "--set", "generator.max_channels=8", "--set", "generator.seed=3",        "--set", "embedders.landmarks=4",
    "--set", "inversion.w_avg_samples=100", "--set", "pca.samples=60", "--set", "evaluate.impostor_images=40",
};

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run morphgen_cli(std::vector<std::string> args, bool small = true)
{
    std::vector<std::string> full = {"morphgen"};
    if (small) {
        full.insert(full.end(), kSmall.begin(), kSmall.end());
    }
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(full, out, err);
    return {code, out.str(), err.str()};
}

PipelineConfig small_config()
{
    std::vector<std::string> overrides;
    for (std::size_t i = 1; i < kSmall.size(); i += 2) {
        overrides.push_back(kSmall[i]);
    }
    return cli::load_config(std::nullopt, overrides);
}

// Two seeded pairs shared by the file-level tests.
const fs::path& fixture_dir()
{
    static const fs::path dir = [] {
        const fs::path d = fresh_dir("fixture");
        const Run r = morphgen_cli({"fixture", "--pairs", "2", "--out", d.string()});
        REQUIRE(r.code == 0);
        return d;
    }();
    return dir;
}

} // namespace

TEST_CASE("config defaults and key round trip")
{
    PipelineConfig c;
    CHECK(c.get("inversion.steps") == "1000");
    CHECK(c.get("inversion.lambda_pixel") == "0.05");
    CHECK(c.get("inversion.lambda_noise") == "1e+05");
    CHECK(c.get("inversion.lambda_latent") == "0.1");
    CHECK(c.get("inversion.lambda_landmark") == "1e-04");
    CHECK(c.get("inversion.noise_cutoff_step") == "400");
    CHECK(c.get("inversion.lr_peak") == "0.1");
    CHECK(c.get("noise_train.steps") == "200");
    CHECK(c.get("evaluate.far") == "0.001");
    CHECK(c.get("blend.p") == "0.8");
    CHECK(c.get("blend.mode") == "avg");

    for (const std::string& key : PipelineConfig::keys()) {
        CHECK_FALSE(PipelineConfig::describe(key).empty());
        PipelineConfig d;
        d.set(key, c.get(key));
        CHECK(d.get(key) == c.get(key));
    }

    c.set("inversion.lambda_landmark", "0.01");
    c.set("blend.mode", "pca-norm");
    c.set("noise_train.psnr_loss", "symmetric");
    CHECK(c.inversion.lambda_landmark == 0.01);
    CHECK(c.blend_mode == blend::BlendMode::PcaNorm);
    CHECK(c.noise_train.mode == inv::PsnrLoss::Symmetric);

    CHECK_THROWS_AS(c.set("no.such.key", "1"), InputError);
    CHECK_THROWS_AS(c.set("inversion.steps", "12x"), InputError);
    CHECK_THROWS_AS(c.set("inversion.steps", "-1"), InputError);
    CHECK_THROWS_AS(c.set("inversion.lr_peak", "nan"), InputError);
    CHECK_THROWS_AS(c.set("blend.mode", "max"), InputError);
}

TEST_CASE("config text format")
{
    const fs::path dir = fresh_dir("config");
    PipelineConfig c = small_config();
    c.set("blend.p", "0.6");
    {
        std::ofstream f(dir / "full.cfg");
        f << c.to_text();
    }
    const PipelineConfig back = cli::load_config(dir / "full.cfg", {});
    CHECK(back.to_text() == c.to_text());

    {
        std::ofstream f(dir / "short.cfg");
        f << "# comment\n\n  blend.p = 0.3   # trailing\ninversion.seed=5\n";
    }
    const PipelineConfig s = cli::load_config(dir / "short.cfg", {"blend.p=0.4"});
    CHECK(s.blend_p == 0.4);
    CHECK(s.inversion.seed == 5);

    {
        std::ofstream f(dir / "bad.cfg");
        f << "blend.p 0.3\n";
    }
    CHECK_THROWS_AS(cli::load_config(dir / "bad.cfg", {}), InputError);
    CHECK_THROWS_AS(cli::load_config(dir / "missing.cfg", {}), InputError);
    CHECK_THROWS_AS(cli::load_config(std::nullopt, {"blend.p=1.5"}), InputError);
    CHECK_THROWS_AS(cli::load_config(std::nullopt, {"inversion.noise_cutoff_step=2000"}), InputError);

    const PipelineConfig r = cli::load_config(std::nullopt, {"generator.resolution=32"});
    CHECK(r.embedders.image_size == 32);
}

TEST_CASE("exit codes")
{
    CHECK(morphgen_cli({}, false).code == cli::kExitInput);
    CHECK(morphgen_cli({"frobnicate"}, false).code == cli::kExitInput);
    CHECK(morphgen_cli({"--help"}, false).code == cli::kExitOk);
    CHECK(morphgen_cli({"--set", "bogus=1", "config"}, false).code == cli::kExitInput);
    CHECK(morphgen_cli({"config"}).code == cli::kExitOk);
    CHECK(morphgen_cli({"invert", "--image", "/nonexistent.png", "--landmarks", "/nonexistent.csv", "--out",
                        (fs::temp_directory_path() / "morphgen_test_cli_never").string()})
              .code == cli::kExitInput);
    CHECK_FALSE(fs::exists(fs::temp_directory_path() / "morphgen_test_cli_never"));
}

TEST_CASE("numerical failure exits 3 without outputs")
{
    const fs::path& fx = fixture_dir();
    const fs::path out = fresh_dir("numerical") / "out";
    const Run r = morphgen_cli({"--set", "inversion.lr_peak=1e300", "invert", "--image",
                                (fx / "pair1" / "subject_a.png").string(), "--landmarks",
                                (fx / "pair1" / "landmarks_a.csv").string(), "--out", out.string()});
    CHECK(r.code == cli::kExitNumerical);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("warp outputs")
{
    const fs::path& fx = fixture_dir();
    const fs::path out = fresh_dir("warp");
    const fs::path a = fx / "pair1" / "subject_a.png";
    const fs::path la = fx / "pair1" / "landmarks_a.csv";
    const fs::path lb = fx / "pair1" / "landmarks_b.csv";

    REQUIRE(morphgen_cli({"warp", "--image-a", a.string(), "--landmarks-a", la.string(), "--image-b",
                          (fx / "pair1" / "subject_b.png").string(), "--landmarks-b", lb.string(), "--out",
                          (out / "ab").string()})
                .code == 0);
    const auto expected = geom::average_landmarks(geom::read_landmarks_csv(la), geom::read_landmarks_csv(lb));
    const auto written = geom::read_landmarks_csv(out / "ab" / "target_landmarks.csv");
    REQUIRE(written.size() == expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(written[k].isApprox(expected[k], 1e-12));
    }
    const Mask mask = read_mask_png(out / "ab" / "mask.png");
    CHECK(geom::apply_mask(mask, mask) == mask);

    REQUIRE(morphgen_cli({"warp", "--image-a", a.string(), "--landmarks-a", la.string(), "--image-b", a.string(),
                          "--landmarks-b", la.string(), "--out", (out / "aa").string()})
                .code == 0);
    const Image original = read_png(a);
    const Image hull = read_png(out / "aa" / "hull_a.png");
    const Mask self_mask = read_mask_png(out / "aa" / "mask.png");
    CHECK(self_mask.sum() > 0.0);
    double worst = 0.0;
    for (std::size_t y = 0; y < original.height; ++y) {
        for (std::size_t x = 0; x < original.width; ++x) {
            if (self_mask(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) == 1.0) {
                for (std::size_t c = 0; c < 3; ++c) {
                    worst = std::max(worst, std::abs(hull.at(y, x, c) - original.at(y, x, c)));
                }
            }
        }
    }
    CHECK(worst <= 1.0 / 255.0 + 1e-12);

    // A landmark file with a missing row fails before anything is written.
    {
        std::ofstream f(out / "short.csv");
        f << "index,x,y\n0,3,3\n1,9,4\n2,6,10\n";
    }
    CHECK(morphgen_cli({"warp", "--image-a", a.string(), "--landmarks-a", la.string(), "--image-b", a.string(),
                        "--landmarks-b", (out / "short.csv").string(), "--out", (out / "bad").string()})
              .code == cli::kExitInput);
    CHECK_FALSE(fs::exists(out / "bad"));
}

TEST_CASE("invert writes one trace row per step and is reproducible")
{
    const fs::path& fx = fixture_dir();
    const fs::path out = fresh_dir("invert");
    const std::vector<std::string> args = {"--set",       "inversion.steps=300",
                                           "--set",       "inversion.noise_cutoff_step=120",
                                           "--set",       "inversion.lr_cosine_rampdown_steps=180",
                                           "--set",       "inversion.latent_noise_hold_steps=75",
                                           "--set",       "inversion.latent_noise_zero_step=225",
                                           "--set",       "inversion.lr_rampup_steps=15",
                                           "invert",      "--image",
                                           (fx / "pair1" / "subject_a.png").string(), "--landmarks",
                                           (fx / "pair1" / "landmarks_a.csv").string(), "--out"};
    auto first = args;
    first.push_back((out / "1").string());
    auto second = args;
    second.push_back((out / "2").string());
    REQUIRE(morphgen_cli(first).code == 0);
    REQUIRE(morphgen_cli(second).code == 0);

    std::istringstream trace(read_file(out / "1" / "trace.csv"));
    std::size_t rows = 0;
    for (std::string line; std::getline(trace, line);) {
        ++rows;
    }
    CHECK(rows == 301);
    for (const char* f : {"latent.mftn", "noise.mftn", "trace.csv", "reconstruction.png"}) {
        CHECK(read_file(out / "1" / f) == read_file(out / "2" / f));
    }
}

TEST_CASE("avg morph equals averaged latents and synthesis noise")
{
    const PipelineConfig config = small_config();
    const cli::ModelSet models = cli::load_models(config, {});
    const auto& gc = models.generator.config;
    const fs::path dir = fresh_dir("morph");
    Rng rng(5);
    gen::LatentCode la(gc.num_latents(), gc.latent_dim);
    gen::LatentCode lb(gc.num_latents(), gc.latent_dim);
    for (Eigen::Index i = 0; i < la.size(); ++i) {
        la.data()[i] = rng.normal();
        lb.data()[i] = rng.normal();
    }
    write_mftn(dir / "a.mftn", gen::latent_to_tensor(la), MftnDtype::F64);
    write_mftn(dir / "b.mftn", gen::latent_to_tensor(lb), MftnDtype::F64);

    REQUIRE(morphgen_cli({"morph", "--latent-a", (dir / "a.mftn").string(), "--latent-b", (dir / "b.mftn").string(),
                          "--out", (dir / "m").string()})
                .code == 0);
    const gen::LatentCode avg = blend::average_latents(la, lb);
    CHECK(gen::latent_from_tensor(read_mftn(dir / "m" / "morph_latent.mftn"), gc) == avg);
    CHECK(gen::styles_from_tensor(read_mftn(dir / "m" / "morph_styles.mftn"), gc) ==
          gen::affine_styles(avg, models.generator));

    CHECK(morphgen_cli({"morph", "--mode", "pca-norm", "--latent-a", (dir / "a.mftn").string(), "--latent-b",
                        (dir / "b.mftn").string(), "--out", (dir / "nopca").string()})
              .code == cli::kExitInput);
    CHECK_FALSE(fs::exists(dir / "nopca"));

    REQUIRE(morphgen_cli({"pca-fit", "--out", (dir / "pca").string()}).code == 0);
    REQUIRE(morphgen_cli({"morph", "--mode", "pca-norm", "--pca", (dir / "pca").string(), "--latent-a",
                          (dir / "a.mftn").string(), "--latent-b", (dir / "b.mftn").string(), "--out",
                          (dir / "norm").string()})
                .code == 0);
    const blend::PcaModels pca = blend::load_pca(dir / "pca");
    CHECK(gen::styles_from_tensor(read_mftn(dir / "norm" / "morph_styles.mftn"), gc) ==
          blend::morph_styles(gen::affine_styles(la, models.generator), gen::affine_styles(lb, models.generator),
                              blend::BlendMode::PcaNorm, 0.8, &pca));

    auto synth = [&](const std::string& noise, const std::string& name) {
        REQUIRE(morphgen_cli({"synthesize", "--latent", (dir / "m" / "morph_latent.mftn").string(), "--noise", noise,
                              "--out", (dir / name).string()})
                    .code == 0);
        return read_file(dir / name / "image.png");
    };
    CHECK(synth("fresh:11", "s1") == synth("fresh:11", "s2"));
    CHECK(synth("fresh:11", "s1") != synth("fresh:12", "s3"));
    Rng noise_rng(11);
    CHECK(gen::noise_from_tensor(read_mftn(dir / "s1" / "noise.mftn"), gc) == gen::random_noise(gc, noise_rng));
    CHECK(synth((dir / "s1" / "noise.mftn").string(), "s4") == read_file(dir / "s1" / "image.png"));
    CHECK(read_png(dir / "s4" / "image.png") ==
          quantize_8bit(gen::synthesize_from_w(avg, gen::noise_from_tensor(read_mftn(dir / "s1" / "noise.mftn"), gc),
                                               models.generator)));
    CHECK(morphgen_cli({"synthesize", "--latent", (dir / "a.mftn").string(), "--noise", "fresh:x", "--out",
                        (dir / "s5").string()})
              .code == cli::kExitInput);
    CHECK(morphgen_cli({"synthesize", "--out", (dir / "s6").string()}).code == cli::kExitInput);
    CHECK_FALSE(fs::exists(dir / "s5"));
    CHECK_FALSE(fs::exists(dir / "s6"));
}

TEST_CASE("paste writes one output per background")
{
    const fs::path& fx = fixture_dir();
    const fs::path dir = fresh_dir("paste");
    REQUIRE(morphgen_cli({"warp", "--image-a", (fx / "pair1" / "subject_a.png").string(), "--landmarks-a",
                          (fx / "pair1" / "landmarks_a.csv").string(), "--image-b",
                          (fx / "pair1" / "subject_b.png").string(), "--landmarks-b",
                          (fx / "pair1" / "landmarks_b.csv").string(), "--out", (dir / "w").string()})
                .code == 0);
    const std::vector<std::string> base = {"paste", "--morph", (fx / "pair2" / "subject_a.png").string(),
                                           "--mask", (dir / "w" / "mask.png").string()};
    auto two = base;
    two.insert(two.end(), {"--background", (dir / "w" / "warped_a.png").string(), "--background",
                           (dir / "w" / "warped_b.png").string(), "--out", (dir / "p").string()});
    REQUIRE(morphgen_cli(two).code == 0);
    CHECK(fs::exists(dir / "p" / "paste_1.png"));
    CHECK(fs::exists(dir / "p" / "paste_2.png"));
    CHECK_FALSE(fs::exists(dir / "p" / "paste_3.png"));
    CHECK(read_file(dir / "p" / "paste_1.png") != read_file(dir / "p" / "paste_2.png"));

    const Image expected = geom::paste_composite(read_png(dir / "w" / "warped_b.png"),
                                                 read_png(fx / "pair2" / "subject_a.png"),
                                                 read_mask_png(dir / "w" / "mask.png"), 1.0);
    CHECK(read_png(dir / "p" / "paste_2.png") == quantize_8bit(expected));

    auto none = base;
    none.insert(none.end(), {"--out", (dir / "none").string()});
    CHECK(morphgen_cli(none).code == cli::kExitInput);
}

TEST_CASE("noise-train honors the loss switch")
{
    const fs::path& fx = fixture_dir();
    const PipelineConfig config = small_config();
    const cli::ModelSet models = cli::load_models(config, {});
    const fs::path dir = fresh_dir("noise");
    Rng rng(3);
    const gen::LatentCode latent =
        gen::broadcast_latent(gen::map_latent(Eigen::VectorXd::NullaryExpr(32, [&] { return rng.normal(); }),
                                              models.generator),
                              models.generator.config);
    write_mftn(dir / "w.mftn", gen::latent_to_tensor(latent), MftnDtype::F64);
    auto train = [&](const std::string& mode) {
        REQUIRE(morphgen_cli({"noise-train", "--psnr-loss", mode, "--latent", (dir / "w.mftn").string(), "--subject-1",
                              (fx / "pair1" / "subject_a.png").string(), "--subject-2",
                              (fx / "pair1" / "subject_b.png").string(), "--out", (dir / mode).string()})
                    .code == 0);
        return read_file(dir / mode / "trace.csv");
    };
    const std::string difference = train("paper");
    const std::string symmetric = train("symmetric");
    CHECK(difference != symmetric);
    CHECK(std::count(difference.begin(), difference.end(), '\n') == 201);
    const gen::NoiseMaps noise = gen::noise_from_tensor(read_mftn(dir / "paper" / "noise.mftn"), models.generator.config);
    for (const Eigen::MatrixXd& map : noise) {
        CHECK(std::sqrt(map.squaredNorm() / static_cast<double>(map.size())) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(morphgen_cli({"noise-train", "--psnr-loss", "both", "--latent", (dir / "w.mftn").string(), "--subject-1",
                        (fx / "pair1" / "subject_a.png").string(), "--subject-2",
                        (fx / "pair1" / "subject_b.png").string(), "--out", (dir / "bad").string()})
              .code == cli::kExitInput);
}

TEST_CASE("evaluate counts accepted morphs")
{
    using nlohmann::json;
    const fs::path& fx = fixture_dir();
    const fs::path dir = fresh_dir("evaluate");
    const std::string a1 = (fx / "pair1" / "subject_a.png").string();
    const std::string b1 = (fx / "pair1" / "subject_b.png").string();
    const std::string a2 = (fx / "pair2" / "subject_a.png").string();
    const std::string b2 = (fx / "pair2" / "subject_b.png").string();
    // Three morphs identical to both probes (similarity 1) and two matched
    // against a different subject.
    const json manifest = {{"pairs",
                            {{{"id", "t1"}, {"morph", a1}, {"probe_a", a1}, {"probe_b", a1}},
                             {{"id", "t2"}, {"morph", b1}, {"probe_a", b1}, {"probe_b", b1}},
                             {{"id", "t3"}, {"morph", a2}, {"probe_a", a2}, {"probe_b", a2}},
                             {{"id", "t4"}, {"morph", a1}, {"probe_a", a1}, {"probe_b", b2}},
                             {{"id", "t5"}, {"morph", b1}, {"probe_a", a2}, {"probe_b", b1}}}}};
    std::ofstream(dir / "manifest.json") << manifest.dump();
    metrics::write_scores_csv(dir / "det1.csv", {{0.1, 0.2, 0.7}, {0.4, 0.8, 0.9}});

    REQUIRE(morphgen_cli({"evaluate", "--manifest", (dir / "manifest.json").string(), "--scores",
                          (dir / "det1.csv").string(), "--out", (dir / "out").string()})
                .code == 0);
    const json report = json::parse(read_file(dir / "out" / "report.json"));
    const auto trials = metrics::read_trials_csv(dir / "out" / "trials.csv");
    REQUIRE(trials.size() == 5);
    const double threshold = report["threshold"].get<double>();
    std::size_t accepted = 0;
    for (const auto& t : trials) {
        accepted += std::min(t.score_a, t.score_b) > threshold ? 1 : 0;
    }
    CHECK(accepted == 3);
    CHECK(report["mmpmr"].get<double>() == 0.6);
    CHECK(report["trials"].get<std::size_t>() == 5);
    CHECK(report["impostor_scores"].get<std::size_t>() == 40 * 39 / 2);
    CHECK(report["detectors"]["det1"]["eer"].get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(fs::exists(dir / "out" / "det_det1.csv"));
    CHECK(fs::exists(dir / "out" / "impostors.csv"));

    std::ofstream(dir / "empty.json") << R"({"pairs": []})";
    CHECK(morphgen_cli({"evaluate", "--manifest", (dir / "empty.json").string(), "--out",
                        (dir / "empty_out").string()})
              .code == cli::kExitInput);
    CHECK_FALSE(fs::exists(dir / "empty_out"));
}

TEST_CASE("selfcheck passes clean and fails with an injected gradient bug")
{
    const Run clean = morphgen_cli({"selfcheck"}, false);
    CHECK(clean.code == cli::kExitOk);
    for (const char* suite : {"gradients", "geometry", "pca-round-trip", "pca-blend", "metrics", "noise-regularization"}) {
        CHECK(clean.out.find(std::string("PASS ") + suite) != std::string::npos);
    }
    const Run bug = morphgen_cli({"selfcheck", "--inject-gradient-bug"}, false);
    CHECK(bug.code == cli::kExitSelfcheck);
    CHECK(bug.out.find("FAIL gradients") != std::string::npos);
}
