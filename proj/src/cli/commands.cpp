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
#include "morphgen/cli.hpp"
#include "morphgen/error.hpp"
#include "morphgen/geometry.hpp"
#include "morphgen/metrics.hpp"
#include "morphgen/mftn.hpp"
#include "morphgen/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace morphgen::cli {
namespace {

using json = nlohmann::json;

void require_file(const fs::path& path, const char* what)
{
    if (!fs::is_regular_file(path)) {
        throw InputError(std::string(what) + " not found: " + path.string());
    }
}

Image read_square_image(const fs::path& path, std::size_t resolution, const char* what)
{
    require_file(path, what);
    Image image = read_png(path);
    if (image.channels != 3 || image.height != resolution || image.width != resolution) {
        throw InputError(std::string(what) + " " + path.string() + " must be a " + std::to_string(resolution) + "x" +
                         std::to_string(resolution) + " RGB image");
    }
    return image;
}

geom::LandmarkSet read_landmarks(const fs::path& path, std::size_t count, std::size_t h, std::size_t w)
{
    require_file(path, "landmark file");
    geom::LandmarkSet l = geom::read_landmarks_csv(path);
    if (l.size() != count) {
        throw InputError(path.string() + ": expected " + std::to_string(count) + " landmarks, got " +
                         std::to_string(l.size()));
    }
    for (const geom::Point& p : l) {
        if (!(p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= static_cast<double>(w - 1) &&
              p.y() <= static_cast<double>(h - 1))) {
            throw InputError(path.string() + ": landmark outside the image");
        }
    }
    return l;
}

gen::LatentCode read_latent(const fs::path& path, const gen::GeneratorConfig& config)
{
    require_file(path, "latent file");
    return gen::latent_from_tensor(read_mftn(path), config);
}

std::vector<geom::Point> with_boundary(const geom::LandmarkSet& landmarks, std::size_t h, std::size_t w)
{
    std::vector<geom::Point> points = landmarks;
    const auto border = geom::boundary_points(h, w);
    points.insert(points.end(), border.begin(), border.end());
    return points;
}

Eigen::VectorXd normal_vector(std::size_t n, Rng& rng)
{
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    return z;
}

gen::LatentCode seeded_latent(const gen::GeneratorWeights& w, Rng& rng)
{
    return gen::broadcast_latent(gen::map_latent(normal_vector(w.config.latent_dim, rng), w), w.config);
}

gen::NoiseMaps parse_noise(const std::string& spec, const gen::GeneratorConfig& config)
{
    if (spec == "zero") {
        return gen::zero_noise(config);
    }
    constexpr std::string_view fresh = "fresh:";
    if (spec.starts_with(fresh)) {
        const std::string digits = spec.substr(fresh.size());
        std::size_t used = 0;
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(digits, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (digits.empty() || used != digits.size() || digits.front() == '-') {
            throw InputError("--noise fresh:<seed> needs a non-negative integer seed, got '" + spec + "'");
        }
        Rng rng(seed);
        return gen::random_noise(config, rng);
    }
    require_file(spec, "noise file");
    return gen::noise_from_tensor(read_mftn(spec), config);
}

std::string safe_id(const std::string& id)
{
    if (id.empty() || id == "." || id == ".." ||
        !std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'; })) {
        throw InputError("pair id '" + id + "' must be non-empty and use only [A-Za-z0-9._-]");
    }
    return id;
}

struct PairEntry {
    std::string id;
    fs::path subject_a, subject_b, landmarks_a, landmarks_b, probe_a, probe_b;
    std::vector<fs::path> morphs;
};

fs::path member_path(const json& pair, const char* key, const fs::path& base, std::size_t index)
{
    if (!pair.contains(key) || !pair[key].is_string()) {
        throw InputError("manifest pair " + std::to_string(index) + ": missing string field '" + key + "'");
    }
    const fs::path p = pair[key].get<std::string>();
    return p.is_absolute() ? p : base / p;
}

std::vector<PairEntry> read_manifest(const fs::path& path, bool need_subjects, bool need_morphs)
{
    require_file(path, "manifest");
    std::ifstream f(path);
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::exception& e) {
        throw InputError("cannot parse manifest " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("pairs") || !doc["pairs"].is_array()) {
        throw InputError("manifest " + path.string() + " needs a 'pairs' array");
    }
    if (doc["pairs"].empty()) {
        throw InputError("manifest " + path.string() + " has no pairs");
    }
    const fs::path base = path.parent_path();
    std::vector<PairEntry> pairs;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < doc["pairs"].size(); ++i) {
        const json& p = doc["pairs"][i];
        if (!p.is_object()) {
            throw InputError("manifest pair " + std::to_string(i) + " is not an object");
        }
        PairEntry e;
        e.id = safe_id(p.contains("id") && p["id"].is_string() ? p["id"].get<std::string>() : "pair" + std::to_string(i));
        if (!ids.insert(e.id).second) {
            throw InputError("duplicate pair id '" + e.id + "'");
        }
        e.probe_a = member_path(p, "probe_a", base, i);
        e.probe_b = member_path(p, "probe_b", base, i);
        if (need_subjects) {
            e.subject_a = member_path(p, "subject_a", base, i);
            e.subject_b = member_path(p, "subject_b", base, i);
            e.landmarks_a = member_path(p, "landmarks_a", base, i);
            e.landmarks_b = member_path(p, "landmarks_b", base, i);
        }
        if (need_morphs) {
            if (!p.contains("morph")) {
                throw InputError("manifest pair " + std::to_string(i) + ": missing 'morph'");
            }
            const json morph = p["morph"].is_array() ? p["morph"] : json::array({p["morph"]});
            if (morph.empty()) {
                throw InputError("manifest pair " + std::to_string(i) + ": empty 'morph' list");
            }
            for (const json& m : morph) {
                if (!m.is_string()) {
                    throw InputError("manifest pair " + std::to_string(i) + ": 'morph' entries must be paths");
                }
                const fs::path mp = m.get<std::string>();
                e.morphs.push_back(mp.is_absolute() ? mp : base / mp);
            }
        }
        pairs.push_back(std::move(e));
    }
    return pairs;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f || !(f << text)) {
        throw InputError("cannot write " + path.string());
    }
}

std::string relative_to(const fs::path& p, const fs::path& base)
{
    return fs::relative(p, base).generic_string();
}

} // namespace

ModelSet load_models(const PipelineConfig& config, const ModelPaths& paths)
{
    ModelSet m;
    if (paths.generator) {
        require_file(*paths.generator, "generator weights");
        m.generator = gen::load_weights(*paths.generator);
    } else {
        m.generator = gen::init_weights(config.generator);
    }
    if (paths.embedders) {
        require_file(*paths.embedders, "embedder weights");
        m.embedders = emb::load_embedders(*paths.embedders);
    } else {
        emb::EmbedderConfig e = config.embedders;
        e.image_size = m.generator.config.resolution;
        m.embedders = emb::init_embedders(e);
    }
    if (m.embedders.config.image_size != m.generator.config.resolution) {
        throw InputError("embedder image size " + std::to_string(m.embedders.config.image_size) +
                         " does not match generator resolution " + std::to_string(m.generator.config.resolution));
    }
    return m;
}

void cmd_warp(const PipelineConfig& config, const WarpArgs& args)
{
    require_file(args.image_a, "image");
    require_file(args.image_b, "image");
    const Image a = read_png(args.image_a);
    const Image b = read_png(args.image_b);
    if (!a.same_shape(b) || a.channels != 3) {
        throw InputError("warp needs two RGB images of the same size");
    }
    const std::size_t h = a.height;
    const std::size_t w = a.width;
    require_file(args.landmarks_a, "landmark file");
    const std::size_t count = geom::read_landmarks_csv(args.landmarks_a).size();
    if (count < 3) {
        throw InputError(args.landmarks_a.string() + ": at least 3 landmarks are needed");
    }
    const auto la = read_landmarks(args.landmarks_a, count, h, w);
    const auto lb = read_landmarks(args.landmarks_b, count, h, w);

    const auto mid = geom::average_landmarks(la, lb);
    const auto dst = with_boundary(mid, h, w);
    const Image wa = geom::warp_piecewise_affine(a, with_boundary(la, h, w), dst);
    const Image wb = geom::warp_piecewise_affine(b, with_boundary(lb, h, w), dst);
    const Mask mask = geom::convex_hull_mask(mid, geom::forehead_extension(mid, config.forehead_px), h, w);

    fs::create_directories(args.out);
    write_png(args.out / "warped_a.png", wa);
    write_png(args.out / "warped_b.png", wb);
    write_png(args.out / "hull_a.png", geom::apply_mask(wa, mask));
    write_png(args.out / "hull_b.png", geom::apply_mask(wb, mask));
    write_mask_png(args.out / "mask.png", mask);
    geom::write_landmarks_csv(args.out / "target_landmarks.csv", mid);
}

void cmd_invert(const PipelineConfig& config, const ModelSet& models, const InvertArgs& args)
{
    const std::size_t r = models.generator.config.resolution;
    const Image target = read_square_image(args.image, r, "target image");
    const auto landmarks = read_landmarks(args.landmarks, models.embedders.config.landmarks, r, r);

    const inv::InversionResult res = inv::invert(target, landmarks, models.view(), config.inversion);

    fs::create_directories(args.out);
    write_mftn(args.out / "latent.mftn", gen::latent_to_tensor(res.latent), MftnDtype::F64);
    write_mftn(args.out / "noise.mftn", gen::noise_to_tensor(res.noise), MftnDtype::F64);
    inv::write_trace_csv(args.out / "trace.csv", res.trace);
    write_png(args.out / "reconstruction.png", gen::synthesize_from_w(res.latent, res.noise, models.generator));
}

void cmd_pca_fit(const PipelineConfig& config, const ModelSet& models, const PcaFitArgs& args)
{
    std::vector<gen::StyleSet> corpus;
    if (args.corpus) {
        if (!fs::is_directory(*args.corpus)) {
            throw InputError("corpus directory not found: " + args.corpus->string());
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(*args.corpus)) {
            if (entry.is_regular_file() && entry.path().extension() == ".mftn") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files) {
            corpus.push_back(gen::affine_styles(read_latent(f, models.generator.config), models.generator));
        }
    } else {
        corpus = blend::style_corpus(models.generator, config.pca_samples, config.pca_seed);
    }
    if (corpus.size() < 2) {
        throw InputError("PCA corpus needs at least 2 latents, got " + std::to_string(corpus.size()));
    }
    const blend::PcaModels pca = blend::fit_style_pca(corpus, args.jobs);
    blend::save_pca(args.out, pca);
}

void cmd_morph(const PipelineConfig& config, const ModelSet& models, const MorphArgs& args)
{
    const auto& gc = models.generator.config;
    const gen::LatentCode la = read_latent(args.latent_a, gc);
    const gen::LatentCode lb = read_latent(args.latent_b, gc);
    gen::StyleSet styles;
    std::optional<gen::LatentCode> averaged;
    if (config.blend_mode == blend::BlendMode::Average) {
        averaged = blend::average_latents(la, lb);
        styles = gen::affine_styles(*averaged, models.generator);
    } else {
        if (!args.pca) {
            throw InputError("blend mode " + blend::to_string(config.blend_mode) + " needs --pca");
        }
        if (!fs::is_directory(*args.pca)) {
            throw InputError("PCA directory not found: " + args.pca->string());
        }
        const blend::PcaModels pca = blend::load_pca(*args.pca);
        blend::check_models(pca, gc);
        styles = blend::morph_styles(gen::affine_styles(la, models.generator), gen::affine_styles(lb, models.generator),
                                     config.blend_mode, config.blend_p, &pca, config.max_rule);
    }
    fs::create_directories(args.out);
    write_mftn(args.out / "morph_styles.mftn", gen::styles_to_tensor(styles), MftnDtype::F64);
    if (averaged) {
        write_mftn(args.out / "morph_latent.mftn", gen::latent_to_tensor(*averaged), MftnDtype::F64);
    }
}

void cmd_synthesize(const PipelineConfig&, const ModelSet& models, const SynthesizeArgs& args)
{
    const auto& gc = models.generator.config;
    if (args.latent.has_value() == args.styles.has_value()) {
        throw InputError("synthesize needs exactly one of --latent and --styles");
    }
    gen::StyleSet styles;
    if (args.latent) {
        styles = gen::affine_styles(read_latent(*args.latent, gc), models.generator);
    } else {
        require_file(*args.styles, "styles file");
        styles = gen::styles_from_tensor(read_mftn(*args.styles), gc);
    }
    const gen::NoiseMaps noise = parse_noise(args.noise, gc);
    const Image image = gen::synthesize(styles, noise, models.generator);
    fs::create_directories(args.out);
    write_png(args.out / "image.png", image);
    write_mftn(args.out / "noise.mftn", gen::noise_to_tensor(noise), MftnDtype::F64);
}

void cmd_paste(const PipelineConfig& config, const PasteArgs& args)
{
    if (args.backgrounds.empty()) {
        throw InputError("paste needs at least one background");
    }
    require_file(args.morph, "morph image");
    require_file(args.mask, "mask");
    const Image morph = read_png(args.morph);
    const Mask mask = read_mask_png(args.mask);
    std::vector<Image> backgrounds;
    for (const fs::path& p : args.backgrounds) {
        require_file(p, "background");
        backgrounds.push_back(read_png(p));
        const Image& bg = backgrounds.back();
        if (bg.channels != 3 || static_cast<Eigen::Index>(bg.height) != mask.rows() ||
            static_cast<Eigen::Index>(bg.width) != mask.cols()) {
            throw InputError("background " + p.string() + " must be RGB and match the mask size");
        }
    }
    if (morph.channels != 3) {
        throw InputError("morph image must be RGB");
    }
    std::vector<Image> out;
    for (const Image& bg : backgrounds) {
        out.push_back(geom::paste_composite(bg, geom::resize_bilinear(morph, bg.height, bg.width), mask,
                                            config.feather_px));
    }
    fs::create_directories(args.out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        write_png(args.out / ("paste_" + std::to_string(i + 1) + ".png"), out[i]);
    }
}

void cmd_noise_train(const PipelineConfig& config, const ModelSet& models, const NoiseTrainArgs& args)
{
    const std::size_t r = models.generator.config.resolution;
    const gen::LatentCode latent = read_latent(args.latent, models.generator.config);
    const Image t1 = read_square_image(args.subject_1, r, "subject image");
    const Image t2 = read_square_image(args.subject_2, r, "subject image");

    const inv::NoiseTrainResult res = inv::noise_train(latent, t1, t2, models.view(), config.noise_train);

    fs::create_directories(args.out);
    write_mftn(args.out / "noise.mftn", gen::noise_to_tensor(res.noise), MftnDtype::F64);
    inv::write_noise_trace_csv(args.out / "trace.csv", res.trace);
    write_png(args.out / "morph.png", gen::synthesize_from_w(latent, res.noise, models.generator));
}

void cmd_evaluate(const PipelineConfig& config, const ModelSet& models, const EvaluateArgs& args)
{
    const std::size_t r = models.generator.config.resolution;
    const std::vector<PairEntry> pairs = read_manifest(args.manifest, false, true);
    std::map<std::string, metrics::ScoreSet> detectors;
    for (const fs::path& p : args.detector_scores) {
        require_file(p, "score file");
        const std::string name = p.stem().string();
        if (!detectors.emplace(name, metrics::read_scores_csv(p)).second) {
            throw InputError("two score files share the name '" + name + "'");
        }
    }

    struct Item {
        std::string id;
        Image morph, probe_a, probe_b;
    };
    std::vector<Item> items;
    for (const PairEntry& e : pairs) {
        const Image pa = read_square_image(e.probe_a, r, "probe image");
        const Image pb = read_square_image(e.probe_b, r, "probe image");
        for (std::size_t k = 0; k < e.morphs.size(); ++k) {
            const std::string id = e.morphs.size() == 1 ? e.id : e.id + "/" + std::to_string(k + 1);
            items.push_back({id, read_square_image(e.morphs[k], r, "morph image"), pa, pb});
        }
    }

    const auto& ew = models.embedders;
    std::vector<metrics::MorphTrial> trials(items.size());
    parallel_for(items.size(), args.jobs, [&](std::size_t i) {
        const Eigen::VectorXd m = emb::identity_embed(items[i].morph, ew);
        trials[i] = {items[i].id, emb::identity_similarity(m, emb::identity_embed(items[i].probe_a, ew)),
                     emb::identity_similarity(m, emb::identity_embed(items[i].probe_b, ew))};
    });

    const std::size_t n = config.impostor_images;
    std::vector<Eigen::VectorXd> embeddings(n);
    {
        std::vector<gen::LatentCode> latents;
        std::vector<gen::NoiseMaps> noise;
        Rng rng(config.impostor_seed);
        for (std::size_t i = 0; i < n; ++i) {
            latents.push_back(seeded_latent(models.generator, rng));
            noise.push_back(gen::random_noise(models.generator.config, rng));
        }
        parallel_for(n, args.jobs, [&](std::size_t i) {
            embeddings[i] = emb::identity_embed(gen::synthesize_from_w(latents[i], noise[i], models.generator), ew);
        });
    }
    std::vector<double> impostors;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            impostors.push_back(emb::identity_similarity(embeddings[i], embeddings[j]));
        }
    }
    const double threshold = metrics::far_threshold(impostors, config.far);
    const double mmpmr = metrics::mmpmr(trials, threshold);

    json report = {{"trials", trials.size()},
                   {"far", config.far},
                   {"impostor_scores", impostors.size()},
                   {"threshold", threshold},
                   {"mmpmr", mmpmr}};
    json det = json::object();
    std::map<std::string, metrics::DetMetrics> det_results;
    for (const auto& [name, scores] : detectors) {
        const metrics::DetMetrics d = metrics::det_metrics(scores);
        json apcer = json::object();
        for (std::size_t k = 0; k < metrics::kBpcerTargets.size(); ++k) {
            char key[32];
            std::snprintf(key, sizeof(key), "%g", metrics::kBpcerTargets[k]);
            apcer[key] = d.apcer_at_bpcer[k];
        }
        det[name] = {{"eer", d.eer}, {"apcer_at_bpcer", apcer}, {"morph", scores.morph.size()},
                     {"bona_fide", scores.bona_fide.size()}};
        det_results.emplace(name, d);
    }
    report["detectors"] = det;

    fs::create_directories(args.out);
    metrics::write_trials_csv(args.out / "trials.csv", trials);
    {
        std::ostringstream os;
        os << "score\n";
        char buf[32];
        for (double s : impostors) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", s);
            os << buf;
        }
        write_text(args.out / "impostors.csv", os.str());
    }
    for (const auto& [name, d] : det_results) {
        metrics::write_det_curve_csv(args.out / ("det_" + name + ".csv"), d.curve);
    }
    write_text(args.out / "report.json", report.dump(2) + "\n");
}

int cmd_selfcheck(bool inject_gradient_bug, std::ostream& out)
{
    const std::vector<std::pair<std::string, std::function<checks::CheckResult()>>> suites = {
        {"gradients", [&] { return checks::gradient_suite(inject_gradient_bug ? 1.01 : 1.0); }},
        {"geometry", checks::geometry},
        {"pca-round-trip", checks::pca_round_trip},
        {"pca-blend", checks::pca_blend_oracles},
        {"metrics", checks::metrics_oracles},
        {"noise-regularization", checks::noise_regularization_oracle},
    };
    bool all = true;
    for (const auto& [name, fn] : suites) {
        const checks::CheckResult r = checks::run_check(name, fn);
        char secs[32];
        std::snprintf(secs, sizeof(secs), "%.1fs", r.seconds);
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << secs << "): " << r.detail << '\n';
        all = all && r.passed;
    }
    out << (all ? "selfcheck passed" : "selfcheck FAILED") << '\n';
    return all ? kExitOk : kExitSelfcheck;
}

void cmd_init_weights(const PipelineConfig& config, const fs::path& out)
{
    const ModelSet m = load_models(config, {});
    fs::create_directories(out);
    gen::save_weights(out / "generator.mftn", m.generator);
    emb::save_embedders(out / "embedders.mftn", m.embedders);
}

void cmd_fixture(const PipelineConfig&, const ModelSet& models, const FixtureArgs& args)
{
    if (args.pairs == 0) {
        throw InputError("fixture needs at least one pair");
    }
    const auto& gw = models.generator;
    struct Subject {
        Image image, probe;
        geom::LandmarkSet landmarks;
    };
    std::vector<Subject> subjects;
    for (std::size_t s = 0; s < 2 * args.pairs; ++s) {
        Rng rng(args.seed * 1000003 + s);
        const gen::LatentCode latent = seeded_latent(gw, rng);
        Subject sub;
        sub.image = gen::synthesize_from_w(latent, gen::random_noise(gw.config, rng), gw);
        sub.probe = gen::synthesize_from_w(latent, gen::random_noise(gw.config, rng), gw);
        sub.landmarks = emb::localize_landmarks(sub.image, models.embedders);
        subjects.push_back(std::move(sub));
    }
    fs::create_directories(args.out);
    json pairs = json::array();
    for (std::size_t p = 0; p < args.pairs; ++p) {
        const std::string id = "pair" + std::to_string(p + 1);
        const fs::path dir = args.out / id;
        fs::create_directories(dir);
        json entry = {{"id", id}};
        for (int k = 0; k < 2; ++k) {
            const Subject& sub = subjects[2 * p + static_cast<std::size_t>(k)];
            const std::string side = k == 0 ? "a" : "b";
            write_png(dir / ("subject_" + side + ".png"), sub.image);
            write_png(dir / ("probe_" + side + ".png"), sub.probe);
            geom::write_landmarks_csv(dir / ("landmarks_" + side + ".csv"), sub.landmarks);
            entry["subject_" + side] = id + "/subject_" + side + ".png";
            entry["probe_" + side] = id + "/probe_" + side + ".png";
            entry["landmarks_" + side] = id + "/landmarks_" + side + ".csv";
        }
        pairs.push_back(entry);
    }
    write_text(args.out / "manifest.json", json{{"pairs", pairs}}.dump(2) + "\n");
}

void cmd_pipeline(const PipelineConfig& config, const ModelSet& models, const PipelineArgs& args)
{
    const std::size_t r = models.generator.config.resolution;
    const std::vector<PairEntry> pairs = read_manifest(args.manifest, true, false);
    for (const PairEntry& e : pairs) {
        read_square_image(e.subject_a, r, "subject image");
        read_square_image(e.subject_b, r, "subject image");
        read_square_image(e.probe_a, r, "probe image");
        read_square_image(e.probe_b, r, "probe image");
        read_landmarks(e.landmarks_a, models.embedders.config.landmarks, r, r);
        read_landmarks(e.landmarks_b, models.embedders.config.landmarks, r, r);
    }

    const fs::path pca_dir = args.out / "pca";
    cmd_pca_fit(config, models, {std::nullopt, pca_dir, args.jobs});

    parallel_for(pairs.size(), args.jobs, [&](std::size_t i) {
        const PairEntry& e = pairs[i];
        const fs::path dir = args.out / e.id;
        cmd_warp(config, {e.subject_a, e.landmarks_a, e.subject_b, e.landmarks_b, dir / "warp"});
        const fs::path target = dir / "warp" / "target_landmarks.csv";
        cmd_invert(config, models, {dir / "warp" / "warped_a.png", target, dir / "invert_a"});
        cmd_invert(config, models, {dir / "warp" / "warped_b.png", target, dir / "invert_b"});
        cmd_morph(config, models, {dir / "invert_a" / "latent.mftn", dir / "invert_b" / "latent.mftn", pca_dir,
                                   dir / "morph"});
        cmd_synthesize(config, models,
                       {std::nullopt, dir / "morph" / "morph_styles.mftn",
                        "fresh:" + std::to_string(config.fresh_noise_seed + i), dir / "synthesize"});
        cmd_paste(config, {dir / "synthesize" / "image.png",
                           dir / "warp" / "mask.png",
                           {dir / "warp" / "warped_a.png", dir / "warp" / "warped_b.png"},
                           dir / "paste"});
    });

    json entries = json::array();
    for (const PairEntry& e : pairs) {
        entries.push_back({{"id", e.id},
                           {"probe_a", relative_to(e.probe_a, args.out)},
                           {"probe_b", relative_to(e.probe_b, args.out)},
                           {"morph", {e.id + "/paste/paste_1.png", e.id + "/paste/paste_2.png"}}});
    }
    const fs::path manifest = args.out / "morphs.json";
    write_text(manifest, json{{"pairs", entries}}.dump(2) + "\n");
    cmd_evaluate(config, models, {manifest, {}, args.out / "evaluate", args.jobs});
}

} // namespace morphgen::cli
