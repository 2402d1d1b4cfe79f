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
#include "morphgen/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace morphgen;
using checks::CheckResult;

namespace {

constexpr double kGradientSeconds = 60.0;
constexpr double kSelfInversionSeconds = 600.0;
constexpr double kDeterminismSeconds = 900.0;

// 16x16 models shared by the CLI-level criteria.
const std::vector<std::string> kSmallModels = {
    "--set", "generator.resolution=16", "--set", "generator.latent_dim=32", "--set", "generator.channel_base=256",
    "--set", "generator.max_channels=8", "--set", "generator.seed=3",       "--set", "embedders.landmarks=4",
};

std::string fmt(const char* format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

void run_cli(std::vector<std::string> args)
{
    std::vector<std::string> full = {"morphgen"};
    full.insert(full.end(), kSmallModels.begin(), kSmallModels.end());
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(full, out, err);
    if (code != cli::kExitOk) {
        throw std::runtime_error("morphgen " + args.front() + " exited " + std::to_string(code) + ": " + err.str());
    }
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("morphgen_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::map<std::string, std::string> tree_contents(const fs::path& root)
{
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            std::ifstream f(entry.path(), std::ios::binary);
            files[fs::relative(entry.path(), root).generic_string()] =
                std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        }
    }
    return files;
}

CheckResult with_time_limit(CheckResult r, double limit)
{
    if (r.seconds >= limit) {
        r.passed = false;
        r.detail += "; exceeded the " + fmt("%.0f", limit) + " s limit";
    }
    return r;
}

CheckResult determinism()
{
    const fs::path root = scratch("determinism");
    for (const char* run : {"run1", "run2"}) {
        const fs::path dir = root / run;
        const std::string jobs = std::string(run) == "run1" ? "1" : "2";
        run_cli({"fixture", "--pairs", "2", "--seed", "1", "--out", (dir / "fixture").string()});
        run_cli({"--set", "blend.mode=pca-norm", "--jobs", jobs, "pipeline", "--manifest",
                 (dir / "fixture" / "manifest.json").string(), "--out", (dir / "out").string()});
    }
    const auto a = tree_contents(root / "run1");
    const auto b = tree_contents(root / "run2");
    std::size_t differing = 0;
    std::size_t bytes = 0;
    for (const auto& [name, content] : a) {
        const auto it = b.find(name);
        differing += it == b.end() || it->second != content ? 1 : 0;
        bytes += content.size();
    }
    differing += b.size() > a.size() ? b.size() - a.size() : 0;
    const bool ok = differing == 0 && a.size() == b.size() && a.count("out/evaluate/report.json") == 1;
    fs::remove_all(root);
    CheckResult r;
    r.passed = ok;
    r.detail = std::to_string(a.size()) + " files, " + std::to_string(bytes) + " bytes; " + std::to_string(differing) +
               " differ between a --jobs 1 and a --jobs 2 run";
    return r;
}

CheckResult blending_modes()
{
    const fs::path root = scratch("blending");
    run_cli({"fixture", "--pairs", "20", "--seed", "12", "--out", (root / "fixture").string()});
    const std::vector<std::string> modes = {"avg", "pca-max", "pca-norm"};
    std::map<std::string, std::vector<metrics::MorphTrial>> trials;
    std::map<std::string, double> mmpmr;
    double threshold = 0.0;
    for (const std::string& mode : modes) {
        const fs::path out = root / mode;
        run_cli({"--set", "blend.mode=" + mode, "--set", "blend.p=0.8", "pipeline", "--manifest",
                 (root / "fixture" / "manifest.json").string(), "--out", out.string()});
        trials[mode] = metrics::read_trials_csv(out / "evaluate" / "trials.csv");
        std::ifstream f(out / "evaluate" / "report.json");
        const nlohmann::json report = nlohmann::json::parse(f);
        mmpmr[mode] = report["mmpmr"].get<double>();
        threshold = report["threshold"].get<double>();
    }
    fs::remove_all(root);

    bool valid = true;
    for (const std::string& mode : modes) {
        const auto& t = trials[mode];
        valid = valid && t.size() == 40 && mmpmr[mode] >= 0.0 && mmpmr[mode] <= 1.0;
        for (const auto& trial : t) {
            for (double s : {trial.score_a, trial.score_b}) {
                valid = valid && std::isfinite(s) && s >= -1.0 - 1e-12 && s <= 1.0 + 1e-12;
            }
        }
    }
    auto same = [&](const std::string& x, const std::string& y) {
        const auto& a = trials[x];
        const auto& b = trials[y];
        if (a.size() != b.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].score_a != b[i].score_a || a[i].score_b != b[i].score_b) {
                return false;
            }
        }
        return true;
    };
    auto mean_min = [&](const std::string& mode) {
        double sum = 0.0;
        for (const auto& t : trials[mode]) {
            sum += std::min(t.score_a, t.score_b);
        }
        return trials[mode].empty() ? 0.0 : sum / static_cast<double>(trials[mode].size());
    };
    const bool distinct = !same("avg", "pca-max") && !same("avg", "pca-norm") && !same("pca-max", "pca-norm");
    CheckResult r;
    r.passed = valid && distinct;
    r.detail = "MMPMR avg " + fmt("%.3f", mmpmr["avg"]) + ", pca-max " + fmt("%.3f", mmpmr["pca-max"]) +
               ", pca-norm " + fmt("%.3f", mmpmr["pca-norm"]) + "; delta pca-norm - avg " +
               fmt("%+.3f", mmpmr["pca-norm"] - mmpmr["avg"]) + "; threshold " + fmt("%.4f", threshold) +
               ", mean min(score_a, score_b) avg " + fmt("%.4f", mean_min("avg")) + ", pca-max " +
               fmt("%.4f", mean_min("pca-max")) + ", pca-norm " + fmt("%.4f", mean_min("pca-norm")) + "; 40 trials per mode, scores " +
               (valid ? "valid" : "INVALID") + ", distributions " + (distinct ? "distinct" : "NOT distinct");
    return r;
}

} // namespace

int main()
{
    struct Criterion {
        const char* name;
        std::function<CheckResult()> body;
        double limit;
    };
    const std::vector<Criterion> criteria = {
        {"gradient suite", [] { return checks::gradient_suite(); }, kGradientSeconds},
        {"self-inversion", checks::self_inversion, kSelfInversionSeconds},
        {"landmark enforcement", checks::landmark_enforcement, 0.0},
        {"noise cutoff at T_s", checks::noise_cutoff, 0.0},
        {"PCA blending oracles", checks::pca_blend_oracles, 0.0},
        {"PCA round trip", checks::pca_round_trip, 0.0},
        {"noise training invariants", checks::noise_training, 0.0},
        {"metrics oracles", checks::metrics_oracles, 0.0},
        {"geometry", checks::geometry, 0.0},
        {"noise regularization oracle", checks::noise_regularization_oracle, 0.0},
        {"end-to-end determinism", determinism, kDeterminismSeconds},
        {"blending modes", blending_modes, 0.0},
    };
    std::size_t passed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        CheckResult r = checks::run_check(criteria[i].name, criteria[i].body);
        if (criteria[i].limit > 0.0) {
            r = with_time_limit(std::move(r), criteria[i].limit);
        }
        passed += r.passed ? 1 : 0;
        std::cout << (r.passed ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << r.name << " ("
                  << fmt("%.1f", r.seconds) << " s): " << r.detail << std::endl;
    }
    std::cout << passed << "/" << criteria.size() << " criteria passed" << std::endl;
    return passed == criteria.size() ? 0 : 1;
}
