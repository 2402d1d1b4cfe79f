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

#include "morphgen/metrics.hpp"

#include "morphgen/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace morphgen::metrics {
namespace {

// Absorbs rounding in far * n so that e.g. 0.3 * 10 selects the 3rd score.
constexpr double kCountGuard = 1e-9;

void check_scores(const std::vector<double>& scores, const char* what)
{
    if (scores.empty()) {
        throw InputError(std::string(what) + ": no scores");
    }
    for (const double s : scores) {
        if (!std::isfinite(s)) {
            throw InputError(std::string(what) + ": non-finite score");
        }
    }
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_score(const std::string& text, const std::string& where)
{
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw InputError(where + ": bad score '" + text + "'");
    }
    return v;
}

// Yields data lines (CR stripped, blanks skipped) after checking the header.
template <typename Fn>
void for_each_row(const std::filesystem::path& path, const std::string& header, Fn&& fn)
{
    std::ifstream f(path);
    if (!f) {
        throw InputError("cannot open " + path.string());
    }
    std::string line;
    std::getline(f, line);
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != header) {
        throw InputError(path.string() + ": expected header '" + header + "'");
    }
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        fn(split_csv(line), path.string() + ":" + std::to_string(lineno));
    }
}

std::ofstream open_for_write(const std::filesystem::path& path)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw InputError("cannot write " + path.string());
    }
    return f;
}

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

double far_threshold(const std::vector<double>& impostor, double far)
{
    check_scores(impostor, "far_threshold");
    if (!(far > 0.0 && far <= 1.0)) {
        throw InputError("far_threshold: far must be in (0, 1]");
    }
    std::vector<double> desc = impostor;
    std::sort(desc.begin(), desc.end(), std::greater<>());
    if (far == 1.0) {
        return std::nextafter(desc.back(), -std::numeric_limits<double>::infinity());
    }
    const double wanted = std::ceil(far * static_cast<double>(desc.size()) - kCountGuard);
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(wanted, 1.0)), 1, desc.size());
    return desc[k - 1];
}

double mmpmr(const std::vector<MorphTrial>& trials, double threshold)
{
    if (trials.empty()) {
        throw InputError("mmpmr: no trials");
    }
    std::size_t matched = 0;
    for (const MorphTrial& t : trials) {
        if (!std::isfinite(t.score_a) || !std::isfinite(t.score_b)) {
            throw InputError("mmpmr: non-finite score in trial " + t.id);
        }
        if (std::min(t.score_a, t.score_b) > threshold) {
            ++matched;
        }
    }
    return static_cast<double>(matched) / static_cast<double>(trials.size());
}

DetMetrics det_metrics(const std::vector<double>& morph, const std::vector<double>& bona_fide)
{
    check_scores(morph, "det_metrics: morph");
    check_scores(bona_fide, "det_metrics: bona fide");
    std::vector<double> m = morph;
    std::vector<double> b = bona_fide;
    std::sort(m.begin(), m.end());
    std::sort(b.begin(), b.end());

    std::vector<double> thresholds;
    thresholds.reserve(m.size() + b.size() + 1);
    thresholds.push_back(-std::numeric_limits<double>::infinity());
    std::merge(m.begin(), m.end(), b.begin(), b.end(), std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    const auto nm = static_cast<double>(m.size());
    const auto nb = static_cast<double>(b.size());
    DetMetrics out;
    out.curve.reserve(thresholds.size());
    for (const double t : thresholds) {
        const auto morph_at_or_below = std::upper_bound(m.begin(), m.end(), t) - m.begin();
        const auto bona_at_or_below = std::upper_bound(b.begin(), b.end(), t) - b.begin();
        out.curve.push_back({t, static_cast<double>(static_cast<std::ptrdiff_t>(m.size()) - morph_at_or_below) / nm,
                             static_cast<double>(bona_at_or_below) / nb});
    }

    // APCER - BPCER falls from 1 at -inf to -1 at the top score.
    for (std::size_t i = 1; i < out.curve.size(); ++i) {
        const DetPoint& hi = out.curve[i];
        const double d = hi.apcer - hi.bpcer;
        if (d > 0.0) {
            continue;
        }
        if (d == 0.0) {
            out.eer = hi.apcer;
        } else {
            const DetPoint& lo = out.curve[i - 1];
            const double d_lo = lo.apcer - lo.bpcer;
            const double t = d_lo / (d_lo - d);
            out.eer = lo.apcer + t * (hi.apcer - lo.apcer);
        }
        break;
    }
    for (std::size_t k = 0; k < kBpcerTargets.size(); ++k) {
        out.apcer_at_bpcer[k] = apcer_at(out.curve, kBpcerTargets[k]);
    }
    return out;
}

DetMetrics det_metrics(const ScoreSet& scores)
{
    return det_metrics(scores.morph, scores.bona_fide);
}

double apcer_at(const std::vector<DetPoint>& curve, double bpcer_target)
{
    if (curve.empty()) {
        throw InputError("apcer_at: empty curve");
    }
    double apcer = 1.0;
    for (const DetPoint& p : curve) {
        if (p.bpcer <= bpcer_target) {
            apcer = p.apcer;
        }
    }
    return apcer;
}

ScoreSet read_scores_csv(const std::filesystem::path& path)
{
    ScoreSet out;
    for_each_row(path, "label,score", [&](const std::vector<std::string>& f, const std::string& where) {
        if (f.size() != 2) {
            throw InputError(where + ": expected 2 fields");
        }
        const double s = parse_score(f[1], where);
        if (f[0] == "bona_fide") {
            out.bona_fide.push_back(s);
        } else if (f[0] == "morph") {
            out.morph.push_back(s);
        } else {
            throw InputError(where + ": label must be bona_fide or morph");
        }
    });
    if (out.morph.empty() || out.bona_fide.empty()) {
        throw InputError(path.string() + ": need both bona_fide and morph rows");
    }
    return out;
}

void write_scores_csv(const std::filesystem::path& path, const ScoreSet& scores)
{
    std::ofstream f = open_for_write(path);
    f << "label,score\n";
    for (const double s : scores.bona_fide) {
        f << "bona_fide," << format_double(s) << '\n';
    }
    for (const double s : scores.morph) {
        f << "morph," << format_double(s) << '\n';
    }
}

std::vector<MorphTrial> read_trials_csv(const std::filesystem::path& path)
{
    std::vector<MorphTrial> out;
    for_each_row(path, "morph_id,score_a,score_b", [&](const std::vector<std::string>& f, const std::string& where) {
        if (f.size() != 3 || f[0].empty()) {
            throw InputError(where + ": expected morph_id,score_a,score_b");
        }
        out.push_back({f[0], parse_score(f[1], where), parse_score(f[2], where)});
    });
    if (out.empty()) {
        throw InputError(path.string() + ": no trials");
    }
    return out;
}

void write_trials_csv(const std::filesystem::path& path, const std::vector<MorphTrial>& trials)
{
    std::ofstream f = open_for_write(path);
    f << "morph_id,score_a,score_b\n";
    for (const MorphTrial& t : trials) {
        f << t.id << ',' << format_double(t.score_a) << ',' << format_double(t.score_b) << '\n';
    }
}

void write_det_curve_csv(const std::filesystem::path& path, const std::vector<DetPoint>& curve)
{
    std::ofstream f = open_for_write(path);
    f << "threshold,apcer,bpcer\n";
    for (const DetPoint& p : curve) {
        f << format_double(p.threshold) << ',' << format_double(p.apcer) << ',' << format_double(p.bpcer) << '\n';
    }
}

} // namespace morphgen::metrics
