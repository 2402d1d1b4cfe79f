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

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace morphgen::metrics {

/// Similarities of one morph to a probe of each contributing subject.
struct MorphTrial {
    std::string id;
    double score_a = 0.0;
    double score_b = 0.0;
};

/// Detector scores; higher means more likely bona fide.
struct ScoreSet {
    std::vector<double> morph;
    std::vector<double> bona_fide;
};

/// Smallest observed score tau with count(impostor > tau) < far * n, i.e. the
/// ceil(far * n)-th largest score. far == 1 returns just below the minimum so
/// every impostor is accepted.
double far_threshold(const std::vector<double>& impostor, double far);

/// Fraction of trials with min(score_a, score_b) > threshold.
double mmpmr(const std::vector<MorphTrial>& trials, double threshold);

/// One point of the error trade-off: a sample is classified bona fide iff
/// its score is > threshold.
struct DetPoint {
    double threshold;
    double apcer;
    double bpcer;
};

inline constexpr std::array<double, 3> kBpcerTargets = {0.01, 0.05, 0.10};

struct DetMetrics {
    double eer = 0.0;
    /// APCER at the largest threshold with BPCER <= target, per kBpcerTargets.
    std::array<double, 3> apcer_at_bpcer{};
    /// Thresholds -inf followed by the sorted distinct scores.
    std::vector<DetPoint> curve;
};

DetMetrics det_metrics(const std::vector<double>& morph, const std::vector<double>& bona_fide);
DetMetrics det_metrics(const ScoreSet& scores);

/// APCER at the largest threshold on `curve` whose BPCER <= target.
double apcer_at(const std::vector<DetPoint>& curve, double bpcer_target);

/// `label,score` with label bona_fide or morph.
ScoreSet read_scores_csv(const std::filesystem::path& path);
void write_scores_csv(const std::filesystem::path& path, const ScoreSet& scores);
/// `morph_id,score_a,score_b`.
std::vector<MorphTrial> read_trials_csv(const std::filesystem::path& path);
void write_trials_csv(const std::filesystem::path& path, const std::vector<MorphTrial>& trials);
void write_det_curve_csv(const std::filesystem::path& path, const std::vector<DetPoint>& curve);

} // namespace morphgen::metrics
