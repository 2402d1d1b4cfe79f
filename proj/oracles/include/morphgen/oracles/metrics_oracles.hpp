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

// Exhaustive threshold-enumeration references for the morph-attack metrics.

#include <cstddef>
#include <vector>

namespace morphgen::oracle {

/// Scans every observed score and keeps the smallest one with
/// count(impostor > tau) < far * n.
double brute_far_threshold(const std::vector<double>& impostor, double far);

double brute_mmpmr(const std::vector<double>& score_a, const std::vector<double>& score_b, double threshold);

struct BruteDet {
    double eer;
    std::vector<double> apcer_at_bpcer;
    std::vector<double> thresholds;
    std::vector<double> apcer;
    std::vector<double> bpcer;
};

/// Counts both error rates by direct loops at -inf and at every score.
BruteDet brute_det(const std::vector<double>& morph, const std::vector<double>& bona_fide,
                   const std::vector<double>& bpcer_targets);

} // namespace morphgen::oracle
