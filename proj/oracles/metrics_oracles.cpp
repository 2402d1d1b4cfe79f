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

#include "morphgen/oracles/metrics_oracles.hpp"

#include <cmath>
#include <limits>

namespace morphgen::oracle {
namespace {

std::size_t count_above(const std::vector<double>& scores, double t)
{
    std::size_t n = 0;
    for (const double s : scores) {
        n += s > t ? 1 : 0;
    }
    return n;
}

} // namespace

double brute_far_threshold(const std::vector<double>& impostor, double far)
{
    const double limit = far * static_cast<double>(impostor.size());
    double best = std::numeric_limits<double>::infinity();
    for (const double tau : impostor) {
        if (static_cast<double>(count_above(impostor, tau)) + 1e-9 < limit && tau < best) {
            best = tau;
        }
    }
    return best;
}

double brute_mmpmr(const std::vector<double>& score_a, const std::vector<double>& score_b, double threshold)
{
    std::size_t hits = 0;
    for (std::size_t i = 0; i < score_a.size(); ++i) {
        if (score_a[i] > threshold && score_b[i] > threshold) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(score_a.size());
}

BruteDet brute_det(const std::vector<double>& morph, const std::vector<double>& bona_fide,
                   const std::vector<double>& bpcer_targets)
{
    std::vector<double> candidates = {-std::numeric_limits<double>::infinity()};
    candidates.insert(candidates.end(), morph.begin(), morph.end());
    candidates.insert(candidates.end(), bona_fide.begin(), bona_fide.end());

    // Selection order: repeatedly take the smallest candidate not yet emitted.
    BruteDet out;
    double last = -std::numeric_limits<double>::infinity();
    bool first = true;
    for (;;) {
        double next = std::numeric_limits<double>::infinity();
        bool found = false;
        for (const double c : candidates) {
            if ((first || c > last) && c <= next) {
                next = c;
                found = true;
            }
        }
        if (!found) {
            break;
        }
        first = false;
        last = next;
        const std::size_t bona_below = bona_fide.size() - count_above(bona_fide, next);
        out.thresholds.push_back(next);
        out.apcer.push_back(static_cast<double>(count_above(morph, next)) / static_cast<double>(morph.size()));
        out.bpcer.push_back(static_cast<double>(bona_below) / static_cast<double>(bona_fide.size()));
    }

    out.eer = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < out.thresholds.size(); ++i) {
        if (out.apcer[i] == out.bpcer[i]) {
            out.eer = out.apcer[i];
            break;
        }
    }
    if (std::isnan(out.eer)) {
        for (std::size_t i = 1; i < out.thresholds.size(); ++i) {
            const double d_lo = out.apcer[i - 1] - out.bpcer[i - 1];
            const double d_hi = out.apcer[i] - out.bpcer[i];
            if (d_lo > 0.0 && d_hi < 0.0) {
                const double t = d_lo / (d_lo - d_hi);
                out.eer = out.apcer[i - 1] + t * (out.apcer[i] - out.apcer[i - 1]);
                break;
            }
        }
    }

    for (const double b : bpcer_targets) {
        double best = 1.0;
        for (std::size_t i = 0; i < out.thresholds.size(); ++i) {
            if (out.bpcer[i] <= b && out.apcer[i] < best) {
                best = out.apcer[i];
            }
        }
        out.apcer_at_bpcer.push_back(best);
    }
    return out;
}

} // namespace morphgen::oracle
