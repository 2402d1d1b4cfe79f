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

// Direct-loop references for the inversion losses.

#include "morphgen/geometry.hpp"
#include "morphgen/image.hpp"

#include <Eigen/Core>

#include <vector>

namespace morphgen::oracle {

/// Sum over maps and over the 2x-pooled (times 2) pyramid down to 8x8 of the
/// squared horizontal and vertical one-pixel wraparound autocorrelations,
/// written as explicit double sums.
double noise_regularization_double_sum(const std::vector<Eigen::MatrixXd>& maps);

/// Sum |t - g| divided by the number of entries.
double mean_abs_diff(const Image& t, const Image& g);

/// Sum over landmarks of dx^2 + dy^2.
double landmark_sq_sum(const geom::LandmarkSet& a, const geom::LandmarkSet& b);

double rms(const Eigen::MatrixXd& m);

/// 10 log10(255^2 / MSE) over 8-bit-scaled values.
double psnr_from_mse(const Image& a, const Image& b);

} // namespace morphgen::oracle
