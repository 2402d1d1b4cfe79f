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

// Explicit-loop PCA blending references.

#include <Eigen/Core>

#include <cstddef>

namespace morphgen::oracle {

enum class NaiveBlend { Max, MaxMagnitude, NormSelect };

/// Blends one style vector pair on basis `vectors` (d x e columns) around
/// `mean`, looping over components j = 1..e one at a time.
Eigen::VectorXd naive_pca_blend(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& vectors, double p, NaiveBlend rule);

/// Largest |v_i . v_j - delta_ij| over all column pairs.
double orthonormality_error(const Eigen::MatrixXd& vectors);

} // namespace morphgen::oracle
