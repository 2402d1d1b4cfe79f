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

#include "morphgen/oracles/blend_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace morphgen::oracle {
namespace {

double dot_column(const Eigen::MatrixXd& v, Eigen::Index j, const std::vector<double>& x)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        s += v(i, j) * x[static_cast<std::size_t>(i)];
    }
    return s;
}

} // namespace

Eigen::VectorXd naive_pca_blend(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& vectors, double p, NaiveBlend rule)
{
    const Eigen::Index d = vectors.rows();
    const Eigen::Index e = vectors.cols();
    std::vector<double> ca(static_cast<std::size_t>(d));
    std::vector<double> cb(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        ca[static_cast<std::size_t>(i)] = a[i] - mean[i];
        cb[static_cast<std::size_t>(i)] = b[i] - mean[i];
    }
    std::vector<double> alpha_a(static_cast<std::size_t>(e));
    std::vector<double> alpha_b(static_cast<std::size_t>(e));
    for (Eigen::Index j = 0; j < e; ++j) {
        alpha_a[static_cast<std::size_t>(j)] = dot_column(vectors, j, ca);
        alpha_b[static_cast<std::size_t>(j)] = dot_column(vectors, j, cb);
    }

    // Smallest head h with h >= p * e, up to rounding slack.
    Eigen::Index head = 0;
    while (head < e && static_cast<double>(head) < p * static_cast<double>(e) - 1e-9) {
        ++head;
    }

    double tail_a = 0.0;
    double tail_b = 0.0;
    for (Eigen::Index j = head; j < e; ++j) {
        tail_a += alpha_a[static_cast<std::size_t>(j)] * alpha_a[static_cast<std::size_t>(j)];
        tail_b += alpha_b[static_cast<std::size_t>(j)] * alpha_b[static_cast<std::size_t>(j)];
    }
    const bool take_b = tail_b > tail_a;

    std::vector<double> alpha(static_cast<std::size_t>(e));
    for (Eigen::Index j = 0; j < e; ++j) {
        const double x = alpha_a[static_cast<std::size_t>(j)];
        const double y = alpha_b[static_cast<std::size_t>(j)];
        double m = 0.0;
        if (j < head) {
            m = (x + y) / 2.0;
        } else if (rule == NaiveBlend::Max) {
            m = x >= y ? x : y;
        } else if (rule == NaiveBlend::MaxMagnitude) {
            m = std::abs(y) > std::abs(x) ? y : x;
        } else {
            m = take_b ? y : x;
        }
        alpha[static_cast<std::size_t>(j)] = m;
    }

    Eigen::VectorXd out(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        double in_basis_a = 0.0;
        double in_basis_b = 0.0;
        double blended = 0.0;
        for (Eigen::Index j = 0; j < e; ++j) {
            in_basis_a += vectors(i, j) * alpha_a[static_cast<std::size_t>(j)];
            in_basis_b += vectors(i, j) * alpha_b[static_cast<std::size_t>(j)];
            blended += vectors(i, j) * alpha[static_cast<std::size_t>(j)];
        }
        const double residual_a = ca[static_cast<std::size_t>(i)] - in_basis_a;
        const double residual_b = cb[static_cast<std::size_t>(i)] - in_basis_b;
        out[i] = mean[i] + blended + (residual_a + residual_b) / 2.0;
    }
    return out;
}

double orthonormality_error(const Eigen::MatrixXd& vectors)
{
    double worst = 0.0;
    for (Eigen::Index i = 0; i < vectors.cols(); ++i) {
        for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
            double s = 0.0;
            for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
                s += vectors(r, i) * vectors(r, j);
            }
            worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

} // namespace morphgen::oracle
