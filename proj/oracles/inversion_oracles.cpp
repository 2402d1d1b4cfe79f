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

#include "morphgen/oracles/inversion_oracles.hpp"

#include <cmath>

namespace morphgen::oracle {
namespace {

double level_loss(const Eigen::MatrixXd& n)
{
    const Eigen::Index r = n.rows();
    double h = 0.0;
    double v = 0.0;
    for (Eigen::Index y = 0; y < r; ++y) {
        for (Eigen::Index x = 0; x < r; ++x) {
            h += n(y, x) * n(y, (x - 1 + r) % r);
            v += n(y, x) * n((y - 1 + r) % r, x);
        }
    }
    const double area = static_cast<double>(r * r);
    return (h / area) * (h / area) + (v / area) * (v / area);
}

Eigen::MatrixXd pool_times_two(const Eigen::MatrixXd& n)
{
    const Eigen::Index r = n.rows() / 2;
    Eigen::MatrixXd out(r, r);
    for (Eigen::Index y = 0; y < r; ++y) {
        for (Eigen::Index x = 0; x < r; ++x) {
            const double s = n(2 * y, 2 * x) + n(2 * y + 1, 2 * x) + n(2 * y, 2 * x + 1) + n(2 * y + 1, 2 * x + 1);
            out(y, x) = 2.0 * s / 4.0;
        }
    }
    return out;
}

} // namespace

double noise_regularization_double_sum(const std::vector<Eigen::MatrixXd>& maps)
{
    double total = 0.0;
    for (Eigen::MatrixXd n : maps) {
        while (true) {
            total += level_loss(n);
            if (n.rows() <= 8) {
                break;
            }
            n = pool_times_two(n);
        }
    }
    return total;
}

double mean_abs_diff(const Image& t, const Image& g)
{
    double s = 0.0;
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        s += std::abs(t.data[i] - g.data[i]);
    }
    return s / static_cast<double>(t.data.size());
}

double landmark_sq_sum(const geom::LandmarkSet& a, const geom::LandmarkSet& b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double dx = a[k].x() - b[k].x();
        const double dy = a[k].y() - b[k].y();
        s += dx * dx + dy * dy;
    }
    return s;
}

double rms(const Eigen::MatrixXd& m)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            s += m(i, j) * m(i, j);
        }
    }
    return std::sqrt(s / static_cast<double>(m.size()));
}

double psnr_from_mse(const Image& a, const Image& b)
{
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = 255.0 * a.data[i] - 255.0 * b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

} // namespace morphgen::oracle
