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

#include "morphgen/oracles/geometry_oracles.hpp"

#include "morphgen/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace morphgen::oracle {

std::size_t count_circumcircle_violations(const geom::TriangleMesh& mesh, double eps)
{
    std::size_t violations = 0;
    for (const geom::Triangle& t : mesh.triangles) {
        geom::Point a = mesh.vertices[t[0]];
        geom::Point b = mesh.vertices[t[1]];
        const geom::Point c = mesh.vertices[t[2]];
        if (geom::orient2d(a, b, c) < 0) {
            std::swap(a, b);
        }
        // Radius from the side lengths: R = abc / (4 * area).
        const double area = 0.5 * geom::orient2d(a, b, c);
        const double r = (a - b).norm() * (b - c).norm() * (c - a).norm() / (4.0 * area);
        for (std::size_t q = 0; q < mesh.vertices.size(); ++q) {
            if (q == t[0] || q == t[1] || q == t[2]) {
                continue;
            }
            const geom::Point& p = mesh.vertices[q];
            Eigen::Matrix3d m;
            for (int row = 0; row < 3; ++row) {
                const geom::Point& v = row == 0 ? a : (row == 1 ? b : c);
                const geom::Point d = v - p;
                m.row(row) << d.x(), d.y(), d.squaredNorm();
            }
            // det = 4 * area * (R^2 - |p - centre|^2) for a counter-clockwise triangle.
            const double gap = m.determinant() / (4.0 * area);
            if (gap > eps * r * r) {
                ++violations;
            }
        }
    }
    return violations;
}

double mesh_area(const geom::TriangleMesh& mesh)
{
    double total = 0.0;
    for (const geom::Triangle& t : mesh.triangles) {
        total += 0.5 * std::abs(geom::orient2d(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]));
    }
    return total;
}

double hull_area(const std::vector<geom::Point>& points)
{
    std::size_t start = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].x() < points[start].x() ||
            (points[i].x() == points[start].x() && points[i].y() < points[start].y())) {
            start = i;
        }
    }
    std::vector<geom::Point> hull;
    std::size_t current = start;
    do {
        hull.push_back(points[current]);
        std::size_t next = (current + 1) % points.size();
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double o = geom::orient2d(points[current], points[next], points[i]);
            const bool farther = o == 0.0 && (points[i] - points[current]).squaredNorm() >
                                                 (points[next] - points[current]).squaredNorm();
            if (o < 0.0 || farther) {
                next = i;
            }
        }
        current = next;
    } while (current != start && hull.size() <= points.size());
    double twice = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const geom::Point& p = hull[i];
        const geom::Point& q = hull[(i + 1) % hull.size()];
        twice += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * std::abs(twice);
}

std::size_t triangle_pixel_count(const geom::Point& a, const geom::Point& b, const geom::Point& c, std::size_t height,
                                 std::size_t width)
{
    std::size_t count = 0;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const geom::Point p(static_cast<double>(x), static_cast<double>(y));
            const double d1 = geom::orient2d(a, b, p);
            const double d2 = geom::orient2d(b, c, p);
            const double d3 = geom::orient2d(c, a, p);
            const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
            const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
            if (!(has_neg && has_pos)) {
                ++count;
            }
        }
    }
    return count;
}

Image shifted_bilinear(const Image& image, double dx, double dy)
{
    Image out(image.height, image.width, image.channels);
    const double xmax = static_cast<double>(image.width) - 1.0;
    const double ymax = static_cast<double>(image.height) - 1.0;
    for (std::size_t y = 0; y < image.height; ++y) {
        for (std::size_t x = 0; x < image.width; ++x) {
            const double sx = std::clamp(static_cast<double>(x) - dx, 0.0, xmax);
            const double sy = std::clamp(static_cast<double>(y) - dy, 0.0, ymax);
            const double x0 = std::floor(sx);
            const double y0 = std::floor(sy);
            for (std::size_t c = 0; c < image.channels; ++c) {
                double acc = 0.0;
                for (int j = 0; j < 2; ++j) {
                    for (int i = 0; i < 2; ++i) {
                        const double wx = i == 0 ? 1.0 - (sx - x0) : sx - x0;
                        const double wy = j == 0 ? 1.0 - (sy - y0) : sy - y0;
                        const auto xi = static_cast<std::size_t>(std::min(x0 + i, xmax));
                        const auto yi = static_cast<std::size_t>(std::min(y0 + j, ymax));
                        acc += wx * wy * image.at(yi, xi, c);
                    }
                }
                out.at(y, x, c) = acc;
            }
        }
    }
    return out;
}

double masked_psnr(const Image& a, const Image& b, const Mask& mask)
{
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y < a.height; ++y) {
        for (std::size_t x = 0; x < a.width; ++x) {
            if (mask(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) <= 0.5) {
                continue;
            }
            for (std::size_t c = 0; c < a.channels; ++c) {
                const double d = a.at(y, x, c) - b.at(y, x, c);
                sq += d * d;
                ++n;
            }
        }
    }
    if (n == 0 || sq == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / (sq / static_cast<double>(n)));
}

double blurred_mask_at(const Mask& mask, double sigma, long y, long x)
{
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    double acc = 0.0;
    double norm = 0.0;
    for (long j = -radius; j <= radius; ++j) {
        for (long i = -radius; i <= radius; ++i) {
            const double w = std::exp(-0.5 * static_cast<double>(i * i + j * j) / (sigma * sigma));
            const long yy = std::clamp<long>(y + j, 0, mask.rows() - 1);
            const long xx = std::clamp<long>(x + i, 0, mask.cols() - 1);
            acc += w * mask(yy, xx);
            norm += w;
        }
    }
    return acc / norm;
}

} // namespace morphgen::oracle

namespace morphgen::oracle {

WarpFixture checkerboard_fixture(std::uint64_t seed, std::size_t size, std::size_t square, double jitter,
                                 double edge_sigma)
{
    WarpFixture f;
    f.image = Image(size, size, 3);
    Mask board(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const bool dark = ((y / square) + (x / square)) % 2 == 0;
            board(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) = dark ? 0.2 : 0.8;
        }
    }
    // Band-limited edges, as a printed pattern seen through a lens would have.
    board = geom::gaussian_blur(board, edge_sigma);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                f.image.at(y, x, c) = board(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
            }
        }
    }
    Rng rng(seed);
    const double s = static_cast<double>(size);
    constexpr int grid = 5;
    for (int j = 0; j < grid; ++j) {
        for (int i = 0; i < grid; ++i) {
            const geom::Point p(s * (0.2 + 0.15 * i), s * (0.2 + 0.15 * j));
            f.landmarks_src.push_back(p);
            f.landmarks_dst.push_back(p + geom::Point(rng.uniform(-jitter, jitter), rng.uniform(-jitter, jitter)));
        }
    }
    const std::vector<geom::Point> boundary = geom::boundary_points(size, size);
    f.src = f.landmarks_src;
    f.dst = f.landmarks_dst;
    f.src.insert(f.src.end(), boundary.begin(), boundary.end());
    f.dst.insert(f.dst.end(), boundary.begin(), boundary.end());
    return f;
}

double round_trip_psnr(const WarpFixture& fixture)
{
    const Image forward = geom::warp_piecewise_affine(fixture.image, fixture.src, fixture.dst);
    const Image back = geom::warp_piecewise_affine(forward, fixture.dst, fixture.src);
    const Mask hull = geom::convex_hull_mask(fixture.landmarks_src, {}, fixture.image.height, fixture.image.width);
    return masked_psnr(fixture.image, back, hull);
}

} // namespace morphgen::oracle
