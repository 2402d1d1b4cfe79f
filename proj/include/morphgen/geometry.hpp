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

#include "morphgen/image.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace morphgen::geom {

using Point = Eigen::Vector2d;
/// Ordered landmark points (x, y) in pixel coordinates; index k is the landmark id.
using LandmarkSet = std::vector<Point>;
using Triangle = std::array<std::size_t, 3>;

struct TriangleMesh {
    std::vector<Point> vertices;
    std::vector<Triangle> triangles; // ascending index triples
};

/// Twice the signed area of (a, b, c); positive when counter-clockwise in a
/// y-up frame.
template <typename Scalar>
Scalar orient2d(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                const Eigen::Matrix<Scalar, 2, 1>& c)
{
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

template <typename Scalar>
struct Circle {
    Eigen::Matrix<Scalar, 2, 1> center;
    Scalar radius_sq;
};

/// Circumcircle of a non-degenerate triangle.
template <typename Scalar>
Circle<Scalar> circumcircle(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
                            const Eigen::Matrix<Scalar, 2, 1>& c)
{
    const Eigen::Matrix<Scalar, 2, 1> ab = b - a;
    const Eigen::Matrix<Scalar, 2, 1> ac = c - a;
    const Scalar d = Scalar(2) * (ab.x() * ac.y() - ab.y() * ac.x());
    const Scalar ab2 = ab.squaredNorm();
    const Scalar ac2 = ac.squaredNorm();
    const Eigen::Matrix<Scalar, 2, 1> offset((ac.y() * ab2 - ab.y() * ac2) / d, (ab.x() * ac2 - ac.x() * ab2) / d);
    return {a + offset, offset.squaredNorm()};
}

/// Barycentric coordinates of p with respect to (a, b, c).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> barycentric(const Eigen::Matrix<Scalar, 2, 1>& p, const Eigen::Matrix<Scalar, 2, 1>& a,
                                        const Eigen::Matrix<Scalar, 2, 1>& b, const Eigen::Matrix<Scalar, 2, 1>& c)
{
    const Scalar area = orient2d(a, b, c);
    const Scalar u = orient2d(p, b, c) / area;
    const Scalar v = orient2d(a, p, c) / area;
    return {u, v, Scalar(1) - u - v};
}

LandmarkSet average_landmarks(const LandmarkSet& a, const LandmarkSet& b);

/// Corners and edge midpoints of a height x width crop, in pixel-centre coordinates.
std::vector<Point> boundary_points(std::size_t height, std::size_t width);

/// Empty-circumcircle triangulation. Cocircular ties go to the
/// lexicographically smallest index triple; duplicate points are ignored
/// after their first occurrence. Throws InputError for fewer than three
/// points or collinear input.
TriangleMesh delaunay_triangulate(const std::vector<Point>& points);

/// True iff some point lies strictly inside the triangle's circumcircle by
/// more than eps relative to the squared radius.
bool violates_empty_circumcircle(const TriangleMesh& mesh, double eps = 1e-9);

struct WarpReport {
    std::vector<std::size_t> degenerate_triangles;
};

/// Piecewise-affine warp: the triangulation of dst is mapped back into src
/// per triangle and sampled bilinearly (border clamped). Pixels outside the
/// dst hull are zero. Triangles that collapse in src borrow the affine map of
/// the nearest valid triangle and are listed in the report.
Image warp_piecewise_affine(const Image& image, const std::vector<Point>& src, const std::vector<Point>& dst,
                            WarpReport* report = nullptr);

std::vector<Point> convex_hull(std::vector<Point> points);

/// Extra hull points that push the upper face boundary up by `pixels`
/// (eyebrows for 68-point sets, otherwise every landmark above the centroid).
std::vector<Point> forehead_extension(const LandmarkSet& landmarks, double pixels);

/// 1 for pixel centres inside or on the hull of landmarks and extra points.
Mask convex_hull_mask(const LandmarkSet& landmarks, const std::vector<Point>& extra, std::size_t height,
                      std::size_t width);

Mask apply_mask(const Mask& a, const Mask& b);
Image apply_mask(const Image& image, const Mask& mask);

/// Separable Gaussian blur, border replicated; sigma 0 returns the input.
Mask gaussian_blur(const Mask& mask, double sigma);

/// out = m' * patch + (1 - m') * background with m' the mask blurred by feather_px.
Image paste_composite(const Image& background, const Image& patch, const Mask& mask, double feather_px);

Image resize_bilinear(const Image& image, std::size_t height, std::size_t width);

LandmarkSet read_landmarks_csv(const std::filesystem::path& path);
void write_landmarks_csv(const std::filesystem::path& path, const LandmarkSet& landmarks);

} // namespace morphgen::geom
