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

// Brute-force references used by the tests and by `morphgen selfcheck`.

#include "morphgen/geometry.hpp"
#include "morphgen/image.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace morphgen::oracle {

/// Incircle determinant test for every triangle against every vertex. Returns
/// the number of (triangle, point) pairs with the point strictly inside by
/// more than eps relative to the squared circumradius.
std::size_t count_circumcircle_violations(const geom::TriangleMesh& mesh, double eps = 1e-9);

/// Sum of unsigned triangle areas.
double mesh_area(const geom::TriangleMesh& mesh);

/// Shoelace area of the convex hull, computed by gift wrapping.
double hull_area(const std::vector<geom::Point>& points);

/// Pixel centres inside or on (a, b, c), by same-sign edge tests.
std::size_t triangle_pixel_count(const geom::Point& a, const geom::Point& b, const geom::Point& c, std::size_t height,
                                 std::size_t width);

/// out(y, x) = image sampled bilinearly at (x - dx, y - dy), border clamped.
Image shifted_bilinear(const Image& image, double dx, double dy);

/// PSNR in dB over pixels where mask > 0.5, intensities in [0, 1].
double masked_psnr(const Image& a, const Image& b, const Mask& mask);

/// Value of a Gaussian-blurred mask at one pixel, by a direct 2D sum with
/// replicated borders.
double blurred_mask_at(const Mask& mask, double sigma, long y, long x);

/// Checkerboard image (edges blurred by edge_sigma) with a jittered landmark
/// grid plus the 8 boundary points.
struct WarpFixture {
    Image image;
    std::vector<geom::Point> landmarks_src;
    std::vector<geom::Point> landmarks_dst;
    std::vector<geom::Point> src; // landmarks + boundary
    std::vector<geom::Point> dst;
};

WarpFixture checkerboard_fixture(std::uint64_t seed, std::size_t size = 128, std::size_t square = 16,
                                 double jitter = 3.0, double edge_sigma = 1.0);

/// Warps src -> dst -> src and scores the result inside the source landmark hull.
double round_trip_psnr(const WarpFixture& fixture);

} // namespace morphgen::oracle
