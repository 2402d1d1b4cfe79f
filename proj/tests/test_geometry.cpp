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

#include "doctest.h"

#include "morphgen/error.hpp"
#include "morphgen/geometry.hpp"
#include "morphgen/image.hpp"
#include "morphgen/oracles/geometry_oracles.hpp"
#include "morphgen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace morphgen;
using namespace morphgen::geom;

namespace {

std::vector<Point> random_points(Rng& rng, std::size_t n, double extent)
{
    std::vector<Point> pts;
    for (std::size_t i = 0; i < n; ++i) {
        pts.emplace_back(rng.uniform(0.0, extent), rng.uniform(0.0, extent));
    }
    return pts;
}

Image random_image(Rng& rng, std::size_t h, std::size_t w)
{
    Image img(h, w, 3);
    for (double& v : img.data) {
        v = rng.uniform();
    }
    return img;
}

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("morphgen_test_geometry_" + name);
}

} // namespace

TEST_CASE("average_landmarks")
{
    const LandmarkSet a{{0, 0}, {2, 4}};
    const LandmarkSet b{{10, 20}, {2, 4}};
    const LandmarkSet m = average_landmarks(a, b);
    CHECK(m[0] == Point(5, 10));
    CHECK(m[1] == Point(2, 4));
    CHECK(average_landmarks(a, a) == a);
    CHECK(average_landmarks(a, b) == average_landmarks(b, a));
    CHECK_THROWS_AS(average_landmarks(a, LandmarkSet{{1, 1}}), InputError);
}

TEST_CASE("boundary points are corners and edge midpoints")
{
    const auto pts = boundary_points(64, 32);
    REQUIRE(pts.size() == 8);
    CHECK(std::count(pts.begin(), pts.end(), Point(0, 0)) == 1);
    CHECK(std::count(pts.begin(), pts.end(), Point(31, 63)) == 1);
    CHECK(std::count(pts.begin(), pts.end(), Point(15.5, 0)) == 1);
    CHECK(std::count(pts.begin(), pts.end(), Point(0, 31.5)) == 1);
}

TEST_CASE("delaunay small cases")
{
    const TriangleMesh one = delaunay_triangulate({{0, 0}, {1, 0}, {0, 1}});
    CHECK(one.triangles.size() == 1);

    // Cocircular square: both diagonals are valid, the smallest triple wins.
    const TriangleMesh sq = delaunay_triangulate({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    REQUIRE(sq.triangles.size() == 2);
    CHECK(sq.triangles[0] == Triangle{0, 1, 2});
    CHECK(sq.triangles[1] == Triangle{0, 2, 3});
    CHECK(oracle::count_circumcircle_violations(sq) == 0);

    CHECK_THROWS_AS(delaunay_triangulate({{0, 0}, {1, 1}}), InputError);
    CHECK_THROWS_AS(delaunay_triangulate({{0, 0}, {1, 1}, {2, 2}, {3, 3}}), InputError);

    const TriangleMesh dup = delaunay_triangulate({{0, 0}, {1, 0}, {0, 1}, {1, 0}});
    CHECK(dup.triangles.size() == 1);
}

TEST_CASE("delaunay on random point sets")
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const auto pts = random_points(rng, 20, 100.0);
        const TriangleMesh mesh = delaunay_triangulate(pts);
        INFO("seed " << seed);
        CHECK(oracle::count_circumcircle_violations(mesh) == 0);
        CHECK_FALSE(violates_empty_circumcircle(mesh));
        CHECK(oracle::mesh_area(mesh) == doctest::Approx(oracle::hull_area(pts)).epsilon(1e-9));
        for (const Triangle& t : mesh.triangles) {
            CHECK(t[0] < t[1]);
            CHECK(t[1] < t[2]);
            CHECK(t[2] < pts.size());
            CHECK(std::abs(orient2d(pts[t[0]], pts[t[1]], pts[t[2]])) > 0.0);
        }
    }
}

TEST_CASE("delaunay on a lattice with many cocircular quadruples")
{
    std::vector<Point> pts;
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            pts.emplace_back(x, y);
        }
    }
    const TriangleMesh mesh = delaunay_triangulate(pts);
    CHECK(mesh.triangles.size() == 18);
    CHECK(oracle::count_circumcircle_violations(mesh) == 0);
    CHECK(oracle::mesh_area(mesh) == doctest::Approx(9.0));
}

TEST_CASE("identity warp")
{
    Rng rng(7);
    const Image img = random_image(rng, 40, 48);
    std::vector<Point> pts = random_points(rng, 12, 39.0);
    const auto boundary = boundary_points(40, 48);
    pts.insert(pts.end(), boundary.begin(), boundary.end());
    const Image out = warp_piecewise_affine(img, pts, pts);
    CHECK(max_abs_diff(out, img) < 1e-6);
}

TEST_CASE("translated landmarks shift content")
{
    Rng rng(11);
    const Image img = random_image(rng, 64, 64);
    const std::vector<Point> src{{10, 12}, {40, 10}, {50, 45}, {20, 50}, {30, 30}};
    std::vector<Point> dst;
    for (const Point& p : src) {
        dst.push_back(p + Point(5, 0));
    }
    const Image out = warp_piecewise_affine(img, src, dst);
    const Image expected = oracle::shifted_bilinear(img, 5.0, 0.0);
    const Mask hull = convex_hull_mask(dst, {}, 64, 64);
    double worst = 0.0;
    double outside = 0.0;
    for (std::size_t y = 0; y < 64; ++y) {
        for (std::size_t x = 0; x < 64; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                if (hull(static_cast<long>(y), static_cast<long>(x)) > 0.5) {
                    worst = std::max(worst, std::abs(out.at(y, x, c) - expected.at(y, x, c)));
                } else {
                    outside = std::max(outside, std::abs(out.at(y, x, c)));
                }
            }
        }
    }
    CHECK(worst < 1e-9);
    CHECK(outside == 0.0);
}

TEST_CASE("checkerboard round trip")
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto fixture = oracle::checkerboard_fixture(seed);
        const double psnr = oracle::round_trip_psnr(fixture);
        INFO("seed " << seed << " psnr " << psnr);
        CHECK(psnr > 25.0);
    }
}

TEST_CASE("collapsed source triangle is reported and filled")
{
    Rng rng(3);
    const Image img = random_image(rng, 32, 32);
    std::vector<Point> dst{{8, 8}, {24, 8}, {16, 24}, {16, 14}};
    std::vector<Point> src = dst;
    src[3] = src[0]; // every dst triangle using both 0 and 3 collapses
    const auto boundary = boundary_points(32, 32);
    dst.insert(dst.end(), boundary.begin(), boundary.end());
    src.insert(src.end(), boundary.begin(), boundary.end());
    WarpReport report;
    const Image out = warp_piecewise_affine(img, src, dst, &report);
    CHECK_FALSE(report.degenerate_triangles.empty());
    CHECK(std::all_of(out.data.begin(), out.data.end(), [](double v) { return std::isfinite(v); }));
}

TEST_CASE("convex hull mask")
{
    const std::size_t h = 40;
    const std::size_t w = 50;
    const Mask full = convex_hull_mask({{0, 0}, {49, 0}, {49, 39}, {0, 39}}, {}, h, w);
    CHECK(full.sum() == doctest::Approx(static_cast<double>(h * w)));

    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Point a(rng.uniform(0, 49), rng.uniform(0, 39));
        const Point b(rng.uniform(0, 49), rng.uniform(0, 39));
        const Point c(rng.uniform(0, 49), rng.uniform(0, 39));
        if (std::abs(orient2d(a, b, c)) < 20.0) {
            continue;
        }
        const Mask m = convex_hull_mask({a, b, c}, {}, h, w);
        const double expected = static_cast<double>(oracle::triangle_pixel_count(a, b, c, h, w));
        const double perimeter = (a - b).norm() + (b - c).norm() + (c - a).norm();
        CHECK(std::abs(m.sum() - expected) <= perimeter);
        CHECK(std::abs(m.sum() - expected) <= 1.0);
        CHECK(apply_mask(m, m) == m);
    }
    CHECK_THROWS_AS(convex_hull_mask({{0, 0}, {5, 5}}, {}, h, w), InputError);
    CHECK_THROWS_AS(convex_hull_mask({{0, 0}, {5, 5}, {10, 10}}, {}, h, w), InputError);
}

TEST_CASE("forehead extension")
{
    LandmarkSet face(68, Point(30, 40));
    for (std::size_t k = 17; k <= 26; ++k) {
        face[k] = Point(20 + static_cast<double>(k), 20);
    }
    CHECK(forehead_extension(face, 0.0).empty());
    const auto extra = forehead_extension(face, 8.0);
    REQUIRE(extra.size() == 10);
    CHECK(extra[0] == Point(37, 12));

    const LandmarkSet small{{10, 10}, {20, 10}, {15, 30}};
    const auto lifted = forehead_extension(small, 20.0);
    REQUIRE(lifted.size() == 2);
    CHECK(lifted[0] == Point(10, 0));
}

TEST_CASE("paste composite")
{
    Rng rng(9);
    const Image bg = random_image(rng, 24, 24);
    const Image patch = random_image(rng, 24, 24);
    const Mask ones = Mask::Ones(24, 24);
    const Mask zeros = Mask::Zero(24, 24);
    CHECK(paste_composite(bg, patch, ones, 0.0) == patch);
    CHECK(paste_composite(bg, patch, zeros, 3.0) == bg);

    Mask half = Mask::Zero(24, 24);
    half.leftCols(12).setOnes();
    const Image hard = paste_composite(bg, patch, half, 0.0);
    for (std::size_t y = 0; y < 24; ++y) {
        for (std::size_t x = 0; x < 24; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(hard.at(y, x, c) == (x < 12 ? patch.at(y, x, c) : bg.at(y, x, c)));
            }
        }
    }

    const Image black(24, 24, 3, 0.0);
    const Image white(24, 24, 3, 1.0);
    const Image soft = paste_composite(black, white, half, 2.0);
    const double v = soft.at(12, 12, 0);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(v == doctest::Approx(oracle::blurred_mask_at(half, 2.0, 12, 12)).epsilon(1e-12));

    CHECK_THROWS_AS(paste_composite(bg, Image(23, 24), ones, 0.0), ShapeError);
    CHECK_THROWS_AS(paste_composite(bg, patch, Mask::Ones(23, 24), 0.0), ShapeError);
    CHECK_THROWS_AS(paste_composite(bg, patch, ones, -1.0), InputError);
}

TEST_CASE("resize bilinear")
{
    Rng rng(4);
    const Image img = random_image(rng, 10, 12);
    CHECK(max_abs_diff(resize_bilinear(img, 10, 12), img) == 0.0);

    const Image flat(7, 9, 3, 0.37);
    const Image big = resize_bilinear(flat, 20, 5);
    for (double v : big.data) {
        CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
    }

    Image tiny(2, 2, 1);
    tiny.data = {0.0, 1.0, 2.0, 3.0};
    const Image up = resize_bilinear(tiny, 4, 4);
    CHECK(up.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(up.at(0, 3, 0) == doctest::Approx(1.0));
    CHECK(up.at(3, 0, 0) == doctest::Approx(2.0));
    CHECK(up.at(3, 3, 0) == doctest::Approx(3.0));
    CHECK(up.at(1, 1, 0) == doctest::Approx(1.0));  // (1/3, 1/3) -> 1/3 + 2/3
    CHECK_THROWS_AS(resize_bilinear(img, 0, 4), InputError);
}

TEST_CASE("landmark csv")
{
    const auto path = temp_path("lm.csv");
    const LandmarkSet pts{{1.25, 2.5}, {100.0 / 3.0, 7.0}};
    write_landmarks_csv(path, pts);
    CHECK(read_landmarks_csv(path) == pts);

    {
        std::ofstream f(path);
        f << "index,x,y\n0,1,2\n2,3,4\n";
    }
    CHECK_THROWS_AS(read_landmarks_csv(path), InputError);
    {
        std::ofstream f(path);
        f << "x,y\n1,2\n";
    }
    CHECK_THROWS_AS(read_landmarks_csv(path), InputError);
    {
        std::ofstream f(path);
        f << "index,x,y\n1,5,6\n0,3,4\n";
    }
    CHECK(read_landmarks_csv(path) == LandmarkSet{{3, 4}, {5, 6}});
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_landmarks_csv(path), InputError);
}

TEST_CASE("png round trip")
{
    Rng rng(12);
    const Image img = quantize_8bit(random_image(rng, 9, 13));
    const auto path = temp_path("img.png");
    write_png(path, img);
    CHECK(read_png(path) == img);

    Mask m = Mask::Zero(9, 13);
    m.topRows(4).setOnes();
    write_mask_png(path, m);
    CHECK(read_mask_png(path) == m);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_png(path), InputError);
}
