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

#include "morphgen/geometry.hpp"

#include "morphgen/error.hpp"
#include "morphgen/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace morphgen::geom {
namespace {

double extent_of(const std::vector<Point>& pts)
{
    Point lo = pts.front();
    Point hi = pts.front();
    for (const Point& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return std::max((hi - lo).maxCoeff(), 1e-300);
}

int sign_with_tolerance(double v, double tol)
{
    return v > tol ? 1 : (v < -tol ? -1 : 0);
}

bool properly_cross(const Point& a, const Point& b, const Point& c, const Point& d, double tol)
{
    const int o1 = sign_with_tolerance(orient2d(a, b, c), tol);
    const int o2 = sign_with_tolerance(orient2d(a, b, d), tol);
    const int o3 = sign_with_tolerance(orient2d(c, d, a), tol);
    const int o4 = sign_with_tolerance(orient2d(c, d, b), tol);
    return o1 * o2 < 0 && o3 * o4 < 0;
}

bool strictly_inside(const Point& p, const Point& a, const Point& b, const Point& c, double tol)
{
    const double s = orient2d(a, b, c) > 0 ? 1.0 : -1.0;
    return s * orient2d(a, b, p) > tol && s * orient2d(b, c, p) > tol && s * orient2d(c, a, p) > tol;
}

bool interiors_overlap(const std::array<Point, 3>& t, const std::array<Point, 3>& u, double tol)
{
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (properly_cross(t[i], t[(i + 1) % 3], u[j], u[(j + 1) % 3], tol)) {
                return true;
            }
        }
    }
    const Point ct = (t[0] + t[1] + t[2]) / 3.0;
    const Point cu = (u[0] + u[1] + u[2]) / 3.0;
    return strictly_inside(ct, u[0], u[1], u[2], tol) || strictly_inside(cu, t[0], t[1], t[2], tol);
}

bool in_circumcircle(const Circle<double>& circle, const Point& p, double eps)
{
    return circle.radius_sq - (p - circle.center).squaredNorm() > eps * circle.radius_sq;
}

std::array<double, 3> bilinear_sample(const Image& image, double x, double y)
{
    std::array<double, 3> out{0.0, 0.0, 0.0};
    const double cx = std::clamp(x, 0.0, static_cast<double>(image.width - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(image.height - 1));
    const auto x0 = static_cast<std::size_t>(std::floor(cx));
    const auto y0 = static_cast<std::size_t>(std::floor(cy));
    const std::size_t x1 = std::min(x0 + 1, image.width - 1);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double fx = cx - static_cast<double>(x0);
    const double fy = cy - static_cast<double>(y0);
    for (std::size_t c = 0; c < std::min<std::size_t>(image.channels, 3); ++c) {
        const double top = image.at(y0, x0, c) * (1 - fx) + image.at(y0, x1, c) * fx;
        const double bottom = image.at(y1, x0, c) * (1 - fx) + image.at(y1, x1, c) * fx;
        out[c] = top * (1 - fy) + bottom * fy;
    }
    return out;
}

} // namespace

LandmarkSet average_landmarks(const LandmarkSet& a, const LandmarkSet& b)
{
    if (a.size() != b.size()) {
        throw InputError("average_landmarks: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                         " landmarks");
    }
    LandmarkSet out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        out[k] = 0.5 * (a[k] + b[k]);
    }
    return out;
}

std::vector<Point> boundary_points(std::size_t height, std::size_t width)
{
    const double w = static_cast<double>(width) - 1.0;
    const double h = static_cast<double>(height) - 1.0;
    return {{0, 0}, {w / 2, 0}, {w, 0}, {w, h / 2}, {w, h}, {w / 2, h}, {0, h}, {0, h / 2}};
}

TriangleMesh delaunay_triangulate(const std::vector<Point>& points)
{
    if (points.size() < 3) {
        throw InputError("delaunay_triangulate needs at least 3 points, got " + std::to_string(points.size()));
    }
    const double extent = extent_of(points);
    const double area_tol = 1e-12 * extent * extent;
    const double dup_tol = 1e-12 * extent;

    std::vector<std::size_t> unique;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const bool dup = std::any_of(unique.begin(), unique.end(), [&](std::size_t j) {
            return (points[i] - points[j]).norm() <= dup_tol;
        });
        if (!dup) {
            unique.push_back(i);
        }
    }

    TriangleMesh mesh;
    mesh.vertices = points;
    std::vector<std::array<Point, 3>> accepted;
    const std::size_t n = unique.size();
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            for (std::size_t c = b + 1; c < n; ++c) {
                const Point& pa = points[unique[a]];
                const Point& pb = points[unique[b]];
                const Point& pc = points[unique[c]];
                if (std::abs(orient2d(pa, pb, pc)) <= area_tol) {
                    continue;
                }
                const Circle<double> circle = circumcircle(pa, pb, pc);
                bool empty = true;
                for (std::size_t q = 0; q < n && empty; ++q) {
                    if (q != a && q != b && q != c && in_circumcircle(circle, points[unique[q]], 1e-9)) {
                        empty = false;
                    }
                }
                if (!empty) {
                    continue;
                }
                const std::array<Point, 3> tri{pa, pb, pc};
                const bool overlaps = std::any_of(accepted.begin(), accepted.end(), [&](const auto& other) {
                    return interiors_overlap(tri, other, area_tol);
                });
                if (!overlaps) {
                    accepted.push_back(tri);
                    mesh.triangles.push_back({unique[a], unique[b], unique[c]});
                }
            }
        }
    }
    if (mesh.triangles.empty()) {
        throw InputError("delaunay_triangulate: all points are collinear");
    }
    return mesh;
}

bool violates_empty_circumcircle(const TriangleMesh& mesh, double eps)
{
    for (const Triangle& t : mesh.triangles) {
        const Circle<double> circle = circumcircle(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        for (std::size_t q = 0; q < mesh.vertices.size(); ++q) {
            if (q != t[0] && q != t[1] && q != t[2] && in_circumcircle(circle, mesh.vertices[q], eps)) {
                return true;
            }
        }
    }
    return false;
}

Image warp_piecewise_affine(const Image& image, const std::vector<Point>& src, const std::vector<Point>& dst,
                            WarpReport* report)
{
    if (src.size() != dst.size()) {
        throw InputError("warp: src has " + std::to_string(src.size()) + " points, dst has " +
                         std::to_string(dst.size()));
    }
    const TriangleMesh mesh = delaunay_triangulate(dst);
    const double extent = extent_of(src);
    const double area_tol = 1e-9 * extent * extent;

    std::vector<bool> valid(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& tri = mesh.triangles[t];
        valid[t] = std::abs(orient2d(src[tri[0]], src[tri[1]], src[tri[2]])) > area_tol;
        if (!valid[t] && report != nullptr) {
            report->degenerate_triangles.push_back(t);
        }
    }
    if (std::none_of(valid.begin(), valid.end(), [](bool v) { return v; })) {
        throw InputError("warp: every source triangle is degenerate");
    }
    auto centroid = [&](std::size_t t) {
        const Triangle& tri = mesh.triangles[t];
        return Point((dst[tri[0]] + dst[tri[1]] + dst[tri[2]]) / 3.0);
    };
    std::vector<std::size_t> mapping(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        mapping[t] = t;
        if (valid[t]) {
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < mesh.triangles.size(); ++u) {
            const double d = (centroid(u) - centroid(t)).squaredNorm();
            if (valid[u] && d < best) {
                best = d;
                mapping[t] = u;
            }
        }
    }

    Image out(image.height, image.width, image.channels, 0.0);
    std::vector<bool> filled(image.height * image.width, false);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& tri = mesh.triangles[t];
        const Point& a = dst[tri[0]];
        const Point& b = dst[tri[1]];
        const Point& c = dst[tri[2]];
        const Triangle& map_tri = mesh.triangles[mapping[t]];
        const auto ylo = static_cast<long>(std::max(0.0, std::ceil(std::min({a.y(), b.y(), c.y()}) - 1e-9)));
        const auto yhi = static_cast<long>(std::min<double>(static_cast<double>(image.height) - 1,
                                                            std::floor(std::max({a.y(), b.y(), c.y()}) + 1e-9)));
        const auto xlo = static_cast<long>(std::max(0.0, std::ceil(std::min({a.x(), b.x(), c.x()}) - 1e-9)));
        const auto xhi = static_cast<long>(std::min<double>(static_cast<double>(image.width) - 1,
                                                            std::floor(std::max({a.x(), b.x(), c.x()}) + 1e-9)));
        for (long y = ylo; y <= yhi; ++y) {
            for (long x = xlo; x <= xhi; ++x) {
                const auto idx = static_cast<std::size_t>(y) * image.width + static_cast<std::size_t>(x);
                if (filled[idx]) {
                    continue;
                }
                const Point p(static_cast<double>(x), static_cast<double>(y));
                const Eigen::Vector3d bc = barycentric(p, a, b, c);
                if (bc.minCoeff() < -1e-9) {
                    continue;
                }
                const Eigen::Vector3d w = mapping[t] == t ? bc
                                                          : barycentric(p, dst[map_tri[0]], dst[map_tri[1]],
                                                                        dst[map_tri[2]]);
                const Point s = w[0] * src[map_tri[0]] + w[1] * src[map_tri[1]] + w[2] * src[map_tri[2]];
                const auto v = bilinear_sample(image, s.x(), s.y());
                for (std::size_t ch = 0; ch < std::min<std::size_t>(image.channels, 3); ++ch) {
                    out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), ch) = v[ch];
                }
                filled[idx] = true;
            }
        }
    }
    return out;
}

std::vector<Point> convex_hull(std::vector<Point> points)
{
    std::sort(points.begin(), points.end(),
              [](const Point& a, const Point& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3) {
        return points;
    }
    std::vector<Point> hull(2 * points.size());
    std::size_t k = 0;
    for (const Point& p : points) {
        while (k >= 2 && orient2d(hull[k - 2], hull[k - 1], p) <= 0) {
            --k;
        }
        hull[k++] = p;
    }
    for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && orient2d(hull[k - 2], hull[k - 1], points[i]) <= 0) {
            --k;
        }
        hull[k++] = points[i];
    }
    hull.resize(k - 1);
    return hull;
}

std::vector<Point> forehead_extension(const LandmarkSet& landmarks, double pixels)
{
    std::vector<Point> extra;
    if (pixels <= 0.0 || landmarks.empty()) {
        return extra;
    }
    auto lift = [&](const Point& p) { return Point(p.x(), std::max(0.0, p.y() - pixels)); };
    if (landmarks.size() == 68) {
        for (std::size_t k = 17; k <= 26; ++k) {
            extra.push_back(lift(landmarks[k]));
        }
        return extra;
    }
    double mean_y = 0.0;
    for (const Point& p : landmarks) {
        mean_y += p.y();
    }
    mean_y /= static_cast<double>(landmarks.size());
    for (const Point& p : landmarks) {
        if (p.y() < mean_y) {
            extra.push_back(lift(p));
        }
    }
    return extra;
}

Mask convex_hull_mask(const LandmarkSet& landmarks, const std::vector<Point>& extra, std::size_t height,
                      std::size_t width)
{
    std::vector<Point> pts = landmarks;
    pts.insert(pts.end(), extra.begin(), extra.end());
    const std::vector<Point> hull = convex_hull(pts);
    if (hull.size() < 3) {
        throw InputError("convex_hull_mask: hull is empty (fewer than 3 non-collinear points)");
    }
    const double tol = 1e-9 * extent_of(hull) * extent_of(hull);
    Mask mask = Mask::Zero(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const Point p(static_cast<double>(x), static_cast<double>(y));
            bool inside = true;
            for (std::size_t i = 0; i < hull.size() && inside; ++i) {
                inside = orient2d(hull[i], hull[(i + 1) % hull.size()], p) >= -tol;
            }
            mask(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) = inside ? 1.0 : 0.0;
        }
    }
    return mask;
}

Mask apply_mask(const Mask& a, const Mask& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("apply_mask: mask shapes differ");
    }
    return a.cwiseProduct(b);
}

Image apply_mask(const Image& image, const Mask& mask)
{
    if (static_cast<std::size_t>(mask.rows()) != image.height || static_cast<std::size_t>(mask.cols()) != image.width) {
        throw ShapeError("apply_mask: mask does not match image");
    }
    Image out = image;
    for (std::size_t y = 0; y < image.height; ++y) {
        for (std::size_t x = 0; x < image.width; ++x) {
            for (std::size_t c = 0; c < image.channels; ++c) {
                out.at(y, x, c) *= mask(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
            }
        }
    }
    return out;
}

Mask gaussian_blur(const Mask& mask, double sigma)
{
    if (sigma < 0.0) {
        throw InputError("gaussian_blur: sigma must be non-negative");
    }
    if (sigma == 0.0) {
        return mask;
    }
    const auto radius = static_cast<Eigen::Index>(std::ceil(3.0 * sigma));
    Eigen::VectorXd kernel(2 * radius + 1);
    for (Eigen::Index i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    }
    kernel /= kernel.sum();
    const Eigen::Index rows = mask.rows();
    const Eigen::Index cols = mask.cols();
    Mask tmp = Mask::Zero(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            double acc = 0.0;
            for (Eigen::Index i = -radius; i <= radius; ++i) {
                acc += kernel[i + radius] * mask(y, std::clamp<Eigen::Index>(x + i, 0, cols - 1));
            }
            tmp(y, x) = acc;
        }
    }
    Mask out = Mask::Zero(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            double acc = 0.0;
            for (Eigen::Index i = -radius; i <= radius; ++i) {
                acc += kernel[i + radius] * tmp(std::clamp<Eigen::Index>(y + i, 0, rows - 1), x);
            }
            out(y, x) = acc;
        }
    }
    return out;
}

Image paste_composite(const Image& background, const Image& patch, const Mask& mask, double feather_px)
{
    if (!background.same_shape(patch)) {
        throw ShapeError("paste_composite: background and patch shapes differ");
    }
    if (static_cast<std::size_t>(mask.rows()) != patch.height || static_cast<std::size_t>(mask.cols()) != patch.width) {
        throw ShapeError("paste_composite: mask does not match image size");
    }
    if (feather_px < 0.0) {
        throw InputError("paste_composite: feather_px must be non-negative");
    }
    const Mask soft = gaussian_blur(mask, feather_px);
    Image out = background;
    for (std::size_t y = 0; y < patch.height; ++y) {
        for (std::size_t x = 0; x < patch.width; ++x) {
            const double m = soft(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
            for (std::size_t c = 0; c < patch.channels; ++c) {
                out.at(y, x, c) = m * patch.at(y, x, c) + (1.0 - m) * background.at(y, x, c);
            }
        }
    }
    return out;
}

Image resize_bilinear(const Image& image, std::size_t height, std::size_t width)
{
    if (height == 0 || width == 0) {
        throw InputError("resize_bilinear: zero target dimension");
    }
    tc::Graph g;
    const tc::NodeId x = g.constant(to_chw(image));
    const tc::NodeId y = g.resize_bilinear(x, height, width);
    return from_chw(tc::evaluate(g, tc::Bindings{}, y)[y]);
}

LandmarkSet read_landmarks_csv(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) {
        throw InputError("cannot open landmark file " + path.string());
    }
    std::string line;
    std::getline(f, line);
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "index,x,y") {
        throw InputError(path.string() + ": expected header 'index,x,y'");
    }
    std::map<long, Point> rows;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::istringstream is(line);
        long index = 0;
        double x = 0.0;
        double y = 0.0;
        char c1 = 0;
        char c2 = 0;
        if (!(is >> index >> c1 >> x >> c2 >> y) || c1 != ',' || c2 != ',' || !std::isfinite(x) || !std::isfinite(y)) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": malformed landmark row");
        }
        if (!rows.emplace(index, Point(x, y)).second) {
            throw InputError(path.string() + ": duplicate landmark index " + std::to_string(index));
        }
    }
    if (rows.empty()) {
        throw InputError(path.string() + ": no landmark rows");
    }
    const long first = rows.begin()->first;
    if (first != 0 && first != 1) {
        throw InputError(path.string() + ": landmark indices must start at 0 or 1");
    }
    LandmarkSet out;
    long expected = first;
    for (const auto& [index, p] : rows) {
        if (index != expected++) {
            throw InputError(path.string() + ": missing landmark row " + std::to_string(expected - 1));
        }
        out.push_back(p);
    }
    return out;
}

void write_landmarks_csv(const std::filesystem::path& path, const LandmarkSet& landmarks)
{
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw InputError("cannot write " + path.string());
    }
    f << "index,x,y\n";
    char buf[96];
    for (std::size_t k = 0; k < landmarks.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", k, landmarks[k].x(), landmarks[k].y());
        f << buf;
    }
}

} // namespace morphgen::geom
