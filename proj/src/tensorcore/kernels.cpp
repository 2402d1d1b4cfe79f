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

#include "kernels.hpp"

#include "morphgen/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morphgen::tc::detail {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AxisSplit {
    std::size_t outer = 1;
    std::size_t extent = 1;
    std::size_t inner = 1;
};

AxisSplit split(const Shape& shape, std::size_t axis)
{
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) {
        s.outer *= shape[i];
    }
    s.extent = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) {
        s.inner *= shape[i];
    }
    return s;
}

// Leading count and the two trailing extents of a [..., H, W] tensor.
struct Planes {
    std::size_t count = 1;
    std::size_t height = 1;
    std::size_t width = 1;
};

Planes planes(const Shape& shape)
{
    Planes p;
    p.height = shape[shape.size() - 2];
    p.width = shape[shape.size() - 1];
    for (std::size_t i = 0; i + 2 < shape.size(); ++i) {
        p.count *= shape[i];
    }
    return p;
}

// Maps each broadcast output element to its source element.
std::vector<std::size_t> broadcast_index(const Shape& in, const Shape& out)
{
    const std::size_t rank = out.size();
    Shape padded(rank, 1);
    std::copy(in.begin(), in.end(), padded.begin() + static_cast<std::ptrdiff_t>(rank - in.size()));
    std::vector<std::size_t> in_stride(rank, 0);
    std::size_t stride = 1;
    for (std::size_t d = rank; d-- > 0;) {
        in_stride[d] = padded[d] == 1 ? 0 : stride;
        stride *= padded[d];
    }
    const std::size_t n = element_count(out);
    std::vector<std::size_t> index(n);
    std::vector<std::size_t> counter(rank, 0);
    std::size_t src = 0;
    for (std::size_t i = 0; i < n; ++i) {
        index[i] = src;
        for (std::size_t d = rank; d-- > 0;) {
            ++counter[d];
            src += in_stride[d];
            if (counter[d] < out[d]) {
                break;
            }
            src -= in_stride[d] * counter[d];
            counter[d] = 0;
        }
    }
    return index;
}

struct ResizeTaps {
    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;
    std::vector<double> frac;
};

ResizeTaps resize_taps(std::size_t in, std::size_t out)
{
    ResizeTaps taps;
    taps.lo.resize(out);
    taps.hi.resize(out);
    taps.frac.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
        const double src = out == 1 ? 0.5 * static_cast<double>(in - 1)
                                    : static_cast<double>(o) * static_cast<double>(in - 1) /
                                          static_cast<double>(out - 1);
        auto lo = static_cast<std::size_t>(std::floor(src));
        lo = std::min(lo, in - 1);
        taps.lo[o] = lo;
        taps.hi[o] = std::min(lo + 1, in - 1);
        taps.frac[o] = src - static_cast<double>(lo);
    }
    return taps;
}

// [C_in, H, W] -> [C_in * k * k, H * W] with zero padding k / 2.
RowMatrix im2col(const Tensor& x, std::size_t k)
{
    const std::size_t channels = x.dim(0);
    const std::size_t height = x.dim(1);
    const std::size_t width = x.dim(2);
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(channels * k * k),
                                     static_cast<Eigen::Index>(height * width));
    for (std::size_t c = 0; c < channels; ++c) {
        const double* plane = x.data().data() + c * height * width;
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                const auto row = static_cast<Eigen::Index>((c * k + ky) * k + kx);
                double* dst = cols.row(row).data();
                for (std::size_t y = 0; y < height; ++y) {
                    const auto sy = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(ky) - pad;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(height)) {
                        continue;
                    }
                    for (std::size_t xx = 0; xx < width; ++xx) {
                        const auto sx = static_cast<std::ptrdiff_t>(xx) + static_cast<std::ptrdiff_t>(kx) - pad;
                        if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(width)) {
                            continue;
                        }
                        dst[y * width + xx] = plane[static_cast<std::size_t>(sy) * width + static_cast<std::size_t>(sx)];
                    }
                }
            }
        }
    }
    return cols;
}

void col2im_add(const RowMatrix& cols, std::size_t k, Tensor& dx)
{
    const std::size_t channels = dx.dim(0);
    const std::size_t height = dx.dim(1);
    const std::size_t width = dx.dim(2);
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    for (std::size_t c = 0; c < channels; ++c) {
        double* plane = dx.data().data() + c * height * width;
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                const auto row = static_cast<Eigen::Index>((c * k + ky) * k + kx);
                const double* src = cols.row(row).data();
                for (std::size_t y = 0; y < height; ++y) {
                    const auto sy = static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(ky) - pad;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(height)) {
                        continue;
                    }
                    for (std::size_t xx = 0; xx < width; ++xx) {
                        const auto sx = static_cast<std::ptrdiff_t>(xx) + static_cast<std::ptrdiff_t>(kx) - pad;
                        if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(width)) {
                            continue;
                        }
                        plane[static_cast<std::size_t>(sy) * width + static_cast<std::size_t>(sx)] += src[y * width + xx];
                    }
                }
            }
        }
    }
}

template <typename F>
Tensor map_unary(const Tensor& x, F f)
{
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = f(x[i]);
    }
    return y;
}

} // namespace

bool differentiable(Op op)
{
    return op != Op::Round;
}

Tensor forward(const Node& node, std::span<const Tensor* const> in)
{
    switch (node.op) {
    case Op::Leaf:
    case Op::Constant:
        throw InputError("forward called on a source node");
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
        const Tensor& a = *in[0];
        const Tensor& b = *in[1];
        Tensor y(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) {
            switch (node.op) {
            case Op::Add: y[i] = a[i] + b[i]; break;
            case Op::Sub: y[i] = a[i] - b[i]; break;
            case Op::Mul: y[i] = a[i] * b[i]; break;
            default: y[i] = a[i] / b[i]; break;
            }
        }
        return y;
    }
    case Op::Scale:
        return map_unary(*in[0], [&](double v) { return v * node.a; });
    case Op::Offset:
        return map_unary(*in[0], [&](double v) { return v + node.a; });
    case Op::Square:
        return map_unary(*in[0], [](double v) { return v * v; });
    case Op::Sqrt:
        return map_unary(*in[0], [](double v) { return std::sqrt(v); });
    case Op::Log:
        return map_unary(*in[0], [](double v) { return std::log(v); });
    case Op::Abs:
        return map_unary(*in[0], [](double v) { return std::abs(v); });
    case Op::LeakyRelu:
        return map_unary(*in[0], [&](double v) { return v >= 0.0 ? v : node.a * v; });
    case Op::Clamp:
        return map_unary(*in[0], [&](double v) { return std::clamp(v, node.a, node.b); });
    case Op::Round:
        return map_unary(*in[0], [&](double v) { return std::round(v * node.a) / node.a; });
    case Op::Sum:
        return Tensor::scalar(in[0]->as_vector().sum());
    case Op::Mean:
        return Tensor::scalar(in[0]->as_vector().mean());
    case Op::SumAxis: {
        const Tensor& x = *in[0];
        const AxisSplit s = split(x.shape(), static_cast<std::size_t>(node.axis));
        Tensor y(node.shape);
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t i = 0; i < s.extent; ++i) {
                for (std::size_t j = 0; j < s.inner; ++j) {
                    y[o * s.inner + j] += x[(o * s.extent + i) * s.inner + j];
                }
            }
        }
        return y;
    }
    case Op::L1Norm:
        return Tensor::scalar(in[0]->as_vector().lpNorm<1>());
    case Op::L2Norm:
        return Tensor::scalar(in[0]->as_vector().norm());
    case Op::Reshape:
        return in[0]->reshaped(node.shape);
    case Op::Broadcast: {
        const auto index = broadcast_index(in[0]->shape(), node.shape);
        Tensor y(node.shape);
        for (std::size_t i = 0; i < index.size(); ++i) {
            y[i] = (*in[0])[index[i]];
        }
        return y;
    }
    case Op::Roll: {
        const Tensor& x = *in[0];
        const AxisSplit s = split(x.shape(), static_cast<std::size_t>(node.axis));
        const auto n = static_cast<std::int64_t>(s.extent);
        Tensor y(x.shape());
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::int64_t i = 0; i < n; ++i) {
                const std::int64_t src = ((i - node.shift) % n + n) % n;
                for (std::size_t j = 0; j < s.inner; ++j) {
                    y[(o * s.extent + static_cast<std::size_t>(i)) * s.inner + j] =
                        x[(o * s.extent + static_cast<std::size_t>(src)) * s.inner + j];
                }
            }
        }
        return y;
    }
    case Op::Select: {
        const Tensor& x = *in[0];
        const std::size_t block = element_count(node.shape);
        const auto first = x.storage().begin() + static_cast<std::ptrdiff_t>(node.axis * block);
        return Tensor(node.shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(block)));
    }
    case Op::Linear: {
        const Tensor& x = *in[0];
        const Tensor& w = *in[1];
        const std::size_t n_out = w.dim(0);
        const std::size_t n_in = w.dim(1);
        const std::size_t batch = x.size() / n_in;
        Tensor y(node.shape);
        auto ym = y.as_matrix(batch, n_out);
        ym.noalias() = x.as_matrix(batch, n_in) * w.as_matrix(n_out, n_in).transpose();
        if (in.size() > 2) {
            ym.rowwise() += in[2]->as_vector().transpose();
        }
        return y;
    }
    case Op::Conv2d: {
        const Tensor& x = *in[0];
        const Tensor& w = *in[1];
        const std::size_t k = w.dim(2);
        const std::size_t c_out = w.dim(0);
        const std::size_t hw = x.dim(1) * x.dim(2);
        const RowMatrix cols = im2col(x, k);
        Tensor y(node.shape);
        auto ym = y.as_matrix(c_out, hw);
        ym.noalias() = w.as_matrix(c_out, w.size() / c_out) * cols;
        if (in.size() > 2) {
            ym.colwise() += in[2]->as_vector();
        }
        return y;
    }
    case Op::Modulate: {
        const Tensor& w = *in[0];
        const Tensor& s = *in[1];
        const std::size_t c_out = w.dim(0);
        const std::size_t c_in = w.dim(1);
        const std::size_t taps = w.dim(2) * w.dim(3);
        Tensor y(w.shape());
        for (std::size_t o = 0; o < c_out; ++o) {
            double sq = 0.0;
            for (std::size_t i = 0; i < c_in; ++i) {
                for (std::size_t q = 0; q < taps; ++q) {
                    const std::size_t idx = (o * c_in + i) * taps + q;
                    y[idx] = w[idx] * s[i];
                    sq += y[idx] * y[idx];
                }
            }
            if (node.flag) {
                const double d = 1.0 / std::sqrt(sq + node.a);
                for (std::size_t idx = o * c_in * taps; idx < (o + 1) * c_in * taps; ++idx) {
                    y[idx] *= d;
                }
            }
        }
        return y;
    }
    case Op::Resize: {
        const Tensor& x = *in[0];
        const Planes p = planes(x.shape());
        const std::size_t out_h = node.shape[node.shape.size() - 2];
        const std::size_t out_w = node.shape[node.shape.size() - 1];
        const ResizeTaps ty = resize_taps(p.height, out_h);
        const ResizeTaps tx = resize_taps(p.width, out_w);
        Tensor y(node.shape);
        for (std::size_t c = 0; c < p.count; ++c) {
            const double* src = x.data().data() + c * p.height * p.width;
            double* dst = y.data().data() + c * out_h * out_w;
            for (std::size_t oy = 0; oy < out_h; ++oy) {
                const double fy = ty.frac[oy];
                const double* r0 = src + ty.lo[oy] * p.width;
                const double* r1 = src + ty.hi[oy] * p.width;
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    const double fx = tx.frac[ox];
                    const double top = r0[tx.lo[ox]] * (1.0 - fx) + r0[tx.hi[ox]] * fx;
                    const double bottom = r1[tx.lo[ox]] * (1.0 - fx) + r1[tx.hi[ox]] * fx;
                    dst[oy * out_w + ox] = top * (1.0 - fy) + bottom * fy;
                }
            }
        }
        return y;
    }
    case Op::AvgPool2x: {
        const Tensor& x = *in[0];
        const Planes p = planes(x.shape());
        const std::size_t oh = p.height / 2;
        const std::size_t ow = p.width / 2;
        Tensor y(node.shape);
        for (std::size_t c = 0; c < p.count; ++c) {
            const double* src = x.data().data() + c * p.height * p.width;
            double* dst = y.data().data() + c * oh * ow;
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    const std::size_t base = 2 * oy * p.width + 2 * ox;
                    dst[oy * ow + ox] =
                        0.25 * (src[base] + src[base + 1] + src[base + p.width] + src[base + p.width + 1]);
                }
            }
        }
        return y;
    }
    case Op::SoftmaxSpatial: {
        const Tensor& x = *in[0];
        const Planes p = planes(x.shape());
        const std::size_t n = p.height * p.width;
        Tensor y(x.shape());
        for (std::size_t c = 0; c < p.count; ++c) {
            const double* src = x.data().data() + c * n;
            double* dst = y.data().data() + c * n;
            const double peak = *std::max_element(src, src + n);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dst[i] = std::exp(src[i] - peak);
                total += dst[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                dst[i] /= total;
            }
        }
        return y;
    }
    }
    throw InputError("unknown op");
}

void backward(const Node& node, std::span<const Tensor* const> in, const Tensor& out, const Tensor& g,
              std::span<Tensor* const> grads)
{
    auto each = [&](std::size_t k, auto&& f) {
        if (grads[k] != nullptr) {
            Tensor& dx = *grads[k];
            for (std::size_t i = 0; i < dx.size(); ++i) {
                dx[i] += f(i);
            }
        }
    };

    switch (node.op) {
    case Op::Leaf:
    case Op::Constant:
        return;
    case Op::Add:
        each(0, [&](std::size_t i) { return g[i]; });
        each(1, [&](std::size_t i) { return g[i]; });
        return;
    case Op::Sub:
        each(0, [&](std::size_t i) { return g[i]; });
        each(1, [&](std::size_t i) { return -g[i]; });
        return;
    case Op::Mul:
        each(0, [&](std::size_t i) { return g[i] * (*in[1])[i]; });
        each(1, [&](std::size_t i) { return g[i] * (*in[0])[i]; });
        return;
    case Op::Div:
        each(0, [&](std::size_t i) { return g[i] / (*in[1])[i]; });
        each(1, [&](std::size_t i) { return -g[i] * out[i] / (*in[1])[i]; });
        return;
    case Op::Scale:
        each(0, [&](std::size_t i) { return g[i] * node.a; });
        return;
    case Op::Offset:
        each(0, [&](std::size_t i) { return g[i]; });
        return;
    case Op::Square:
        each(0, [&](std::size_t i) { return 2.0 * (*in[0])[i] * g[i]; });
        return;
    case Op::Sqrt:
        each(0, [&](std::size_t i) { return out[i] > 0.0 ? 0.5 * g[i] / out[i] : 0.0; });
        return;
    case Op::Log:
        each(0, [&](std::size_t i) { return g[i] / (*in[0])[i]; });
        return;
    case Op::Abs:
        each(0, [&](std::size_t i) {
            const double v = (*in[0])[i];
            return v > 0.0 ? g[i] : (v < 0.0 ? -g[i] : 0.0);
        });
        return;
    case Op::LeakyRelu:
        each(0, [&](std::size_t i) { return (*in[0])[i] >= 0.0 ? g[i] : node.a * g[i]; });
        return;
    case Op::Clamp:
        each(0, [&](std::size_t i) {
            const double v = (*in[0])[i];
            return (v > node.a && v < node.b) ? g[i] : 0.0;
        });
        return;
    case Op::Round:
        throw InputError("round is not differentiable");
    case Op::Sum:
        each(0, [&](std::size_t) { return g[0]; });
        return;
    case Op::Mean: {
        const double scale = g[0] / static_cast<double>(in[0]->size());
        each(0, [&](std::size_t) { return scale; });
        return;
    }
    case Op::SumAxis: {
        const AxisSplit s = split(in[0]->shape(), static_cast<std::size_t>(node.axis));
        each(0, [&](std::size_t idx) {
            const std::size_t j = idx % s.inner;
            const std::size_t o = idx / (s.inner * s.extent);
            return g[o * s.inner + j];
        });
        return;
    }
    case Op::L1Norm:
        each(0, [&](std::size_t i) {
            const double v = (*in[0])[i];
            return v > 0.0 ? g[0] : (v < 0.0 ? -g[0] : 0.0);
        });
        return;
    case Op::L2Norm: {
        const double norm = out[0];
        each(0, [&](std::size_t i) { return norm > 0.0 ? g[0] * (*in[0])[i] / norm : 0.0; });
        return;
    }
    case Op::Reshape:
        each(0, [&](std::size_t i) { return g[i]; });
        return;
    case Op::Broadcast: {
        if (grads[0] != nullptr) {
            const auto index = broadcast_index(in[0]->shape(), node.shape);
            for (std::size_t i = 0; i < index.size(); ++i) {
                (*grads[0])[index[i]] += g[i];
            }
        }
        return;
    }
    case Op::Roll: {
        const AxisSplit s = split(in[0]->shape(), static_cast<std::size_t>(node.axis));
        const auto n = static_cast<std::int64_t>(s.extent);
        each(0, [&](std::size_t idx) {
            const std::size_t j = idx % s.inner;
            const auto i = static_cast<std::int64_t>((idx / s.inner) % s.extent);
            const std::size_t o = idx / (s.inner * s.extent);
            const std::int64_t dst = ((i + node.shift) % n + n) % n;
            return g[(o * s.extent + static_cast<std::size_t>(dst)) * s.inner + j];
        });
        return;
    }
    case Op::Select: {
        if (grads[0] != nullptr) {
            const std::size_t block = g.size();
            for (std::size_t i = 0; i < block; ++i) {
                (*grads[0])[node.axis * block + i] += g[i];
            }
        }
        return;
    }
    case Op::Linear: {
        const Tensor& x = *in[0];
        const Tensor& w = *in[1];
        const std::size_t n_out = w.dim(0);
        const std::size_t n_in = w.dim(1);
        const std::size_t batch = x.size() / n_in;
        const auto gm = g.as_matrix(batch, n_out);
        if (grads[0] != nullptr) {
            grads[0]->as_matrix(batch, n_in).noalias() += gm * w.as_matrix(n_out, n_in);
        }
        if (grads[1] != nullptr) {
            grads[1]->as_matrix(n_out, n_in).noalias() += gm.transpose() * x.as_matrix(batch, n_in);
        }
        if (grads.size() > 2 && grads[2] != nullptr) {
            grads[2]->as_vector() += gm.colwise().sum().transpose();
        }
        return;
    }
    case Op::Conv2d: {
        const Tensor& x = *in[0];
        const Tensor& w = *in[1];
        const std::size_t k = w.dim(2);
        const std::size_t c_out = w.dim(0);
        const std::size_t fan = w.size() / c_out;
        const std::size_t hw = x.dim(1) * x.dim(2);
        const auto gm = g.as_matrix(c_out, hw);
        if (grads[1] != nullptr) {
            const RowMatrix cols = im2col(x, k);
            grads[1]->as_matrix(c_out, fan).noalias() += gm * cols.transpose();
        }
        if (grads[0] != nullptr) {
            const RowMatrix dcols = w.as_matrix(c_out, fan).transpose() * gm;
            col2im_add(dcols, k, *grads[0]);
        }
        if (grads.size() > 2 && grads[2] != nullptr) {
            grads[2]->as_vector() += gm.rowwise().sum();
        }
        return;
    }
    case Op::Modulate: {
        const Tensor& w = *in[0];
        const Tensor& s = *in[1];
        const std::size_t c_out = w.dim(0);
        const std::size_t c_in = w.dim(1);
        const std::size_t taps = w.dim(2) * w.dim(3);
        // Gradient with respect to the scaled (pre-demodulation) weights.
        std::vector<double> dscaled(w.size());
        for (std::size_t o = 0; o < c_out; ++o) {
            const std::size_t begin = o * c_in * taps;
            const std::size_t end = begin + c_in * taps;
            if (!node.flag) {
                for (std::size_t idx = begin; idx < end; ++idx) {
                    dscaled[idx] = g[idx];
                }
                continue;
            }
            double sq = 0.0;
            double dot = 0.0;
            for (std::size_t idx = begin; idx < end; ++idx) {
                const double scaled = w[idx] * s[(idx / taps) % c_in];
                sq += scaled * scaled;
                dot += g[idx] * scaled;
            }
            const double d = 1.0 / std::sqrt(sq + node.a);
            for (std::size_t idx = begin; idx < end; ++idx) {
                const double scaled = w[idx] * s[(idx / taps) % c_in];
                dscaled[idx] = d * g[idx] - d * d * d * scaled * dot;
            }
        }
        if (grads[0] != nullptr) {
            for (std::size_t idx = 0; idx < w.size(); ++idx) {
                (*grads[0])[idx] += dscaled[idx] * s[(idx / taps) % c_in];
            }
        }
        if (grads[1] != nullptr) {
            for (std::size_t idx = 0; idx < w.size(); ++idx) {
                (*grads[1])[(idx / taps) % c_in] += dscaled[idx] * w[idx];
            }
        }
        return;
    }
    case Op::Resize: {
        if (grads[0] == nullptr) {
            return;
        }
        const Planes p = planes(in[0]->shape());
        const std::size_t out_h = node.shape[node.shape.size() - 2];
        const std::size_t out_w = node.shape[node.shape.size() - 1];
        const ResizeTaps ty = resize_taps(p.height, out_h);
        const ResizeTaps tx = resize_taps(p.width, out_w);
        for (std::size_t c = 0; c < p.count; ++c) {
            double* dst = grads[0]->data().data() + c * p.height * p.width;
            const double* src = g.data().data() + c * out_h * out_w;
            for (std::size_t oy = 0; oy < out_h; ++oy) {
                const double fy = ty.frac[oy];
                double* r0 = dst + ty.lo[oy] * p.width;
                double* r1 = dst + ty.hi[oy] * p.width;
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    const double fx = tx.frac[ox];
                    const double v = src[oy * out_w + ox];
                    r0[tx.lo[ox]] += v * (1.0 - fy) * (1.0 - fx);
                    r0[tx.hi[ox]] += v * (1.0 - fy) * fx;
                    r1[tx.lo[ox]] += v * fy * (1.0 - fx);
                    r1[tx.hi[ox]] += v * fy * fx;
                }
            }
        }
        return;
    }
    case Op::AvgPool2x: {
        const Planes p = planes(in[0]->shape());
        const std::size_t ow = p.width / 2;
        const std::size_t oh = p.height / 2;
        each(0, [&](std::size_t idx) {
            const std::size_t c = idx / (p.height * p.width);
            const std::size_t r = idx % (p.height * p.width);
            const std::size_t y = r / p.width;
            const std::size_t x = r % p.width;
            return 0.25 * g[c * oh * ow + (y / 2) * ow + x / 2];
        });
        return;
    }
    case Op::SoftmaxSpatial: {
        if (grads[0] == nullptr) {
            return;
        }
        const Planes p = planes(out.shape());
        const std::size_t n = p.height * p.width;
        for (std::size_t c = 0; c < p.count; ++c) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dot += g[c * n + i] * out[c * n + i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                (*grads[0])[c * n + i] += out[c * n + i] * (g[c * n + i] - dot);
            }
        }
        return;
    }
    }
}

} // namespace morphgen::tc::detail
