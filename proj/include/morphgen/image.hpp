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

#include "morphgen/tensor.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <vector>

namespace morphgen {

/// H x W x C intensities in [0, 1], row-major, origin top-left.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 3;
    std::vector<double> data;

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c = 3, double fill = 0.0)
        : height(h), width(w), channels(c), data(h * w * c, fill)
    {
    }

    double& at(std::size_t y, std::size_t x, std::size_t c) { return data[(y * width + x) * channels + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c) const { return data[(y * width + x) * channels + c]; }

    bool same_shape(const Image& other) const
    {
        return height == other.height && width == other.width && channels == other.channels;
    }

    friend bool operator==(const Image&, const Image&) = default;
};

/// H x W weights in [0, 1].
using Mask = Eigen::MatrixXd;

/// Image -> [C, H, W] tensor and back.
tc::Tensor to_chw(const Image& image);
Image from_chw(const tc::Tensor& tensor);

/// Rounds to 8-bit levels, which is what a PNG write/read cycle yields.
Image quantize_8bit(Image image);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

double max_abs_diff(const Image& a, const Image& b);

} // namespace morphgen
