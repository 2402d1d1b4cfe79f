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

#include "morphgen/image.hpp"

#include "morphgen/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace morphgen {

tc::Tensor to_chw(const Image& image)
{
    tc::Tensor t({image.channels, image.height, image.width});
    for (std::size_t c = 0; c < image.channels; ++c) {
        for (std::size_t y = 0; y < image.height; ++y) {
            for (std::size_t x = 0; x < image.width; ++x) {
                t[(c * image.height + y) * image.width + x] = image.at(y, x, c);
            }
        }
    }
    return t;
}

Image from_chw(const tc::Tensor& t)
{
    if (t.rank() != 3) {
        throw ShapeError("from_chw expects [C, H, W], got " + tc::to_string(t.shape()));
    }
    Image image(t.dim(1), t.dim(2), t.dim(0));
    for (std::size_t c = 0; c < image.channels; ++c) {
        for (std::size_t y = 0; y < image.height; ++y) {
            for (std::size_t x = 0; x < image.width; ++x) {
                image.at(y, x, c) = t[(c * image.height + y) * image.width + x];
            }
        }
    }
    return image;
}

namespace {

std::uint8_t to_byte(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace

Image quantize_8bit(Image image)
{
    for (double& v : image.data) {
        v = to_byte(v) / 255.0;
    }
    return image;
}

Image read_png(const std::filesystem::path& path)
{
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw InputError("cannot read PNG " + path.string() + ": " + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&png);
        throw InputError("cannot decode PNG " + path.string() + ": " + png.message);
    }
    Image image(png.height, png.width, 3);
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        image.data[i] = buffer[i] / 255.0;
    }
    return image;
}

void write_png(const std::filesystem::path& path, const Image& image)
{
    if (image.channels != 3 && image.channels != 1) {
        throw InputError("write_png supports 1 or 3 channels");
    }
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buffer(image.data.size());
    std::transform(image.data.begin(), image.data.end(), buffer.begin(), to_byte);
    if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        throw InputError("cannot write PNG " + path.string() + ": " + png.message);
    }
}

Mask read_mask_png(const std::filesystem::path& path)
{
    const Image rgb = read_png(path);
    Mask m(static_cast<Eigen::Index>(rgb.height), static_cast<Eigen::Index>(rgb.width));
    for (std::size_t y = 0; y < rgb.height; ++y) {
        for (std::size_t x = 0; x < rgb.width; ++x) {
            m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) = rgb.at(y, x, 0);
        }
    }
    return m;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask)
{
    Image gray(static_cast<std::size_t>(mask.rows()), static_cast<std::size_t>(mask.cols()), 1);
    for (Eigen::Index y = 0; y < mask.rows(); ++y) {
        for (Eigen::Index x = 0; x < mask.cols(); ++x) {
            gray.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0) = mask(y, x);
        }
    }
    write_png(path, gray);
}

double max_abs_diff(const Image& a, const Image& b)
{
    if (!a.same_shape(b)) {
        throw ShapeError("image shapes differ");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

} // namespace morphgen
