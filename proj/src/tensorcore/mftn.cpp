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

#include "morphgen/mftn.hpp"

#include "morphgen/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace morphgen {
namespace {

constexpr std::uint8_t kVersion = 0x01;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
    }
}

std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t at)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

} // namespace

std::vector<std::uint8_t> encode_mftn(const tc::Tensor& tensor, MftnDtype dtype)
{
    if (tensor.rank() > 255) {
        throw InputError("MFTN supports rank <= 255");
    }
    std::vector<std::uint8_t> out = {'M', 'F', 'T', 'N', kVersion, static_cast<std::uint8_t>(dtype),
                                     static_cast<std::uint8_t>(tensor.rank())};
    for (const std::size_t d : tensor.shape()) {
        if (d > std::numeric_limits<std::uint32_t>::max()) {
            throw InputError("MFTN extent exceeds u32");
        }
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    if (dtype == MftnDtype::F64) {
        out.reserve(out.size() + 8 * tensor.size());
        for (const double v : tensor.data()) {
            put_u64(out, std::bit_cast<std::uint64_t>(v));
        }
        return out;
    }
    out.reserve(out.size() + 4 * tensor.size());
    for (const double v : tensor.data()) {
        if (std::isfinite(v) && std::abs(v) > std::numeric_limits<float>::max()) {
            throw InputError("MFTN: value out of f32 range");
        }
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

tc::Tensor decode_mftn(const std::vector<std::uint8_t>& in)
{
    if (in.size() < 7 || std::memcmp(in.data(), "MFTN", 4) != 0) {
        throw InputError("not an MFTN file (bad magic)");
    }
    if (in[4] != kVersion) {
        throw InputError("unsupported MFTN version " + std::to_string(in[4]));
    }
    const std::uint8_t dtype = in[5];
    if (dtype != static_cast<std::uint8_t>(MftnDtype::F32) && dtype != static_cast<std::uint8_t>(MftnDtype::F64)) {
        throw InputError("unsupported MFTN dtype " + std::to_string(in[5]));
    }
    const std::size_t rank = in[6];
    std::size_t at = 7;
    if (in.size() < at + 4 * rank) {
        throw InputError("truncated MFTN header");
    }
    tc::Shape shape(rank);
    for (std::size_t i = 0; i < rank; ++i, at += 4) {
        shape[i] = get_u32(in, at);
    }
    const std::size_t n = tc::element_count(shape);
    const std::size_t width = dtype == static_cast<std::uint8_t>(MftnDtype::F64) ? 8 : 4;
    if (in.size() != at + width * n) {
        throw InputError("MFTN payload length does not match shape " + tc::to_string(shape));
    }
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i, at += width) {
        data[i] = width == 8 ? std::bit_cast<double>(get_u64(in, at))
                             : static_cast<double>(std::bit_cast<float>(get_u32(in, at)));
    }
    return tc::Tensor(std::move(shape), std::move(data));
}

void write_mftn(const std::filesystem::path& path, const tc::Tensor& tensor, MftnDtype dtype)
{
    const auto bytes = encode_mftn(tensor, dtype);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw InputError("cannot open " + path.string() + " for writing");
    }
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw InputError("failed writing " + path.string());
    }
}

tc::Tensor read_mftn(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw InputError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    try {
        return decode_mftn(bytes);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

tc::Tensor round_to_f32(tc::Tensor tensor)
{
    for (double& v : tensor.storage()) {
        v = static_cast<double>(static_cast<float>(v));
    }
    return tensor;
}

} // namespace morphgen
