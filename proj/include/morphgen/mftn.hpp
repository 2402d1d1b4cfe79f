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

#include <cstdint>
#include <filesystem>
#include <vector>

namespace morphgen {

// MFTN tensor files: "MFTN", version 0x01, dtype byte, rank byte,
// rank x u32 LE extents, then the row-major LE payload.
enum class MftnDtype : std::uint8_t { F32 = 0x01, F64 = 0x02 };

std::vector<std::uint8_t> encode_mftn(const tc::Tensor& tensor, MftnDtype dtype = MftnDtype::F32);
tc::Tensor decode_mftn(const std::vector<std::uint8_t>& bytes);

void write_mftn(const std::filesystem::path& path, const tc::Tensor& tensor, MftnDtype dtype = MftnDtype::F32);
tc::Tensor read_mftn(const std::filesystem::path& path);

/// Rounds every element to the nearest f32, i.e. what a write/read cycle yields.
tc::Tensor round_to_f32(tc::Tensor tensor);

} // namespace morphgen
