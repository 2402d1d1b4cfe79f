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

#include "morphgen/mftn.hpp"
#include "morphgen/tensor.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace morphgen {

/// Named tensors stored as one flat MFTN file plus a `<path>.json` sidecar
/// holding `meta` and the name/shape layout.
struct TensorBundle {
    std::string format;
    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, tc::Tensor>> tensors;
    MftnDtype dtype = MftnDtype::F32;

    /// Throws InputError if the name is absent.
    const tc::Tensor& at(const std::string& name) const;
};

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void write_bundle(const std::filesystem::path& path, const TensorBundle& bundle);

/// Throws InputError on a missing or malformed sidecar, a format mismatch, or
/// a payload that disagrees with the layout.
TensorBundle read_bundle(const std::filesystem::path& path, const std::string& expected_format);

} // namespace morphgen
