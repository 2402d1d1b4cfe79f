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

#include "morphgen/bundle.hpp"

#include "morphgen/error.hpp"
#include "morphgen/mftn.hpp"

#include <fstream>

namespace morphgen {

using json = nlohmann::json;

const tc::Tensor& TensorBundle::at(const std::string& name) const
{
    for (const auto& [n, t] : tensors) {
        if (n == name) {
            return t;
        }
    }
    throw InputError(format + " bundle has no tensor '" + name + "'");
}

std::filesystem::path sidecar_path(const std::filesystem::path& path)
{
    return path.string() + ".json";
}

void write_bundle(const std::filesystem::path& path, const TensorBundle& bundle)
{
    std::vector<double> flat;
    json layout = json::array();
    for (const auto& [name, t] : bundle.tensors) {
        layout.push_back({{"name", name}, {"shape", t.shape()}});
        flat.insert(flat.end(), t.storage().begin(), t.storage().end());
    }
    const std::size_t n = flat.size();
    write_mftn(path, tc::Tensor({n}, std::move(flat)), bundle.dtype);
    const json doc = {{"format", bundle.format}, {"version", 1}, {"meta", bundle.meta}, {"tensors", layout}};
    std::ofstream f(sidecar_path(path), std::ios::trunc);
    if (!f) {
        throw InputError("cannot write " + sidecar_path(path).string());
    }
    f << doc.dump(2) << "\n";
}

TensorBundle read_bundle(const std::filesystem::path& path, const std::string& expected_format)
{
    const std::filesystem::path side = sidecar_path(path);
    std::ifstream f(side);
    if (!f) {
        throw InputError("missing sidecar " + side.string());
    }
    try {
        const json doc = json::parse(f);
        TensorBundle bundle;
        bundle.format = doc.at("format").get<std::string>();
        if (bundle.format != expected_format) {
            throw InputError(side.string() + ": format is '" + bundle.format + "', expected '" + expected_format +
                             "'");
        }
        bundle.meta = doc.at("meta");
        const tc::Tensor flat = read_mftn(path);
        std::size_t offset = 0;
        for (const json& entry : doc.at("tensors")) {
            tc::Shape shape = entry.at("shape").get<tc::Shape>();
            const std::size_t n = tc::element_count(shape);
            if (offset + n > flat.size()) {
                throw InputError(path.string() + ": payload shorter than the sidecar layout");
            }
            const auto first = flat.storage().begin() + static_cast<std::ptrdiff_t>(offset);
            bundle.tensors.emplace_back(entry.at("name").get<std::string>(),
                                        tc::Tensor(std::move(shape), std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n))));
            offset += n;
        }
        if (offset != flat.size()) {
            throw InputError(path.string() + ": payload longer than the sidecar layout");
        }
        return bundle;
    } catch (const json::exception& e) {
        throw InputError(side.string() + ": " + e.what());
    }
}

} // namespace morphgen
