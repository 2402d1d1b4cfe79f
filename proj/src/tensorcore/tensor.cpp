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

#include "morphgen/tensor.hpp"

#include "morphgen/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace morphgen::tc {

std::size_t element_count(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string to_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (element_count(shape_) != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + to_string(shape_));
    }
}

Tensor Tensor::vector(std::initializer_list<double> values)
{
    return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::from_matrix(const Eigen::MatrixXd& m)
{
    Tensor t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    t.as_matrix(m.rows(), m.cols()) = m;
    return t;
}

Tensor Tensor::from_vector(const Eigen::VectorXd& v)
{
    Tensor t(Shape{static_cast<std::size_t>(v.size())});
    t.as_vector() = v;
    return t;
}

double Tensor::item() const
{
    if (data_.size() != 1) {
        throw ShapeError("item() on tensor of shape " + to_string(shape_));
    }
    return data_.front();
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
Tensor::as_matrix(std::size_t rows, std::size_t cols) const
{
    if (rows * cols != data_.size()) {
        throw ShapeError("cannot view " + to_string(shape_) + " as " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
    return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
Tensor::as_matrix(std::size_t rows, std::size_t cols)
{
    if (rows * cols != data_.size()) {
        throw ShapeError("cannot view " + to_string(shape_) + " as " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
    return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<const Eigen::VectorXd> Tensor::as_vector() const
{
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Eigen::Map<Eigen::VectorXd> Tensor::as_vector()
{
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Eigen::MatrixXd Tensor::to_matrix() const
{
    if (rank() != 2) {
        throw ShapeError("to_matrix() needs a rank-2 tensor, got " + to_string(shape_));
    }
    return as_matrix(shape_[0], shape_[1]);
}

Tensor Tensor::reshaped(Shape shape) const
{
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape()) {
        throw ShapeError("max_abs_diff: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

} // namespace morphgen::tc
