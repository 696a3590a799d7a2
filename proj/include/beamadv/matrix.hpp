// SPDX-License-Identifier: Apache-2.0
//
// beamadv: adversarial robustness laboratory for mmWave beam prediction
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef BEAMADV_MATRIX_HPP
#define BEAMADV_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace beamadv
{

/// Dense row-major matrix of doubles. Rows of a batch are samples.
class Matrix
{
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    /// Row-list literal, e.g. Matrix{{1, 2}, {3, 4}}. All rows must match in width.
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix row_vector(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double &operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double *data() noexcept { return data_.data(); }
    const double *data() const noexcept { return data_.data(); }

    void fill(double v);
    bool all_finite() const noexcept;

    /// Copy of the listed rows, in order.
    Matrix select_rows(std::span<const std::size_t> indices) const;
    Matrix transposed() const;

    friend bool operator==(const Matrix &a, const Matrix &b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Products. Each output row depends only on the matching row of the left
// operand and is computed with the same rounding sequence regardless of how
// many rows are in the batch.

/// a * b
Matrix matmul(const Matrix &a, const Matrix &b);
/// a^T * b
Matrix matmul_tn(const Matrix &a, const Matrix &b);
/// a * b^T
Matrix matmul_nt(const Matrix &a, const Matrix &b);

/// Stacks two matrices with equal column counts.
Matrix vstack(const Matrix &top, const Matrix &bottom);

} // namespace beamadv

#endif
