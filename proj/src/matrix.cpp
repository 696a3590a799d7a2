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

#include "beamadv/matrix.hpp"

#include "beamadv/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace beamadv
{

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    require(data_.size() == rows_ * cols_, ErrorCode::dimension_mismatch,
            "matrix data length " + std::to_string(data_.size()) + " does not match " +
                std::to_string(rows_) + "x" + std::to_string(cols_));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto &r : rows)
    {
        require(r.size() == cols_, ErrorCode::dimension_mismatch, "ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::row_vector(std::span<const double> values)
{
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double v)
{
    std::fill(data_.begin(), data_.end(), v);
}

bool Matrix::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const
{
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i)
    {
        require(indices[i] < rows_, ErrorCode::invalid_argument,
                "row index " + std::to_string(indices[i]) + " out of range");
        std::copy_n(data_.data() + indices[i] * cols_, cols_, out.data() + i * cols_);
    }
    return out;
}

Matrix Matrix::transposed() const
{
    Matrix out(cols_, rows_);
    constexpr std::size_t tile = 32;
    for (std::size_t r0 = 0; r0 < rows_; r0 += tile)
        for (std::size_t c0 = 0; c0 < cols_; c0 += tile)
            for (std::size_t r = r0; r < std::min(rows_, r0 + tile); ++r)
                for (std::size_t c = c0; c < std::min(cols_, c0 + tile); ++c)
                    out.data_[c * rows_ + r] = data_[r * cols_ + c];
    return out;
}

namespace
{

constexpr std::size_t k_block = 256;
constexpr std::size_t row_block = 4;
constexpr std::size_t col_block = 32;

// C = A * B for row-major A (m x k), B (k x n). Every C element accumulates
// its k products in ascending order with fma, in both the register-tiled and
// the edge paths.
void gemm(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c)
{
    std::fill(c, c + m * n, 0.0);
    for (std::size_t k0 = 0; k0 < k; k0 += k_block)
    {
        const std::size_t k1 = std::min(k, k0 + k_block);
        for (std::size_t j0 = 0; j0 < n; j0 += col_block)
        {
            const std::size_t jw = std::min(col_block, n - j0);
            std::size_t i = 0;
            if (jw == col_block)
            {
                for (; i + row_block <= m; i += row_block)
                {
                    double acc[row_block][col_block];
                    for (std::size_t r = 0; r < row_block; ++r)
                        for (std::size_t j = 0; j < col_block; ++j)
                            acc[r][j] = c[(i + r) * n + j0 + j];
                    for (std::size_t kk = k0; kk < k1; ++kk)
                    {
                        const double *brow = b + kk * n + j0;
                        for (std::size_t r = 0; r < row_block; ++r)
                        {
                            const double av = a[(i + r) * k + kk];
#pragma GCC ivdep
                            for (std::size_t j = 0; j < col_block; ++j)
                                acc[r][j] = std::fma(av, brow[j], acc[r][j]);
                        }
                    }
                    for (std::size_t r = 0; r < row_block; ++r)
                        for (std::size_t j = 0; j < col_block; ++j)
                            c[(i + r) * n + j0 + j] = acc[r][j];
                }
            }
            for (; i < m; ++i)
            {
                double *crow = c + i * n + j0;
                for (std::size_t kk = k0; kk < k1; ++kk)
                {
                    const double av = a[i * k + kk];
                    const double *brow = b + kk * n + j0;
#pragma GCC ivdep
                    for (std::size_t j = 0; j < jw; ++j)
                        crow[j] = std::fma(av, brow[j], crow[j]);
                }
            }
        }
    }
}

void check_inner(std::size_t lhs, std::size_t rhs, const char *what)
{
    require(lhs == rhs, ErrorCode::dimension_mismatch,
            std::string(what) + ": inner dimensions " + std::to_string(lhs) + " and " +
                std::to_string(rhs) + " differ");
}

} // namespace

Matrix matmul(const Matrix &a, const Matrix &b)
{
    check_inner(a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    gemm(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data());
    return c;
}

Matrix matmul_tn(const Matrix &a, const Matrix &b)
{
    check_inner(a.rows(), b.rows(), "matmul_tn");
    const Matrix at = a.transposed();
    Matrix c(at.rows(), b.cols());
    gemm(at.rows(), b.cols(), at.cols(), at.data(), b.data(), c.data());
    return c;
}

Matrix matmul_nt(const Matrix &a, const Matrix &b)
{
    check_inner(a.cols(), b.cols(), "matmul_nt");
    const Matrix bt = b.transposed();
    Matrix c(a.rows(), bt.cols());
    gemm(a.rows(), bt.cols(), a.cols(), a.data(), bt.data(), c.data());
    return c;
}

Matrix vstack(const Matrix &top, const Matrix &bottom)
{
    require(top.cols() == bottom.cols(), ErrorCode::dimension_mismatch, "vstack: column counts differ");
    std::vector<double> data(top.values().begin(), top.values().end());
    data.insert(data.end(), bottom.values().begin(), bottom.values().end());
    return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

} // namespace beamadv
