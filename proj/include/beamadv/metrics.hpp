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

#ifndef BEAMADV_METRICS_HPP
#define BEAMADV_METRICS_HPP

#include "beamadv/matrix.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace beamadv
{

struct MseResult
{
    double mean = 0.0;
    std::vector<double> per_sample;
};

/// Per-sample mean of squared component differences, and their average.
MseResult mse(const Matrix &y, const Matrix &y_hat);

struct CorrelationResult
{
    double r = 0.0;
    /// Two-sided p-value of the Student-t test for r != 0.
    double p = 1.0;
    std::size_t n = 0;
};

/// Product-moment correlation. Needs n >= 3 and non-constant series.
CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys);

/// Regularized incomplete beta I_x(a, b), continued fraction to 1e-12.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `dof` degrees.
double student_t_two_sided_p(double t, double dof);

struct Histogram
{
    std::vector<double> bin_edges; // num_bins + 1, ascending
    std::vector<std::size_t> counts;
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0; // population standard deviation

    friend bool operator==(const Histogram &, const Histogram &) = default;
};

inline constexpr std::size_t default_histogram_bins = 30;

/// Equal-width bins over [min, max]; the max value lands in the last bin.
/// Identical values get one unit-wide bin range centred on the value.
Histogram histogram(std::span<const double> values, std::size_t num_bins = default_histogram_bins);

} // namespace beamadv

#endif
