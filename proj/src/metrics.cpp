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

#include "beamadv/metrics.hpp"

#include "beamadv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace beamadv
{

MseResult mse(const Matrix &y, const Matrix &y_hat)
{
    require(y.rows() == y_hat.rows() && y.cols() == y_hat.cols(), ErrorCode::dimension_mismatch,
            "mse: shapes " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) + " and " +
                std::to_string(y_hat.rows()) + "x" + std::to_string(y_hat.cols()) + " differ");
    require(y.rows() > 0 && y.cols() > 0, ErrorCode::invalid_argument, "mse: empty input");
    MseResult out;
    out.per_sample.resize(y.rows());
    double total = 0.0;
    for (std::size_t r = 0; r < y.rows(); ++r)
    {
        auto a = y.row(r);
        auto b = y_hat.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c)
        {
            const double d = a[c] - b[c];
            s += d * d;
        }
        out.per_sample[r] = s / static_cast<double>(a.size());
        total += out.per_sample[r];
    }
    out.mean = total / static_cast<double>(y.rows());
    return out;
}

namespace
{

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x)
{
    constexpr int max_iterations = 10000;
    constexpr double tolerance = 1e-12;
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iterations; ++m)
    {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < tolerance)
            return h;
    }
    fail(ErrorCode::numeric, "incomplete beta continued fraction did not converge");
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x)
{
    require(a > 0.0 && b > 0.0, ErrorCode::invalid_argument, "incomplete beta needs a, b > 0");
    require(x >= 0.0 && x <= 1.0, ErrorCode::invalid_argument, "incomplete beta needs x in [0, 1]");
    if (x == 0.0 || x == 1.0)
        return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The fraction converges fast for x < (a+1)/(a+b+2); use the symmetry otherwise.
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof)
{
    require(dof > 0.0, ErrorCode::invalid_argument, "t distribution needs positive degrees of freedom");
    if (std::isinf(t))
        return 0.0;
    const double x = dof / (dof + t * t);
    return std::clamp(regularized_incomplete_beta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys)
{
    require(xs.size() == ys.size(), ErrorCode::dimension_mismatch, "pearson: series lengths differ");
    require(xs.size() >= 3, ErrorCode::invalid_argument, "pearson: needs at least 3 points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    require(sxx > 0.0 && syy > 0.0, ErrorCode::numeric, "undefined correlation: a series is constant");
    CorrelationResult out;
    out.n = xs.size();
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double dof = n - 2.0;
    if (std::abs(out.r) == 1.0)
        out.p = 0.0;
    else
        out.p = student_t_two_sided_p(out.r * std::sqrt(dof / (1.0 - out.r * out.r)), dof);
    return out;
}

Histogram histogram(std::span<const double> values, std::size_t num_bins)
{
    require(!values.empty(), ErrorCode::invalid_argument, "histogram: empty input");
    require(num_bins >= 1, ErrorCode::invalid_argument, "histogram: needs at least one bin");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it;
    double hi = *hi_it;
    require(std::isfinite(lo) && std::isfinite(hi), ErrorCode::numeric, "histogram: non-finite value");
    if (lo == hi)
    {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.n = values.size();
    h.counts.assign(num_bins, 0);
    h.bin_edges.resize(num_bins + 1);
    const double width = (hi - lo) / static_cast<double>(num_bins);
    for (std::size_t i = 0; i <= num_bins; ++i)
        h.bin_edges[i] = lo + width * static_cast<double>(i);
    h.bin_edges.back() = hi;
    for (double v : values)
    {
        auto bin = static_cast<std::size_t>((v - lo) / width);
        ++h.counts[std::min(bin, num_bins - 1)];
    }
    double sum = 0.0;
    for (double v : values)
        sum += v;
    h.mean = sum / static_cast<double>(h.n);
    double sq = 0.0;
    for (double v : values)
        sq += (v - h.mean) * (v - h.mean);
    h.std = std::sqrt(sq / static_cast<double>(h.n));
    return h;
}

} // namespace beamadv
