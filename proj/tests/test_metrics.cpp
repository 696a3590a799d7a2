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

#include "doctest.h"

#include "beamadv/error.hpp"
#include "beamadv/metrics.hpp"
#include "beamadv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace beamadv;

TEST_CASE("mse of identical matrices is zero")
{
    const Matrix y{{0.1, 0.2}, {0.3, 0.4}};
    const auto r = mse(y, y);
    CHECK(r.mean == 0.0);
    CHECK(r.per_sample == std::vector<double>{0.0, 0.0});
}

TEST_CASE("mse examples")
{
    CHECK(mse(Matrix{{0.0, 0.0}}, Matrix{{1.0, 1.0}}).mean == 1.0);
    const auto r = mse(Matrix{{0.0}, {2.0}}, Matrix{{1.0}, {0.0}});
    CHECK(r.per_sample == std::vector<double>{1.0, 4.0});
    CHECK(r.mean == 2.5);
}

TEST_CASE("mse rejects bad shapes")
{
    CHECK_THROWS_AS(mse(Matrix(2, 2, 0.0), Matrix(2, 3, 0.0)), Error);
    CHECK_THROWS_AS(mse(Matrix(0, 2, 0.0), Matrix(0, 2, 0.0)), Error);
}

TEST_CASE("incomplete beta against reference values")
{
    struct Case
    {
        double a, b, x, expected;
    };
    // Reference values from an independent double-precision special-function library.
    const std::vector<Case> cases{{1.5, 0.5, 0.3, 0.07727428998754561},
                                  {2.0, 0.5, 0.9, 0.5414697392755851},
                                  {10.0, 0.5, 0.05, 1.761178743259099e-14},
                                  {0.5, 0.5, 0.5, 0.5},
                                  {50.0, 0.5, 0.99, 0.3173043978741973}};
    for (const auto &c : cases)
    {
        CAPTURE(c.a);
        CAPTURE(c.x);
        CHECK(regularized_incomplete_beta(c.a, c.b, c.x) == doctest::Approx(c.expected).epsilon(1e-10));
    }
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), Error);
    CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), Error);
}

TEST_CASE("incomplete beta closed forms")
{
    // I_x(1, 1) = x and I_x(a, 1) = x^a.
    for (double x : {0.1, 0.37, 0.5, 0.81})
    {
        CHECK(regularized_incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
        CHECK(regularized_incomplete_beta(3.5, 1.0, x) == doctest::Approx(std::pow(x, 3.5)).epsilon(1e-11));
    }
}

TEST_CASE("student t with one degree of freedom is Cauchy")
{
    for (double t : {0.2, 1.0, 3.0, 40.0})
    {
        const double expected = 1.0 - 2.0 * std::atan(t) / std::acos(-1.0);
        CHECK(student_t_two_sided_p(t, 1.0) == doctest::Approx(expected).epsilon(1e-11));
    }
}

TEST_CASE("pearson perfect correlations")
{
    const std::vector<double> xs{0.01, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> up, down;
    for (double x : xs)
    {
        up.push_back(2.0 * x + 1.0);
        down.push_back(-x);
    }
    const auto a = pearson(xs, up);
    CHECK(std::abs(a.r - 1.0) <= 1e-12);
    CHECK(a.p < 1e-12);
    CHECK(a.n == 5);
    CHECK(std::abs(pearson(xs, down).r + 1.0) <= 1e-12);
}

TEST_CASE("pearson against reference values")
{
    struct Case
    {
        std::vector<double> xs, ys;
        double r, p;
    };
    const std::vector<double> eps{0.01, 0.3, 0.5, 0.7, 0.9};
    const std::vector<Case> cases{
        {eps, {0.002, 0.01, 0.03, 0.05, 0.07}, 0.9763514943413734, 0.004350035800404192},
        {eps, {1, 3, 2, 5, 4}, 0.8137445775048162, 0.09375092102090073},
        {eps, {0.5, 0.1, 0.4, 0.2, 0.3}, -0.3565847025021104, 0.5557962501113398},
        {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {1, 2, 2, 4, 3, 6, 5, 8, 9, 7}, 0.9272231675675926, 0.0001123333371873667},
    };
    for (const auto &c : cases)
    {
        const auto res = pearson(c.xs, c.ys);
        CHECK(res.r == doctest::Approx(c.r).epsilon(1e-12));
        CHECK(res.p == doctest::Approx(c.p).epsilon(1e-9));
    }
}

TEST_CASE("pearson symmetry and affine invariance")
{
    Rng rng(91);
    for (int trial = 0; trial < 20; ++trial)
    {
        std::vector<double> xs(12), ys(12), xs2(12), ys2(12);
        for (std::size_t i = 0; i < xs.size(); ++i)
        {
            xs[i] = rng.normal();
            ys[i] = 0.5 * xs[i] + rng.normal();
            xs2[i] = 3.0 * xs[i] - 7.0;
            ys2[i] = 0.25 * ys[i] + 100.0;
        }
        const double r = pearson(xs, ys).r;
        CHECK(std::abs(pearson(ys, xs).r - r) <= 1e-12);
        CHECK(std::abs(pearson(xs2, ys2).r - r) <= 1e-12);
        CHECK(std::abs(r) <= 1.0);
    }
}

TEST_CASE("pearson p-value decreases with |r|")
{
    const std::size_t n = 8;
    std::vector<double> xs(n), noise(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        xs[i] = static_cast<double>(i);
        noise[i] = (i % 2 == 0 ? 1.0 : -1.0) * (i % 3 == 0 ? 2.0 : 1.0);
    }
    std::vector<std::pair<double, double>> grid;
    for (int k = -40; k <= 40; ++k)
    {
        std::vector<double> ys(n);
        for (std::size_t i = 0; i < n; ++i)
            ys[i] = 0.05 * k * xs[i] + noise[i];
        const auto res = pearson(xs, ys);
        CHECK(res.p >= 0.0);
        CHECK(res.p <= 1.0);
        grid.emplace_back(std::abs(res.r), res.p);
    }
    std::sort(grid.begin(), grid.end());
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i].first > grid[i - 1].first)
            CHECK(grid[i].second < grid[i - 1].second);
}

TEST_CASE("pearson errors")
{
    const std::vector<double> xs{1, 2, 3};
    const std::vector<double> flat{4, 4, 4};
    try
    {
        (void)pearson(xs, flat);
        FAIL("expected an error");
    }
    catch (const Error &e)
    {
        CHECK(std::string(e.what()).find("undefined correlation") != std::string::npos);
    }
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(pearson(xs, std::vector<double>{1, 2}), Error);
}

TEST_CASE("histogram examples")
{
    std::vector<double> v(10);
    std::iota(v.begin(), v.end(), 0.0);
    const auto h = histogram(v, 2);
    CHECK(h.counts == std::vector<std::size_t>{5, 5});
    CHECK(h.bin_edges == std::vector<double>{0.0, 4.5, 9.0});
    CHECK(h.n == 10);
    CHECK(h.mean == doctest::Approx(4.5));

    const std::vector<double> same(7, 0.25);
    const auto s = histogram(same, 5);
    std::size_t occupied = 0;
    for (auto c : s.counts)
        if (c != 0)
        {
            ++occupied;
            CHECK(c == 7);
        }
    CHECK(occupied == 1);
    CHECK(s.std == 0.0);
    CHECK_THROWS_AS(histogram(std::vector<double>{}, 3), Error);
    CHECK_THROWS_AS(histogram(v, 0), Error);
}

TEST_CASE("histogram partitions random inputs")
{
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial)
    {
        std::vector<double> v(1 + rng.below(200));
        for (auto &x : v)
            x = rng.exponential(3.0);
        const auto h = histogram(v);
        CHECK(h.counts.size() == default_histogram_bins);
        CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == v.size());
        for (std::size_t i = 1; i < h.bin_edges.size(); ++i)
            CHECK(h.bin_edges[i] > h.bin_edges[i - 1]);
    }
}
